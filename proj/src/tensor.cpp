#include "kzmps/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace kzmps {

namespace {

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// Row-major strides.
std::vector<std::size_t> strides_of(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), cplx{0.0, 0.0}) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw InvalidArgument("Tensor: data length does not match shape");
  }
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw InvalidArgument("Tensor: wrong number of indices");
  std::size_t off = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) throw InvalidArgument("Tensor: index out of range");
    off = off * shape_[i] + index[i];
  }
  return off;
}

cplx& Tensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
const cplx& Tensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

void Tensor::set_charges(LegCharges charges) {
  if (charges.modulus < 1) throw InvalidArgument("Tensor: charge modulus must be positive");
  if (charges.labels.size() != shape_.size()) {
    throw InvalidArgument("Tensor: one charge list per leg required");
  }
  for (std::size_t leg = 0; leg < shape_.size(); ++leg) {
    if (charges.labels[leg].size() != shape_[leg]) {
      throw InvalidArgument("Tensor: charge list length differs from leg dimension");
    }
    for (int c : charges.labels[leg]) {
      if (c < 0 || c >= charges.modulus) throw InvalidArgument("Tensor: charge label out of range");
    }
  }
  charges_ = std::move(charges);
}

double Tensor::covariance_violation() const {
  if (!charges_ || charges_->modulus == 1 || data_.empty()) return 0.0;
  const int q = charges_->modulus;
  std::vector<std::size_t> idx(shape_.size(), 0);
  double worst = 0.0;
  for (std::size_t off = 0; off < data_.size(); ++off) {
    int total = 0;
    for (std::size_t leg = 0; leg < idx.size(); ++leg) total += charges_->labels[leg][idx[leg]];
    if (total % q != 0) worst = std::max(worst, std::abs(data_[off]));
    for (std::size_t leg = idx.size(); leg-- > 0;) {
      if (++idx[leg] < shape_[leg]) break;
      idx[leg] = 0;
    }
  }
  return worst;
}

MatrixC Tensor::to_matrix(std::size_t split) const {
  if (split > shape_.size()) throw InvalidArgument("Tensor::to_matrix: split beyond rank");
  const auto rows = static_cast<Eigen::Index>(product(std::span(shape_).first(split)));
  const auto cols = static_cast<Eigen::Index>(product(std::span(shape_).subspan(split)));
  return Eigen::Map<const RowMatrixC>(data_.data(), rows, cols);
}

Tensor Tensor::from_matrix(const MatrixC& m, std::vector<std::size_t> shape) {
  if (product(shape) != static_cast<std::size_t>(m.size())) {
    throw InvalidArgument("Tensor::from_matrix: shape does not match matrix size");
  }
  Tensor t(std::move(shape));
  Eigen::Map<RowMatrixC>(t.data_.data(), m.rows(), m.cols()) = m;
  return t;
}

Tensor Tensor::permuted(std::span<const std::size_t> perm) const {
  const std::size_t r = shape_.size();
  if (perm.size() != r) throw InvalidArgument("Tensor::permuted: permutation has wrong length");
  std::vector<bool> seen(r, false);
  for (auto p : perm) {
    if (p >= r || seen[p]) throw InvalidArgument("Tensor::permuted: not a permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> new_shape(r);
  for (std::size_t i = 0; i < r; ++i) new_shape[i] = shape_[perm[i]];
  Tensor out(new_shape);
  const auto old_strides = strides_of(shape_);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) src_stride[i] = old_strides[perm[i]];

  std::vector<std::size_t> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t dst = 0; dst < out.data_.size(); ++dst) {
    out.data_[dst] = data_[src];
    for (std::size_t leg = r; leg-- > 0;) {
      src += src_stride[leg];
      if (++idx[leg] < new_shape[leg]) break;
      src -= src_stride[leg] * new_shape[leg];
      idx[leg] = 0;
    }
  }
  if (charges_) {
    LegCharges c{charges_->modulus, {}};
    for (std::size_t i = 0; i < r; ++i) c.labels.push_back(charges_->labels[perm[i]]);
    out.charges_ = std::move(c);
  }
  return out;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  return Tensor(std::move(shape), data_);
}

Tensor& Tensor::operator*=(cplx alpha) {
  for (auto& x : data_) x *= alpha;
  return *this;
}

double Tensor::max_abs_diff(const Tensor& other) const {
  if (shape_ != other.shape_) throw InvalidArgument("Tensor::max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

Tensor contract(const Tensor& a, const Tensor& b,
                std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  const bool charged = a.has_charges() && b.has_charges();
  if (a.has_charges() != b.has_charges()) {
    throw InvalidArgument("contract: both or neither operand must carry charges");
  }
  if (charged && a.charges()->modulus != b.charges()->modulus) {
    throw InvalidArgument("contract: charge moduli differ");
  }
  std::vector<bool> a_paired(a.rank(), false), b_paired(b.rank(), false);
  for (auto [la, lb] : pairs) {
    if (la >= a.rank() || lb >= b.rank()) throw InvalidArgument("contract: leg index out of range");
    if (a_paired[la] || b_paired[lb]) throw InvalidArgument("contract: leg paired twice");
    a_paired[la] = b_paired[lb] = true;
    if (a.dim(la) != b.dim(lb)) throw InvalidArgument("contract: dimension mismatch on paired legs");
    if (charged) {
      const int q = a.charges()->modulus;
      const auto& ca = a.charges()->labels[la];
      const auto& cb = b.charges()->labels[lb];
      for (std::size_t i = 0; i < ca.size(); ++i) {
        if (mod_charge(ca[i] + cb[i], q) != 0) {
          throw InvalidArgument("contract: charge mismatch on paired legs");
        }
      }
    }
  }

  std::vector<std::size_t> perm_a, perm_b, out_shape;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (!a_paired[i]) {
      perm_a.push_back(i);
      out_shape.push_back(a.dim(i));
    }
  }
  const std::size_t free_a = perm_a.size();
  for (auto [la, lb] : pairs) {
    perm_a.push_back(la);
    perm_b.push_back(lb);
  }
  for (std::size_t i = 0; i < b.rank(); ++i) {
    if (!b_paired[i]) {
      perm_b.push_back(i);
      out_shape.push_back(b.dim(i));
    }
  }

  const Tensor ap = a.permuted(perm_a);
  const Tensor bp = b.permuted(perm_b);
  const MatrixC prod = ap.to_matrix(free_a) * bp.to_matrix(pairs.size());
  Tensor out = Tensor::from_matrix(prod, out_shape);
  if (charged) {
    LegCharges c{a.charges()->modulus, {}};
    for (std::size_t i = 0; i < free_a; ++i) c.labels.push_back(ap.charges()->labels[i]);
    for (std::size_t i = pairs.size(); i < bp.rank(); ++i) c.labels.push_back(bp.charges()->labels[i]);
    out.set_charges(std::move(c));
  }
  return out;
}

}  // namespace kzmps
