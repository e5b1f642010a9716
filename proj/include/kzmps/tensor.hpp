#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace kzmps {

using cplx = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;
using RowMatrixC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition (bad shapes, invalid parameters, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Iterative method ran out of iterations or a consistency check failed.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Z_q charge labels attached to the legs of a tensor.
///
/// A tensor is charge covariant when every nonzero entry has leg labels
/// summing to 0 mod `modulus`. Incoming legs therefore carry negated labels,
/// and two legs may be contracted only if their labels are complementary.
struct LegCharges {
  int modulus = 1;
  std::vector<std::vector<int>> labels;  // labels[leg][index] in [0, modulus)

  bool operator==(const LegCharges&) const = default;
};

inline int mod_charge(int c, int q) {
  int r = c % q;
  return r < 0 ? r + q : r;
}

/// Dense complex tensor, row-major (the last leg varies fastest).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<cplx> data);

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t leg) const { return shape_.at(leg); }
  std::size_t size() const { return data_.size(); }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  cplx& at(std::span<const std::size_t> index);
  const cplx& at(std::span<const std::size_t> index) const;
  cplx& operator()(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  const cplx& operator()(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  bool has_charges() const { return charges_.has_value(); }
  const std::optional<LegCharges>& charges() const { return charges_; }
  /// Attach charge labels; throws if they do not match the shape.
  void set_charges(LegCharges charges);
  void clear_charges() { charges_.reset(); }

  /// Largest magnitude of an entry whose leg labels do not sum to 0 mod q.
  /// Zero for uncharged tensors.
  double covariance_violation() const;

  /// Copy as a matrix: rows are the first `split` legs, columns the rest.
  MatrixC to_matrix(std::size_t split) const;
  static Tensor from_matrix(const MatrixC& m, std::vector<std::size_t> shape);

  /// Reorder legs: result leg i is this tensor's leg perm[i].
  Tensor permuted(std::span<const std::size_t> perm) const;
  Tensor reshaped(std::vector<std::size_t> shape) const;

  bool operator==(const Tensor&) const = default;

  Tensor& operator*=(cplx alpha);
  friend Tensor operator*(cplx alpha, Tensor t) { return t *= alpha; }

  double max_abs_diff(const Tensor& other) const;

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  std::vector<std::size_t> shape_;
  std::vector<cplx> data_;
  std::optional<LegCharges> charges_;
};

/// Contract `a` and `b` over the given (leg of a, leg of b) pairs.
/// Result legs are the unpaired legs of a followed by those of b.
Tensor contract(const Tensor& a, const Tensor& b,
                std::span<const std::pair<std::size_t, std::size_t>> pairs);

inline Tensor contract(const Tensor& a, const Tensor& b,
                       std::initializer_list<std::pair<std::size_t, std::size_t>> pairs) {
  return contract(a, b, std::span<const std::pair<std::size_t, std::size_t>>(pairs.begin(), pairs.size()));
}

}  // namespace kzmps
