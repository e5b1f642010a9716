#pragma once

#include <random>
#include <vector>

#include "kzmps/evolution.hpp"

namespace kzmps::test {

/// Random site tensor (l, d, r) obeying l_r = l_l + c_s mod q.
inline Tensor random_site(const std::vector<int>& left, const std::vector<int>& phys, const std::vector<int>& right,
                          int q, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Tensor t({left.size(), phys.size(), right.size()});
  for (std::size_t a = 0; a < left.size(); ++a)
    for (std::size_t s = 0; s < phys.size(); ++s)
      for (std::size_t c = 0; c < right.size(); ++c)
        if (q <= 1 || mod_charge(left[a] + phys[s], q) == right[c]) t({a, s, c}) = {g(rng), g(rng)};
  return t;
}

inline std::vector<int> labels(std::size_t n, int q, int offset = 0) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = q > 1 ? mod_charge(static_cast<int>(i) + offset, q) : 0;
  return out;
}

/// Random canonical two-site iMPS with bond dimension about chi.
inline UniformMPS random_mps(const ModelSpec& model, std::size_t chi, std::mt19937& rng) {
  const auto phys = charge_table(model);
  const int q = model.q;
  const auto ba = labels(chi, q), ab = labels(chi, q, 1);
  const auto a = random_site(ba, phys, ab, q, rng);
  const auto b = random_site(ab, phys, ba, q, rng);
  return canonicalize(a, b, model.physical_dim(), q, phys, ba, ab, 1e-14);
}

}  // namespace kzmps::test
