#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include "kzmps/oracle.hpp"

namespace kzmps {

namespace {

using std::numbers::pi;
using Spinor = std::array<cplx, 2>;

// i d/dt psi = h psi with h = 2[(g - J cos k) sz + J sin k sx].
Spinor derivative(double ck, double sk, double v, double t, const Spinor& s) {
  const double J = 1.0 + v * t, g = 1.0 - v * t;
  const double a = 2.0 * (g - J * ck), b = 2.0 * J * sk;
  const cplx mi(0.0, -1.0);
  return {mi * (a * s[0] + b * s[1]), mi * (b * s[0] - a * s[1])};
}

// Eigenvector of [[a, b], [b, -a]] for eigenvalue sign * sqrt(a^2 + b^2).
Spinor eigvec(double a, double b, int sign) {
  const double e = sign * std::hypot(a, b);
  // (a - e) x + b y = 0
  Spinor s;
  if (std::abs(a - e) < 1e-300 && std::abs(b) < 1e-300) {
    s = {sign > 0 ? 1.0 : 0.0, sign > 0 ? 0.0 : 1.0};
    return s;
  }
  double x = b, y = e - a;
  if (std::abs(x) + std::abs(y) < 1e-14 * (std::abs(a) + std::abs(b))) {
    x = e + a;
    y = b;
  }
  const double n = std::hypot(x, y);
  return {x / n, y / n};
}

struct Moments {
  double n, eps, f;
};

Moments simpson(const std::vector<double>& p, const std::vector<double>& energy) {
  const std::size_t m = p.size() - 1;
  const double h = pi / static_cast<double>(m);
  double n = 0, e = 0, f = 0;
  for (std::size_t i = 0; i <= m; ++i) {
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    n += w * p[i];
    e += w * energy[i] * p[i];
    f += w * -std::log1p(-p[i]);
  }
  const double s = h / 3.0;
  return {n * s / pi, e * s / pi, f * s / (2.0 * pi)};
}

}  // namespace

double mode_energy(double k, double J, double g) {
  return 2.0 * std::hypot(g - J * std::cos(k), J * std::sin(k));
}

double mode_excitation(double k, double v, double dt) {
  if (!(v > 0.0) || !(dt > 0.0)) throw InvalidArgument("mode_excitation: v and dt must be positive");
  const double duration = 1.0 / v;
  const long steps = static_cast<long>(std::ceil(duration / dt * (1.0 - 1e-12)));
  const double h = duration / static_cast<double>(steps);
  // Initial couplings (J, g) = (0, 2): h = 4 sz, ground state (0, 1).
  Spinor s = eigvec(4.0, 0.0, -1);
  double t = -duration;
  auto axpy = [](const Spinor& a, cplx c, const Spinor& b) { return Spinor{a[0] + c * b[0], a[1] + c * b[1]}; };
  const double ck = std::cos(k), sk = std::sin(k);
  for (long n = 0; n < steps; ++n) {
    const Spinor k1 = derivative(ck, sk, v, t, s);
    const Spinor k2 = derivative(ck, sk, v, t + 0.5 * h, axpy(s, 0.5 * h, k1));
    const Spinor k3 = derivative(ck, sk, v, t + 0.5 * h, axpy(s, 0.5 * h, k2));
    const Spinor k4 = derivative(ck, sk, v, t + h, axpy(s, h, k3));
    for (int i = 0; i < 2; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = -duration + static_cast<double>(n + 1) * h;
  }
  const double a = 2.0 * (1.0 - std::cos(k)), b = 2.0 * std::sin(k);
  const Spinor ex = eigvec(a, b, +1);
  const double nrm = std::norm(s[0]) + std::norm(s[1]);
  const double p = std::norm(std::conj(ex[0]) * s[0] + std::conj(ex[1]) * s[1]) / nrm;
  if (p < -1e-10 || p > 1.0 + 1e-10) throw ConvergenceError("mode_excitation: probability outside [0, 1]");
  return std::clamp(p, 0.0, 1.0);
}

OracleResult free_fermion_sweep(double v, const FreeFermionOptions& options) {
  if (!(v > 0.0) || !(options.dt > 0.0)) throw InvalidArgument("free_fermion_sweep: v and dt must be positive");
  if (options.points < 3 || options.points % 2 == 0) throw InvalidArgument("free_fermion_sweep: points must be odd");

  auto evaluate = [&](int points, double dt, std::vector<double>& ks, std::vector<double>& ps) {
    const int m = points - 1;
    ks.assign(static_cast<std::size_t>(points), 0.0);
    ps.assign(static_cast<std::size_t>(points), 0.0);
    std::vector<double> energy(static_cast<std::size_t>(points));
    for (int i = 0; i <= m; ++i) {
      const double k = pi * i / m;
      ks[i] = k;
      energy[i] = mode_energy(k, 1.0, 1.0);
      if (i == 0) ps[i] = 0.5;
      else if (i == m) ps[i] = 0.0;
      else ps[i] = mode_excitation(k, v, dt);
    }
    return simpson(ps, energy);
  };

  OracleResult out;
  out.method = "free-fermion";
  out.dt = options.dt;
  int points = options.points;
  Moments mo = evaluate(points, options.dt, out.k, out.p);
  out.tol = options.quad_tol;
  while (2 * (points - 1) + 1 <= options.max_points) {
    std::vector<double> k2, p2;
    const int finer = 2 * (points - 1) + 1;
    const Moments m2 = evaluate(finer, options.dt, k2, p2);
    const double change = std::max({std::abs(m2.n - mo.n), std::abs(m2.eps - mo.eps), std::abs(m2.f - mo.f)});
    mo = m2;
    out.k = std::move(k2);
    out.p = std::move(p2);
    points = finer;
    if (change < options.quad_tol) break;
  }
  if (options.check_step) {
    std::vector<double> k2, p2;
    const Moments half = evaluate(points, 0.5 * options.dt, k2, p2);
    const double change = std::max({std::abs(half.n - mo.n), std::abs(half.eps - mo.eps), std::abs(half.f - mo.f)});
    if (change > options.step_tol) throw ConvergenceError("free_fermion_sweep: integrator step too large");
  }
  out.n_ex = mo.n;
  out.eps_ex = mo.eps;
  out.f = mo.f;
  return out;
}

OracleResult free_fermion_richardson(double v, const FreeFermionOptions& options) {
  FreeFermionOptions coarse = options;
  coarse.check_step = false;
  const auto a = free_fermion_sweep(v, coarse);
  FreeFermionOptions fine = coarse;
  fine.dt = 0.5 * options.dt;
  auto b = free_fermion_sweep(v, fine);
  b.n_ex += (b.n_ex - a.n_ex) / 15.0;
  b.eps_ex += (b.eps_ex - a.eps_ex) / 15.0;
  b.f += (b.f - a.f) / 15.0;
  b.dt = options.dt;
  b.method = "free-fermion-richardson";
  return b;
}

OracleResult free_fermion_sweep_finite(double v, int n_sites, double dt) {
  if (n_sites < 2 || n_sites % 2) throw InvalidArgument("free_fermion_sweep_finite: N must be even and >= 2");
  OracleResult out;
  out.method = "free-fermion";
  out.dt = dt;
  const double n = static_cast<double>(n_sites);
  for (int m = 0; m < n_sites / 2; ++m) {
    const double k = pi * (2 * m + 1) / n;
    const double p = mode_excitation(k, v, dt);
    out.k.push_back(k);
    out.p.push_back(p);
    out.n_ex += 2.0 * p / n;
    out.eps_ex += 2.0 * mode_energy(k, 1.0, 1.0) * p / n;
    out.f += -std::log1p(-p) / n;
  }
  return out;
}

double ground_energy_density_exact(double J, double g, double tol) {
  if (J < 0.0 || g < 0.0 || (J == 0.0 && g == 0.0)) {
    throw InvalidArgument("ground_energy_density_exact: couplings must be non-negative and not both zero");
  }
  const std::function<double(double)> fn = [&](double k) { return std::hypot(g - J * std::cos(k), J * std::sin(k)); };
  std::function<double(double, double, double, double, double, double, int)> adapt =
      [&](double a, double b, double fa, double fm, double fb, double whole, int depth) -> double {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = fn(lm), frm = fn(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) return left + right + (left + right - whole) / 15.0;
    return adapt(a, m, fa, flm, fm, left, depth - 1) + adapt(m, b, fm, frm, fb, right, depth - 1);
  };
  const double a = 0.0, b = 2.0 * pi;
  const double fa = fn(a), fb = fn(b), fm = fn(pi);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return -adapt(a, b, fa, fm, fb, whole, 50) / (2.0 * pi);
}

}  // namespace kzmps
