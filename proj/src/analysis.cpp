#include "kzmps/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "kzmps/tensor.hpp"

namespace kzmps {

double kappa_theory(double c) {
  if (!(c > 0.0)) throw InvalidArgument("kappa_theory: central charge must be positive");
  return 6.0 / (c * (std::sqrt(12.0 / c) + 1.0));
}

double xi_kz(double v, double nu, double z) {
  if (!(v > 0.0)) throw InvalidArgument("xi_kz: v must be positive");
  return std::pow(v, -nu / (1.0 + nu * z));
}

double kz_exponent(const std::string& observable, double nu, double z) {
  if (observable == "f") return nu / (1.0 + z * nu);
  if (observable == "eps" || observable == "eps_ex") return 2.0 * nu / (1.0 + z * nu);
  throw InvalidArgument("unknown observable '" + observable + "'");
}

std::vector<CollapseCurve> curves_of(const CollapseDataset& data) {
  std::map<double, std::map<double, double>> grouped;
  for (const auto& r : data.rows) {
    if (!(r.value > 0.0) || !(r.v > 0.0) || !(r.chi > 0.0)) {
      throw InvalidArgument("collapse data must be positive (chi " + std::to_string(r.chi) + ", v " +
                            std::to_string(r.v) + ")");
    }
    if (!grouped[r.chi].emplace(r.v, r.value).second) throw InvalidArgument("collapse data: repeated (chi, v) row");
  }
  std::vector<CollapseCurve> out;
  for (const auto& [chi, pts] : grouped) {
    CollapseCurve c{chi, {}, {}};
    for (const auto& [v, value] : pts) {
      c.v.push_back(v);
      c.value.push_back(value);
    }
    out.push_back(std::move(c));
  }
  return out;
}

InfinityProxy power_law_proxy(const CollapseDataset& data, double exponent, double v_fast_min) {
  const auto curves = curves_of(data);
  if (curves.empty()) throw InvalidArgument("power_law_proxy: empty dataset");
  const auto& top = curves.back();
  std::vector<std::size_t> use;
  if (v_fast_min > 0.0) {
    for (std::size_t i = 0; i < top.v.size(); ++i)
      if (top.v[i] >= v_fast_min) use.push_back(i);
  } else {
    const std::size_t n = std::max<std::size_t>(2, top.v.size() / 3);
    for (std::size_t i = top.v.size() - std::min(n, top.v.size()); i < top.v.size(); ++i) use.push_back(i);
  }
  if (use.empty()) throw InvalidArgument("power_law_proxy: no points in the fast regime");
  double s = 0.0;
  for (auto i : use) s += std::log(top.value[i]) - exponent * std::log(top.v[i]);
  const double prefactor = std::exp(s / static_cast<double>(use.size()));
  return [prefactor, exponent](double v) { return prefactor * std::pow(v, exponent); };
}

namespace {

// Collapsed curve in log space, sorted by log x.
struct LogCurve {
  std::vector<double> lx, ly;
  double lo() const { return lx.front(); }
  double hi() const { return lx.back(); }
  double at(double x) const {
    auto it = std::upper_bound(lx.begin(), lx.end(), x);
    std::size_t j = static_cast<std::size_t>(it - lx.begin());
    if (j == 0) j = 1;
    if (j >= lx.size()) j = lx.size() - 1;
    const double t = (x - lx[j - 1]) / (lx[j] - lx[j - 1]);
    return ly[j - 1] + t * (ly[j] - ly[j - 1]);
  }
};

LogCurve collapse_curve(const CollapseCurve& c, const InfinityProxy& proxy, double nu, double z, double kappa) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < c.v.size(); ++i) {
    const double x = xi_kz(c.v[i], nu, z) / std::pow(c.chi, kappa);
    const double o = proxy(c.v[i]);
    if (!(o > 0.0)) throw InvalidArgument("collapse: infinity proxy must be positive");
    pts.emplace_back(std::log(x), std::log(c.value[i] / o));
  }
  std::sort(pts.begin(), pts.end());
  LogCurve out;
  for (const auto& [x, y] : pts) {
    if (!out.lx.empty() && x == out.lx.back()) continue;
    out.lx.push_back(x);
    out.ly.push_back(y);
  }
  return out;
}

std::vector<LogCurve> collapse_all(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu,
                                   double z, double kappa) {
  std::vector<LogCurve> out;
  for (const auto& c : curves) out.push_back(collapse_curve(c, proxy, nu, z, kappa));
  return out;
}

void check_curves(const std::vector<CollapseCurve>& curves) {
  std::size_t usable = 0;
  for (const auto& c : curves)
    if (c.v.size() >= 2) ++usable;
  if (curves.size() < 2 || usable < 2) throw InvalidArgument("collapse needs at least two chi curves");
}

}  // namespace

CostValue collapse_cost(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu, double z,
                        double kappa, int samples) {
  check_curves(curves);
  const auto lc = collapse_all(curves, proxy, nu, z, kappa);
  CostValue out;
  for (std::size_t i = 0; i < lc.size(); ++i) {
    for (std::size_t j = i + 1; j < lc.size(); ++j) {
      if (lc[i].lx.size() < 2 || lc[j].lx.size() < 2) continue;
      ++out.pairs;
      const double lo = std::max(lc[i].lo(), lc[j].lo());
      const double hi = std::min(lc[i].hi(), lc[j].hi());
      if (!(hi > lo)) {
        ++out.empty_pairs;
        continue;
      }
      double s = 0.0;
      for (int k = 0; k < samples; ++k) {
        const double x = lo + (hi - lo) * k / (samples - 1);
        const double d = std::exp(lc[i].at(x)) - std::exp(lc[j].at(x));
        s += d * d;
      }
      out.cost += s / samples;
    }
  }
  return out;
}

double collapse_pair_rms(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu, double z,
                         double kappa, int samples) {
  check_curves(curves);
  const auto lc = collapse_all(curves, proxy, nu, z, kappa);
  double worst = 0.0;
  for (std::size_t i = 0; i < lc.size(); ++i) {
    for (std::size_t j = i + 1; j < lc.size(); ++j) {
      const double lo = std::max(lc[i].lo(), lc[j].lo());
      const double hi = std::min(lc[i].hi(), lc[j].hi());
      if (!(hi > lo)) continue;
      double s = 0.0;
      for (int k = 0; k < samples; ++k) {
        const double x = lo + (hi - lo) * k / (samples - 1);
        const double a = std::exp(lc[i].at(x)), b = std::exp(lc[j].at(x));
        const double rel = (a - b) / (0.5 * (a + b));
        s += rel * rel;
      }
      worst = std::max(worst, std::sqrt(s / samples));
    }
  }
  return worst;
}

ScalingFit collapse_fit(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu, double z,
                        const KappaScan& scan) {
  check_curves(curves);
  if (!(scan.step > 0.0) || !(scan.hi > scan.lo)) throw InvalidArgument("collapse_fit: invalid kappa interval");
  const int n = static_cast<int>(std::floor((scan.hi - scan.lo) / scan.step + 1e-9)) + 1;
  if (n < 10) throw InvalidArgument("collapse_fit: kappa interval needs at least 10 grid points");

  ScalingFit fit;
  bool any_overlap = false;
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < n; ++i) {
    const double kappa = scan.lo + i * scan.step;
    const auto c = collapse_cost(curves, proxy, nu, z, kappa, scan.samples);
    if (c.empty_pairs < c.pairs) any_overlap = true;
    fit.cost_curve.emplace_back(kappa, c.cost);
    if (c.cost < best) {
      best = c.cost;
      best_i = i;
    }
  }
  if (!any_overlap) throw InvalidArgument("collapse_fit: fit impossible, no pair of curves overlaps for any kappa");
  const double max_cost =
      std::max_element(fit.cost_curve.begin(), fit.cost_curve.end(), [](auto& a, auto& b) { return a.second < b.second; })
          ->second;
  fit.degenerate = max_cost == 0.0;

  double kappa_hat = scan.lo + best_i * scan.step;
  if (!fit.degenerate) {
    auto cost = [&](double k) { return collapse_cost(curves, proxy, nu, z, k, scan.samples).cost; };
    double a = std::max(scan.lo, kappa_hat - scan.step), b = std::min(scan.hi, kappa_hat + scan.step);
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = b - r * (b - a), c2 = a + r * (b - a);
    double f1 = cost(c1), f2 = cost(c2);
    while (b - a > scan.refine_tol) {
      if (f1 < f2) {
        b = c2;
        c2 = c1;
        f2 = f1;
        c1 = b - r * (b - a);
        f1 = cost(c1);
      } else {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + r * (b - a);
        f2 = cost(c2);
      }
    }
    const double mid = 0.5 * (a + b);
    const double fm = cost(mid);
    if (fm < best) {
      kappa_hat = mid;
      best = fm;
    }
  }
  const auto at_hat = collapse_cost(curves, proxy, nu, z, kappa_hat, scan.samples);
  fit.kappa_hat = kappa_hat;
  fit.cost_at_hat = at_hat.cost;
  fit.empty_pairs = at_hat.empty_pairs;
  fit.reference_curve = averaged_scaling_function(curves, proxy, nu, z, kappa_hat);
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.v.size(); ++i) {
      const double x = xi_kz(c.v[i], nu, z) / std::pow(c.chi, kappa_hat);
      auto it = std::find_if(fit.reference_curve.begin(), fit.reference_curve.end(),
                             [&](const auto& p) { return p.first == x; });
      fit.chi_infinity_estimates.push_back({c.chi, c.v[i], c.value[i] / it->second});
    }
  }
  return fit;
}

ScalingFit collapse_fit(const CollapseDataset& data, const InfinityProxy& proxy, const KappaScan& scan) {
  return collapse_fit(curves_of(data), proxy, data.nu, data.z, scan);
}

std::vector<CollapsedPoint> collapsed_points(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy,
                                             double nu, double z, double kappa) {
  std::vector<CollapsedPoint> out;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.v.size(); ++i) {
      out.push_back({c.chi, c.v[i], xi_kz(c.v[i], nu, z) / std::pow(c.chi, kappa), c.value[i] / proxy(c.v[i])});
    }
  return out;
}

std::vector<std::pair<double, double>> averaged_scaling_function(const std::vector<CollapseCurve>& curves,
                                                                 const InfinityProxy& proxy, double nu, double z,
                                                                 double kappa) {
  const auto lc = collapse_all(curves, proxy, nu, z, kappa);
  std::vector<double> xs;
  for (const auto& c : curves)
    for (double v : c.v) xs.push_back(xi_kz(v, nu, z) / std::pow(c.chi, kappa));
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<std::pair<double, double>> out;
  for (double x : xs) {
    const double l = std::log(x);
    double s = 0.0;
    int n = 0;
    for (const auto& c : lc) {
      if (l < c.lo() || l > c.hi()) continue;
      s += c.lx.size() == 1 ? std::exp(c.ly.front()) : std::exp(c.at(l));
      ++n;
    }
    if (n == 0) throw InvalidArgument("averaged_scaling_function: x outside every curve's range");
    out.emplace_back(x, s / n);
  }
  return out;
}

std::vector<ExtrapolatedRow> extrapolate_chi_infinity(const CollapseDataset& data, double kappa,
                                                      const InfinityProxy& proxy) {
  if (!(kappa > 0.0)) throw InvalidArgument("extrapolate_chi_infinity: kappa must be positive");
  const auto curves = curves_of(data);
  const auto fbar = averaged_scaling_function(curves, proxy, data.nu, data.z, kappa);
  std::vector<ExtrapolatedRow> out;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.v.size(); ++i) {
      const double x = xi_kz(c.v[i], data.nu, data.z) / std::pow(c.chi, kappa);
      auto it = std::lower_bound(fbar.begin(), fbar.end(), std::make_pair(x, -std::numeric_limits<double>::infinity()));
      if (it == fbar.end() || it->first != x) throw InvalidArgument("extrapolate_chi_infinity: x outside every curve");
      out.push_back({c.chi, c.v[i], c.value[i] / it->second, x, it->second});
    }
  }
  return out;
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw InvalidArgument("fit_power_law: at least 3 points required");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [v, y] : points) {
    if (!(v > 0.0) || !(y > 0.0)) throw InvalidArgument("fit_power_law: data must be positive");
    const double lx = std::log(v), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = static_cast<double>(points.size());
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw InvalidArgument("fit_power_law: all v equal");
  const double slope = (n * sxy - sx * sy) / den;
  const double icpt = (sy - slope * sx) / n;
  double res = 0.0;
  for (const auto& [v, y] : points) res = std::max(res, std::abs(std::log(y) - icpt - slope * std::log(v)));
  return {slope, std::exp(icpt), res};
}

}  // namespace kzmps
