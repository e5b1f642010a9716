#pragma once

#include <functional>
#include <string>
#include <vector>

namespace kzmps {

/// kappa = 6 / (c (sqrt(12 / c) + 1)).
double kappa_theory(double c);

/// Kibble-Zurek length v^{-nu / (1 + nu z)}, unit prefactor.
double xi_kz(double v, double nu, double z);

/// Power of v in the free Kibble-Zurek law: nu / (1 + z nu) for the
/// fidelity density ("f"), 2 nu / (1 + z nu) for the energy ("eps").
double kz_exponent(const std::string& observable, double nu, double z);

struct CollapseRow {
  double chi;
  double v;
  double value;
};

struct CollapseDataset {
  std::string observable = "f";
  std::vector<CollapseRow> rows;
  double nu = 1.0;
  double z = 1.0;
  double c = 0.5;
};

/// One O(v) curve at fixed chi, sorted by v.
struct CollapseCurve {
  double chi;
  std::vector<double> v;
  std::vector<double> value;
};

/// Groups rows by chi; throws on non-positive values or repeated (chi, v).
std::vector<CollapseCurve> curves_of(const CollapseDataset& data);

/// Estimate of O(v, chi = infinity).
using InfinityProxy = std::function<double(double v)>;

/// Power law A v^exponent with A fitted (log-mean) on the largest-chi curve
/// restricted to v >= v_fast_min. With v_fast_min <= 0 the fastest third of
/// that curve (at least two points) is used.
InfinityProxy power_law_proxy(const CollapseDataset& data, double exponent, double v_fast_min = 0.0);

struct KappaScan {
  double lo = 1.0;
  double hi = 3.0;
  double step = 0.01;
  double refine_tol = 1e-4;
  int samples = 64;  // points per pair overlap in the cost integral
};

struct CostValue {
  double cost = 0.0;
  int pairs = 0;
  int empty_pairs = 0;
};

/// Sum over curve pairs of the mean squared difference of the
/// interpolated y = O / O_inf on the common range of x = xi_KZ / chi^kappa.
/// Interpolation is piecewise linear in (log x, log y).
CostValue collapse_cost(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu, double z,
                        double kappa, int samples = 64);

struct ScalingFit {
  double kappa_hat = 0.0;
  double cost_at_hat = 0.0;
  std::vector<std::pair<double, double>> cost_curve;       // (kappa, cost)
  std::vector<std::pair<double, double>> reference_curve;  // averaged (x, y) at kappa_hat
  std::vector<CollapseRow> chi_infinity_estimates;
  bool degenerate = false;  // cost identically zero on the scan
  int empty_pairs = 0;      // at kappa_hat
};

ScalingFit collapse_fit(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu, double z,
                        const KappaScan& scan = {});
ScalingFit collapse_fit(const CollapseDataset& data, const InfinityProxy& proxy, const KappaScan& scan = {});

/// Collapsed point of one row.
struct CollapsedPoint {
  double chi;
  double v;
  double x;
  double y;
};
std::vector<CollapsedPoint> collapsed_points(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy,
                                             double nu, double z, double kappa);

/// Pointwise average f(x) of the collapsed curves on the union x grid,
/// averaging only curves whose range contains x. Sorted by x.
std::vector<std::pair<double, double>> averaged_scaling_function(const std::vector<CollapseCurve>& curves,
                                                                 const InfinityProxy& proxy, double nu, double z,
                                                                 double kappa);

struct ExtrapolatedRow {
  double chi;
  double v;
  double value;  // O(v, chi) / fbar(x)
  double x;
  double fbar;
};

/// O(v, infinity) = O(v, chi) / fbar(xi_KZ / chi^kappa) per row.
std::vector<ExtrapolatedRow> extrapolate_chi_infinity(const CollapseDataset& data, double kappa,
                                                      const InfinityProxy& proxy);

/// Largest pairwise RMS relative difference between collapsed curves on
/// their overlapping x ranges.
double collapse_pair_rms(const std::vector<CollapseCurve>& curves, const InfinityProxy& proxy, double nu, double z,
                         double kappa, int samples = 64);

struct PowerLawFit {
  double exponent;
  double prefactor;
  double residual;  // max |log y - fit| over the points
};

/// Least-squares line through (log v, log value).
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

}  // namespace kzmps
