#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kzmps/evolution.hpp"

namespace kzmps {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCellFailure = 1,
  kExitConfigError = 2,
  kExitPrecondition = 3,
  kExitUnsupported = 4,
};

class PlanError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Experiment plan, read from a JSON document with "version": 1.
struct ExperimentPlan {
  ModelSpec model = ModelSpec::tfim();
  std::vector<double> v;
  std::vector<std::size_t> chi;
  double dt = 0.005;
  int trotter_order = 4;
  double cutoff = 1e-12;
  std::filesystem::path output = "results";
  int workers = 1;
  bool resume = true;
  int record_every = 50;
  double checkpoint_seconds = 300.0;
  CoolingOptions cooling;
  std::string hash;  // of the physics content, hex
};

/// Log-spaced grid from lo to hi (inclusive) with `points` entries.
std::vector<double> log_grid(double lo, double hi, int points);

ExperimentPlan parse_plan(const std::string& text, const std::filesystem::path& base_dir);
ExperimentPlan load_plan(const std::filesystem::path& path);

inline const char* const kResultsHeader =
    "model,chi,v,dt,trotter_order,cutoff,f,eps_ex,entropy_final,xi_kz,steps,wall_seconds";

struct ResultRow {
  std::string model;
  std::size_t chi = 0;
  double v = 0.0;
  double dt = 0.0;
  int trotter_order = 4;
  double cutoff = 0.0;
  double f = 0.0;
  double eps_ex = 0.0;
  double entropy_final = 0.0;
  double xi_kz = 0.0;
  long steps = 0;
  double wall_seconds = 0.0;
};

/// Identity of a grid cell: every physics parameter of the run.
std::string cell_key(const std::string& model, std::size_t chi, double v, double dt, int order, double cutoff);
std::string cell_key(const ResultRow& row);

std::vector<ResultRow> read_results(const std::filesystem::path& path);
/// Rows are written sorted by (model, chi, v, dt, order, cutoff), %.17g.
void write_results(const std::filesystem::path& path, std::vector<ResultRow> rows);
std::string format_double(double x);

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool line = false;
};

/// Log-log scatter/line plot.
std::string render_loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<SvgSeries>& series);

int cmd_sweep(const std::filesystem::path& plan_path, std::ostream& out, std::ostream& err);

struct AnalyzeOptions {
  std::string observable = "f";
  double kappa_lo = 1.0;
  double kappa_hi = 3.0;
  double kappa_step = 0.01;
  std::string model;  // empty: the only model present
  std::filesystem::path out_dir;  // empty: directory of the results file
  double fast_v_min = 0.0;
};
int cmd_analyze(const std::filesystem::path& results, const AnalyzeOptions& options, std::ostream& out,
                std::ostream& err);

struct OracleOptions {
  std::string model = "tfim";
  std::string mode = "ff";
  std::vector<double> v{0.5};
  int n_sites = 0;  // 0: thermodynamic limit (ff); ED default 8
  double dt = 1e-3;
  std::filesystem::path out = "oracle.csv";
};
int cmd_oracle(const OracleOptions& options, std::ostream& out, std::ostream& err);

struct GsOptions {
  std::string model = "tfim";
  std::size_t chi = 16;
  double J = 1.0;
  double g = 1.0;
  double cutoff = 1e-12;
  std::filesystem::path out;  // optional state file
};
int cmd_gs(const GsOptions& options, std::ostream& out, std::ostream& err);

/// Entry point of the kzmps executable.
int run_cli(int argc, char** argv);

}  // namespace kzmps
