#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "kzmps/analysis.hpp"
#include "kzmps/cli.hpp"
#include "kzmps/oracle.hpp"

namespace kzmps {

using nlohmann::json;

namespace {

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string cell_stem(const ExperimentPlan& plan, std::size_t chi, double v) {
  return plan.model.name() + "_chi" + std::to_string(chi) + "_v" + short_num(v) + "_dt" + short_num(plan.dt) + "_o" +
         std::to_string(plan.trotter_order) + "_c" + short_num(plan.cutoff);
}

json record_json(const RunRecord& rec, const ExperimentPlan& plan, const std::string& state_file) {
  json series = {{"t", json::array()},
                 {"energy", json::array()},
                 {"entropy", json::array()},
                 {"max_bond_dim", json::array()},
                 {"truncation_weight", json::array()}};
  for (const auto& p : rec.series) {
    series["t"].push_back(p.t);
    series["energy"].push_back(p.energy);
    series["entropy"].push_back(p.entropy);
    series["max_bond_dim"].push_back(p.max_bond_dim);
    series["truncation_weight"].push_back(p.truncation_weight);
  }
  return {{"version", 1},
          {"plan_hash", plan.hash},
          {"config",
           {{"model", rec.config.model.name()},
            {"chi", rec.config.chi_max},
            {"v", rec.config.v},
            {"dt", rec.config.dt},
            {"trotter_order", rec.config.trotter_order},
            {"cutoff", rec.config.cutoff},
            {"record_every", rec.config.record_every}}},
          {"steps", rec.steps},
          {"f", rec.f},
          {"eps_ex", rec.eps_ex},
          {"eps_clamped", rec.eps_clamped},
          {"energy_final", rec.energy_final},
          {"ground_energy", rec.ground_energy},
          {"entropy_final", rec.entropy_final},
          {"xi_kz", rec.xi_kz},
          {"wall_seconds", rec.wall_seconds},
          {"state_file", state_file},
          {"series", series}};
}

int worker_count(const ExperimentPlan& plan) {
  if (const char* env = std::getenv("KZMPS_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return plan.workers;
}

// Ground states shared by all cells with the same chi, cooled once and
// cached on disk.
class GroundCache {
 public:
  GroundCache(const ExperimentPlan& plan, std::filesystem::path dir) : plan_(plan), dir_(std::move(dir)) {}

  std::shared_ptr<const GroundState> get(std::size_t chi) {
    std::shared_future<std::shared_ptr<const GroundState>> fut;
    std::promise<std::shared_ptr<const GroundState>> promise;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(chi);
      if (it == cache_.end()) {
        fut = promise.get_future().share();
        cache_.emplace(chi, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(make(chi));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

 private:
  std::shared_ptr<const GroundState> make(std::size_t chi) {
    const auto stem = plan_.model.name() + "_chi" + std::to_string(chi) + "_c" + short_num(plan_.cutoff);
    const auto state_path = dir_ / (stem + ".state");
    const auto meta_path = dir_ / (stem + ".json");
    auto gs = std::make_shared<GroundState>();
    if (std::filesystem::exists(state_path) && std::filesystem::exists(meta_path)) {
      gs->state = load_state(state_path);
      std::ifstream in(meta_path);
      const auto meta = json::parse(in);
      gs->energy = meta.at("energy").get<double>();
      gs->steps = meta.at("steps").get<long>();
      gs->converged = true;
      return gs;
    }
    CoolingOptions co = plan_.cooling;
    co.chi_max = chi;
    co.cutoff = plan_.cutoff;
    *gs = cool_ground_state(plan_.model.with_couplings(1.0, 1.0), co);
    save_state(state_path, gs->state);
    std::ofstream(meta_path) << json{{"energy", gs->energy}, {"steps", gs->steps}, {"chi", chi}}.dump(2) << '\n';
    return gs;
  }

  const ExperimentPlan& plan_;
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::size_t, std::shared_future<std::shared_ptr<const GroundState>>> cache_;
};

}  // namespace

int cmd_sweep(const std::filesystem::path& plan_path, std::ostream& out, std::ostream& err) {
  ExperimentPlan plan;
  try {
    plan = load_plan(plan_path);
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  const auto runs_dir = plan.output / "runs";
  const auto ground_dir = plan.output / "ground";
  std::filesystem::create_directories(runs_dir);
  std::filesystem::create_directories(ground_dir);
  const auto results_path = plan.output / "results.csv";

  std::vector<ResultRow> rows;
  if (std::filesystem::exists(results_path)) {
    if (plan.resume) {
      rows = read_results(results_path);
    } else {
      std::filesystem::remove(results_path);
    }
  }
  std::set<std::string> done;
  for (const auto& r : rows) done.insert(cell_key(r));

  struct Cell {
    std::size_t chi;
    double v;
  };
  std::vector<Cell> cells;
  for (auto chi : plan.chi)
    for (double v : plan.v)
      if (!done.count(cell_key(plan.model.name(), chi, v, plan.dt, plan.trotter_order, plan.cutoff))) {
        cells.push_back({chi, v});
      }
  // Longest cells first.
  std::stable_sort(cells.begin(), cells.end(), [&](const Cell& a, const Cell& b) {
    const double ca = static_cast<double>(sweep_steps(a.v, plan.dt)) * std::pow(static_cast<double>(a.chi), 3);
    const double cb = static_cast<double>(sweep_steps(b.v, plan.dt)) * std::pow(static_cast<double>(b.chi), 3);
    return ca > cb;
  });
  if (cells.empty()) {
    if (!std::filesystem::exists(results_path)) write_results(results_path, rows);
    out << "all " << done.size() << " cells already complete\n";
    return kExitOk;
  }
  std::ofstream(plan.output / "plan_hash.txt") << plan.hash << '\n';

  GroundCache grounds(plan, ground_dir);
  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::queue<ResultRow> completed;
  bool finished = false;
  std::vector<std::string> failures;

  std::thread writer([&] {
    std::unique_lock lock(queue_mu);
    while (true) {
      queue_cv.wait(lock, [&] { return finished || !completed.empty(); });
      bool wrote = false;
      while (!completed.empty()) {
        rows.push_back(completed.front());
        completed.pop();
        wrote = true;
      }
      if (wrote) {
        auto snapshot = rows;
        lock.unlock();
        write_results(results_path, std::move(snapshot));
        lock.lock();
      }
      if (finished && completed.empty()) return;
    }
  });

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const auto& cell = cells[i];
      const auto stem = cell_stem(plan, cell.chi, cell.v);
      try {
        const auto ground = grounds.get(cell.chi);
        SweepConfig cfg;
        cfg.model = plan.model;
        cfg.v = cell.v;
        cfg.chi_max = cell.chi;
        cfg.cutoff = plan.cutoff;
        cfg.dt = plan.dt;
        cfg.trotter_order = plan.trotter_order;
        cfg.record_every = plan.record_every;
        SweepOptions opts;
        opts.ground = ground.get();
        opts.checkpoint = runs_dir / (stem + ".ckpt");
        opts.checkpoint_seconds = plan.checkpoint_seconds;
        const auto rec = run_sweep(cfg, opts);
        save_state(runs_dir / (stem + ".state"), rec.final_state);
        std::ofstream(runs_dir / (stem + ".json")) << record_json(rec, plan, stem + ".state").dump(2) << '\n';
        ResultRow row{plan.model.name(), cell.chi, cell.v,   plan.dt,     plan.trotter_order, plan.cutoff,
                      rec.f,             rec.eps_ex, rec.entropy_final, rec.xi_kz, rec.steps, rec.wall_seconds};
        {
          std::lock_guard lock(queue_mu);
          completed.push(row);
        }
        queue_cv.notify_one();
        std::lock_guard lock(queue_mu);
        out << "done " << stem << " f=" << format_double(rec.f) << " eps_ex=" << format_double(rec.eps_ex) << '\n';
      } catch (const std::exception& e) {
        std::lock_guard lock(queue_mu);
        failures.push_back(stem + ": " + e.what());
      }
    }
  };
  const int n_workers = std::max(1, std::min<int>(worker_count(plan), static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  {
    std::lock_guard lock(queue_mu);
    finished = true;
  }
  queue_cv.notify_one();
  writer.join();

  if (!failures.empty()) {
    err << failures.size() << " cell(s) failed:\n";
    for (const auto& f : failures) err << "  " << f << '\n';
    return kExitCellFailure;
  }
  return kExitOk;
}

int cmd_analyze(const std::filesystem::path& results, const AnalyzeOptions& options, std::ostream& out,
                std::ostream& err) {
  if (options.observable != "f" && options.observable != "eps") {
    err << "observable must be f or eps\n";
    return kExitConfigError;
  }
  std::vector<ResultRow> rows;
  try {
    rows = read_results(results);
  } catch (const InvalidArgument& e) {
    err << e.what() << '\n';
    return kExitPrecondition;
  }
  std::set<std::string> models;
  for (const auto& r : rows) models.insert(r.model);
  std::string model = options.model;
  if (model.empty()) {
    if (models.size() != 1) {
      err << "results contain " << models.size() << " models; choose one with --model\n";
      return kExitPrecondition;
    }
    model = *models.begin();
  }

  ModelSpec spec;
  try {
    spec = ModelSpec::from_name(model);
  } catch (const InvalidArgument& e) {
    err << e.what() << '\n';
    return kExitPrecondition;
  }
  CollapseDataset data;
  data.observable = options.observable;
  data.nu = spec.nu;
  data.z = spec.z;
  data.c = spec.c;
  int dropped = 0;
  for (const auto& r : rows) {
    if (r.model != model) continue;
    const double value = options.observable == "f" ? r.f : r.eps_ex;
    if (!(value > 0.0)) {
      ++dropped;
      continue;
    }
    data.rows.push_back({static_cast<double>(r.chi), r.v, value});
  }
  if (dropped > 0) err << "warning: dropped " << dropped << " non-positive " << options.observable << " values\n";

  const auto out_dir = options.out_dir.empty() ? results.parent_path() : options.out_dir;
  ScalingFit fit;
  std::vector<CollapseCurve> curves;
  InfinityProxy proxy;
  std::vector<ExtrapolatedRow> extrapolated;
  try {
    curves = curves_of(data);
    std::size_t usable = 0;
    for (const auto& c : curves)
      if (c.v.size() >= 2) ++usable;
    if (usable < 2) throw InvalidArgument("collapse needs at least two chi values with two or more v points each");
    proxy = power_law_proxy(data, kz_exponent(options.observable, spec.nu, spec.z), options.fast_v_min);
    KappaScan scan;
    scan.lo = options.kappa_lo;
    scan.hi = options.kappa_hi;
    scan.step = options.kappa_step;
    fit = collapse_fit(curves, proxy, spec.nu, spec.z, scan);
    extrapolated = extrapolate_chi_infinity(data, fit.kappa_hat, proxy);
  } catch (const InvalidArgument& e) {
    err << "cannot fit collapse: " << e.what() << '\n';
    return kExitPrecondition;
  }

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const double theory = kappa_theory(spec.c);
  {
    std::ofstream f(out_dir / "kappa_fit.csv");
    f << "kind,kappa,cost\n";
    for (const auto& [k, c] : fit.cost_curve) f << "scan," << format_double(k) << ',' << format_double(c) << '\n';
    f << "best," << format_double(fit.kappa_hat) << ',' << format_double(fit.cost_at_hat) << '\n';
    f << "theory," << format_double(theory) << ','
      << format_double(collapse_cost(curves, proxy, spec.nu, spec.z, theory).cost) << '\n';
  }
  const auto points = collapsed_points(curves, proxy, spec.nu, spec.z, fit.kappa_hat);
  {
    std::ofstream f(out_dir / "collapse.csv");
    f << "chi,v,x,y\n";
    for (const auto& p : points)
      f << format_double(p.chi) << ',' << format_double(p.v) << ',' << format_double(p.x) << ',' << format_double(p.y)
        << '\n';
  }
  {
    std::ofstream f(out_dir / "extrapolated.csv");
    f << "chi,v,value,x,fbar\n";
    for (const auto& r : extrapolated)
      f << format_double(r.chi) << ',' << format_double(r.v) << ',' << format_double(r.value) << ','
        << format_double(r.x) << ',' << format_double(r.fbar) << '\n';
  }
  {
    std::vector<SvgSeries> series;
    for (const auto& c : curves) {
      SvgSeries s{"chi = " + short_num(c.chi), {}, false};
      for (const auto& p : points)
        if (p.chi == c.chi) s.points.emplace_back(p.x, p.y);
      series.push_back(std::move(s));
    }
    series.push_back({"average", fit.reference_curve, true});
    std::ofstream(out_dir / "collapse.svg") << render_loglog_svg(
        model + " " + options.observable + " collapse, kappa = " + short_num(fit.kappa_hat),
        "xi_KZ / chi^kappa", options.observable + "(v, chi) / " + options.observable + "(v, inf)", series);
  }
  out << "kappa_hat    = " << short_num(fit.kappa_hat) << '\n';
  out << "kappa_theory = " << short_num(theory) << '\n';
  if (fit.degenerate) out << "warning: cost is identically zero; the fit is degenerate\n";
  return kExitOk;
}

int cmd_oracle(const OracleOptions& options, std::ostream& out, std::ostream& err) {
  ModelSpec model;
  try {
    model = ModelSpec::from_name(options.model);
  } catch (const InvalidArgument& e) {
    err << e.what() << '\n';
    return kExitConfigError;
  }
  if (options.mode != "ff" && options.mode != "ed") {
    err << "mode must be ff or ed\n";
    return kExitConfigError;
  }
  if (options.mode == "ff" && model.kind != ModelKind::TFIM) {
    err << "free-fermion mode exists only for the TFIM\n";
    return kExitUnsupported;
  }
  if (options.v.empty()) {
    err << "no v values given\n";
    return kExitConfigError;
  }
  std::ofstream f(options.out);
  if (!f) {
    err << "cannot write " << options.out << '\n';
    return kExitConfigError;
  }
  f << "v,n_ex,eps_ex,f,method,dt,tol\n";
  try {
    for (double v : options.v) {
      OracleResult r;
      std::string method;
      if (options.mode == "ff" && options.n_sites == 0) {
        FreeFermionOptions fo;
        fo.dt = options.dt;
        r = free_fermion_sweep(v, fo);
        method = "free-fermion";
      } else if (options.mode == "ff") {
        r = free_fermion_sweep_finite(v, options.n_sites, options.dt);
        method = "free-fermion-N" + std::to_string(options.n_sites);
      } else {
        const int n = options.n_sites == 0 ? 8 : options.n_sites;
        r = ed_sweep(model, n, v, options.dt);
        r.n_ex = std::numeric_limits<double>::quiet_NaN();
        method = "ed-N" + std::to_string(n);
      }
      f << format_double(v) << ',' << format_double(r.n_ex) << ',' << format_double(r.eps_ex) << ','
        << format_double(r.f) << ',' << method << ',' << format_double(r.dt) << ',' << format_double(r.tol) << '\n';
      out << "v=" << short_num(v) << " f=" << short_num(r.f) << " eps_ex=" << short_num(r.eps_ex) << '\n';
    }
  } catch (const InvalidArgument& e) {
    err << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitOk;
}

int cmd_gs(const GsOptions& options, std::ostream& out, std::ostream& err) {
  ModelSpec model;
  try {
    model = ModelSpec::from_name(options.model, options.J, options.g);
  } catch (const InvalidArgument& e) {
    err << e.what() << '\n';
    return kExitConfigError;
  }
  CoolingOptions co;
  co.chi_max = options.chi;
  co.cutoff = options.cutoff;
  const auto gs = cool_ground_state(model, co);
  out << "energy_density = " << format_double(gs.energy) << '\n';
  out << "entropy        = " << format_double(entanglement_entropy(gs.state, Bond::AB)) << '\n';
  out << "corr_length    = " << format_double(correlation_length(gs.state)) << '\n';
  out << "bond_dim       = " << gs.state.max_bond_dim() << '\n';
  out << "steps          = " << gs.steps << '\n';
  if (model.kind == ModelKind::TFIM) {
    out << "exact_energy   = " << format_double(ground_energy_density_exact(model.J, model.g)) << '\n';
  }
  if (!options.out.empty()) save_state(options.out, gs.state);
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Kibble-Zurek sweeps of infinite MPS at fixed bond dimension"};
  app.require_subcommand(1);

  std::string plan_path;
  auto* sweep = app.add_subcommand("sweep", "run every missing (v, chi) cell of a plan");
  sweep->add_option("plan", plan_path, "plan file (JSON)")->required();

  std::string results_path, kappa_scan = "1.0:3.0:0.01";
  AnalyzeOptions ao;
  std::string ao_out;
  auto* analyze = app.add_subcommand("analyze", "fit kappa and extrapolate to infinite chi");
  analyze->add_option("results", results_path, "results.csv")->required();
  analyze->add_option("--observable", ao.observable, "f or eps")->check(CLI::IsMember({"f", "eps"}));
  analyze->add_option("--kappa-scan", kappa_scan, "lo:hi:step");
  analyze->add_option("--model", ao.model, "model to analyze");
  analyze->add_option("--out", ao_out, "output directory");
  analyze->add_option("--fast-v-min", ao.fast_v_min, "lower edge of the fast regime for the infinite-chi proxy");

  OracleOptions oo;
  std::string oo_out = "oracle.csv";
  auto* oracle = app.add_subcommand("oracle", "exact reference values");
  oracle->add_option("--model", oo.model, "tfim or potts3");
  oracle->add_option("--mode", oo.mode, "ff or ed");
  oracle->add_option("--v", oo.v, "sweep rates")->delimiter(',');
  oracle->add_option("--n", oo.n_sites, "ring size (0: thermodynamic limit)");
  oracle->add_option("--dt", oo.dt, "time step");
  oracle->add_option("--out", oo_out, "output CSV");

  GsOptions go;
  std::string go_out;
  auto* gs = app.add_subcommand("gs", "cool a ground state");
  gs->add_option("--model", go.model, "tfim or potts3");
  gs->add_option("--chi", go.chi, "bond dimension");
  gs->add_option("--J", go.J, "coupling J");
  gs->add_option("--g", go.g, "coupling g");
  gs->add_option("--cutoff", go.cutoff, "relative Schmidt cutoff");
  gs->add_option("--out", go_out, "state file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*sweep) return cmd_sweep(plan_path, std::cout, std::cerr);
    if (*analyze) {
      double lo, hi, step;
      char c1, c2;
      std::istringstream in(kappa_scan);
      if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':') {
        std::cerr << "--kappa-scan must look like lo:hi:step\n";
        return kExitConfigError;
      }
      ao.kappa_lo = lo;
      ao.kappa_hi = hi;
      ao.kappa_step = step;
      ao.out_dir = ao_out;
      return cmd_analyze(results_path, ao, std::cout, std::cerr);
    }
    if (*oracle) {
      oo.out = oo_out;
      return cmd_oracle(oo, std::cout, std::cerr);
    }
    if (*gs) {
      go.out = go_out;
      return cmd_gs(go, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCellFailure;
  }
  return kExitConfigError;
}

}  // namespace kzmps
