#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kzmps/cli.hpp"

namespace kzmps {

using nlohmann::json;

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw InvalidArgument("log_grid: need 0 < lo <= hi and points >= 1");
  if (points == 1) return {lo};
  std::vector<double> out;
  for (int i = 0; i < points; ++i) {
    out.push_back(i == points - 1 ? hi : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  }
  return out;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw PlanError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw PlanError(std::string("plan key '") + key + "' has the wrong type");
  }
}

std::vector<double> v_grid(const json& spec, const ModelSpec& model) {
  if (spec.is_null()) {
    const double lo = model.kind == ModelKind::TFIM ? 0.005 : 0.01;
    const int points = static_cast<int>(std::lround(12.0 * std::log10(1.0 / lo))) + 1;
    return log_grid(lo, 1.0, points);
  }
  if (spec.is_array()) {
    std::vector<double> out;
    for (const auto& x : spec) {
      if (!x.is_number()) throw PlanError("v list must contain numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  if (!spec.is_object()) throw PlanError("v must be a list or a {min, max, points|per_decade} object");
  check_keys(spec, {"min", "max", "points", "per_decade"}, "v");
  if (!spec.contains("min") || !spec.contains("max")) throw PlanError("v grid needs min and max");
  const double lo = field<double>(spec, "min", 0.0), hi = field<double>(spec, "max", 0.0);
  if (!(lo > 0.0) || !(hi >= lo)) throw PlanError("v grid needs 0 < min <= max");
  if (spec.contains("points") == spec.contains("per_decade")) throw PlanError("v grid needs exactly one of points, per_decade");
  int points = 0;
  if (spec.contains("points")) {
    points = field<int>(spec, "points", 0);
  } else {
    points = static_cast<int>(std::lround(field<double>(spec, "per_decade", 0.0) * std::log10(hi / lo))) + 1;
  }
  if (points < 1) throw PlanError("v grid needs at least one point");
  return log_grid(lo, hi, points);
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

ExperimentPlan parse_plan(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw PlanError(std::string("plan is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw PlanError("plan must be a JSON object");
  check_keys(doc,
             {"version", "model", "v", "chi", "dt", "trotter_order", "cutoff", "output", "workers", "resume",
              "record_every", "checkpoint_seconds", "cooling"},
             "plan");
  if (field<int>(doc, "version", 0) != 1) throw PlanError("plan version must be 1");

  ExperimentPlan plan;
  if (!doc.contains("model")) throw PlanError("plan needs a model");
  try {
    plan.model = ModelSpec::from_name(field<std::string>(doc, "model", ""));
  } catch (const InvalidArgument& e) {
    throw PlanError(e.what());
  }
  plan.v = v_grid(doc.contains("v") ? doc.at("v") : json(), plan.model);
  if (!doc.contains("chi") || !doc.at("chi").is_array() || doc.at("chi").empty()) {
    throw PlanError("plan needs a non-empty chi list");
  }
  for (const auto& c : doc.at("chi")) {
    if (!c.is_number_integer() || c.get<long>() < 1) throw PlanError("chi values must be positive integers");
    plan.chi.push_back(c.get<std::size_t>());
  }
  plan.dt = field<double>(doc, "dt", plan.model.kind == ModelKind::TFIM ? 0.005 : 0.01);
  plan.trotter_order = field<int>(doc, "trotter_order", 4);
  plan.cutoff = field<double>(doc, "cutoff", 1e-12);
  plan.output = field<std::string>(doc, "output", "results");
  if (plan.output.is_relative()) plan.output = base_dir / plan.output;
  plan.workers = field<int>(doc, "workers", 1);
  plan.resume = field<bool>(doc, "resume", true);
  plan.record_every = field<int>(doc, "record_every", 50);
  plan.checkpoint_seconds = field<double>(doc, "checkpoint_seconds", 300.0);
  if (doc.contains("cooling")) {
    const auto& c = doc.at("cooling");
    if (!c.is_object()) throw PlanError("cooling must be an object");
    check_keys(c, {"schedule", "tol", "check_every", "max_steps_per_stage", "order"}, "cooling");
    plan.cooling.schedule = field<std::vector<double>>(c, "schedule", plan.cooling.schedule);
    plan.cooling.tol = field<double>(c, "tol", plan.cooling.tol);
    plan.cooling.check_every = field<int>(c, "check_every", plan.cooling.check_every);
    plan.cooling.max_steps_per_stage = field<long>(c, "max_steps_per_stage", plan.cooling.max_steps_per_stage);
    plan.cooling.order = field<int>(c, "order", plan.cooling.order);
  }

  if (plan.v.empty()) throw PlanError("v grid is empty");
  for (double v : plan.v)
    if (!(v > 0.0)) throw PlanError("v values must be positive");
  if (!(plan.dt > 0.0)) throw PlanError("dt must be positive");
  if (plan.trotter_order != 2 && plan.trotter_order != 4) throw PlanError("trotter_order must be 2 or 4");
  if (!(plan.cutoff >= 0.0)) throw PlanError("cutoff must be non-negative");
  if (plan.workers < 1) throw PlanError("workers must be positive");
  if (plan.record_every < 1) throw PlanError("record_every must be positive");
  if (plan.cooling.schedule.empty()) throw PlanError("cooling schedule must be non-empty");

  json physics = doc;
  for (const char* k : {"output", "workers", "resume", "checkpoint_seconds"}) physics.erase(k);
  plan.hash = fnv1a(physics.dump());
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PlanError("cannot read plan file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace kzmps
