#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "kzmps/cli.hpp"

namespace kzmps {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string cell_key(const std::string& model, std::size_t chi, double v, double dt, int order, double cutoff) {
  return model + "|" + std::to_string(chi) + "|" + format_double(v) + "|" + format_double(dt) + "|" +
         std::to_string(order) + "|" + format_double(cutoff);
}

std::string cell_key(const ResultRow& r) { return cell_key(r.model, r.chi, r.v, r.dt, r.trotter_order, r.cutoff); }

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("results line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read results file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw InvalidArgument("results file " + path.string() + " has an unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 12) throw InvalidArgument("results line " + std::to_string(lineno) + ": expected 12 columns");
    ResultRow r;
    r.model = c[0];
    r.chi = static_cast<std::size_t>(number(c[1], lineno));
    r.v = number(c[2], lineno);
    r.dt = number(c[3], lineno);
    r.trotter_order = static_cast<int>(number(c[4], lineno));
    r.cutoff = number(c[5], lineno);
    r.f = number(c[6], lineno);
    r.eps_ex = number(c[7], lineno);
    r.entropy_final = number(c[8], lineno);
    r.xi_kz = number(c[9], lineno);
    r.steps = static_cast<long>(number(c[10], lineno));
    r.wall_seconds = number(c[11], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_results(const std::filesystem::path& path, std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.model, a.chi, a.v, a.dt, a.trotter_order, a.cutoff) <
           std::tie(b.model, b.chi, b.v, b.dt, b.trotter_order, b.cutoff);
  });
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
      out << r.model << ',' << r.chi << ',' << format_double(r.v) << ',' << format_double(r.dt) << ','
          << r.trotter_order << ',' << format_double(r.cutoff) << ',' << format_double(r.f) << ','
          << format_double(r.eps_ex) << ',' << format_double(r.entropy_final) << ',' << format_double(r.xi_kz)
          << ',' << r.steps << ',' << format_double(r.wall_seconds) << '\n';
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace kzmps
