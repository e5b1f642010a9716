#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "kzmps/cli.hpp"

namespace kzmps {

namespace {

constexpr double kWidth = 640, kHeight = 480, kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<SvgSeries>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!(x > 0.0) || !(y > 0.0)) continue;
      x0 = std::min(x0, std::log10(x));
      x1 = std::max(x1, std::log10(x));
      y0 = std::min(y0, std::log10(y));
      y1 = std::max(y1, std::log10(y));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (std::log10(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (std::log10(y) - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(x0)); e <= static_cast<int>(std::floor(x1)); ++e) {
    const double x = px(std::pow(10.0, e));
    o << "<line x1=\"" << num(x) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(x) << "\" y2=\"" << kTop + ph + 5
      << "\" stroke=\"black\"/><text x=\"" << num(x) << "\" y=\"" << kTop + ph + 20
      << "\" font-size=\"12\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(y0)); e <= static_cast<int>(std::floor(y1)); ++e) {
    const double y = py(std::pow(10.0, e));
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft << "\" y2=\"" << num(y)
      << "\" stroke=\"black\"/><text x=\"" << kLeft - 8 << "\" y=\"" << num(y + 4)
      << "\" font-size=\"12\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kTop - 15 << "\" font-size=\"14\" text-anchor=\"middle\">"
    << escape(title) << "</text>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" font-size=\"13\" text-anchor=\"middle\">"
    << escape(xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kTop + ph / 2 << ")\">" << escape(ylabel) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % (sizeof kColors / sizeof *kColors)];
    if (s.line) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : s.points)
        if (x > 0.0 && y > 0.0) o << num(px(x)) << ',' << num(py(y)) << ' ';
      o << "\"/>\n";
    } else {
      for (const auto& [x, y] : s.points)
        if (x > 0.0 && y > 0.0) o << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 15 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << kLeft + pw + 15 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << color
      << "\"/><text x=\"" << kLeft + pw + 30 << "\" y=\"" << ly << "\" font-size=\"12\">" << escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace kzmps
