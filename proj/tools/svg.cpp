#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace loa_cli {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                               "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& opts) {
  auto usable = [&](double v) { return std::isfinite(v) && (!opts.log_y || v > 0); };
  auto tr = [&](double v) { return opts.log_y ? std::log10(v) : v; };

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t xmax = 1;
  for (const auto& s : series) {
    xmax = std::max(xmax, s.y.empty() ? std::size_t{1} : s.y.size() - 1);
    for (double v : s.y)
      if (usable(v)) lo = std::min(lo, tr(v)), hi = std::max(hi, tr(v));
  }
  for (double v : opts.reference_lines)
    if (usable(v)) lo = std::min(lo, tr(v)), hi = std::max(hi, tr(v));
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (opts.log_y) lo = std::floor(lo), hi = std::ceil(hi);
  if (hi - lo < 1e-12) hi = lo + 1;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + pw * x / static_cast<double>(xmax); };
  auto py = [&](double v) { return kTop + ph * (1 - (tr(v) - lo) / (hi - lo)); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(opts.title)
    << "</text>\n"
    << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y ticks: decades on a log axis, five steps otherwise
  const int steps = opts.log_y ? static_cast<int>(hi - lo) : 5;
  const int stride = std::max(1, steps / 8);
  for (int i = 0; i <= steps; i += stride) {
    const double t = lo + (hi - lo) * i / steps;
    const double y = kTop + ph * (1 - (t - lo) / (hi - lo));
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << num(y) << "\" y2=\"" << num(y)
      << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
      << (opts.log_y ? "1e" + std::to_string(static_cast<int>(std::lround(t))) : tick(t)) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = static_cast<double>(xmax) * i / 5;
    o << "<text x=\"" << num(px(x)) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << tick(x)
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
    << escape(opts.x_label) << "</text>\n"
    << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(opts.y_label) << "</text>\n";

  for (double v : opts.reference_lines) {
    if (!usable(v)) continue;
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << num(py(v)) << "\" y2=\""
      << num(py(v)) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::string points;
    auto flush = [&] {
      if (!points.empty())
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << points
          << "\"/>\n";
      points.clear();
    };
    for (std::size_t k = 0; k < series[s].y.size(); ++k) {
      const double v = series[s].y[k];
      if (!usable(v)) {
        flush();
        continue;
      }
      points += num(px(static_cast<double>(k))) + "," + num(py(v)) + " ";
    }
    flush();
    const double ly = kTop + 10 + 18 * static_cast<double>(s);
    o << "<line x1=\"" << kLeft + pw + 10 << "\" x2=\"" << kLeft + pw + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << kLeft + pw + 35 << "\" y=\"" << ly + 4 << "\">" << escape(series[s].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace loa_cli
