#include "narrative/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "narrative/error.hpp"

namespace narrative::svg {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 540;
constexpr double kMargin = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

const char* colour(std::size_t k) { return kPalette[k % std::size(kPalette)]; }

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
}

struct Range {
  double lo;
  double hi;
  double map(double v, double out_lo, double out_hi) const {
    return hi > lo ? out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo) : (out_lo + out_hi) / 2;
  }
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1, hi + 1};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string scatter(const std::string& title, const std::string& x_label, const std::string& y_label,
                    const std::vector<ScatterPoint>& points) {
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  for (const auto& p : points) {
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.y);
    y_hi = std::max(y_hi, p.y);
  }
  const Range xr = padded(x_lo, x_hi);
  const Range yr = padded(y_lo, y_hi);
  auto px = [&](double x) { return xr.map(x, kMargin, kWidth - kMargin); };
  auto py = [&](double y) { return yr.map(y, kHeight - kMargin, kMargin); };

  std::ostringstream out;
  header(out, title);
  out << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(kWidth - kMargin)
      << "\" y2=\"" << num(py(0)) << "\" stroke=\"#999\"/>\n";
  out << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(px(0)) << "\" y2=\""
      << num(kHeight - kMargin) << "\" stroke=\"#999\"/>\n";
  out << "<text x=\"" << num(kWidth - kMargin) << "\" y=\"" << num(py(0) - 4) << "\" text-anchor=\"end\">"
      << xml_escape(x_label) << "</text>\n";
  out << "<text x=\"" << num(px(0) + 4) << "\" y=\"" << num(kMargin - 4) << "\">" << xml_escape(y_label)
      << "</text>\n";
  for (const auto& p : points) {
    const auto c = colour(static_cast<std::size_t>(std::max(p.group, 0)));
    out << "<circle cx=\"" << num(px(p.x)) << "\" cy=\"" << num(py(p.y)) << "\" r=\"3\" fill=\"" << c << "\"/>";
    out << "<text x=\"" << num(px(p.x) + 5) << "\" y=\"" << num(py(p.y) - 3) << "\" fill=\"" << c << "\">"
        << xml_escape(p.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string line_chart(const std::string& title, const std::vector<std::string>& x_ticks,
                       const std::vector<LineSeries>& series) {
  double lo = 0, hi = 0;
  bool any = false;
  for (const auto& s : series) {
    if (s.values.size() != x_ticks.size()) throw Error("svg: series '" + s.label + "' length mismatch");
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  const Range yr = padded(std::min(lo, 0.0), hi);
  const double n = static_cast<double>(x_ticks.size());
  auto px = [&](std::size_t k) {
    return n > 1 ? kMargin + static_cast<double>(k) / (n - 1) * (kWidth - 2 * kMargin) : kWidth / 2;
  };
  auto py = [&](double y) { return yr.map(y, kHeight - kMargin, kMargin); };

  std::ostringstream out;
  header(out, title);
  out << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(kHeight - kMargin) << "\" x2=\"" << num(kWidth - kMargin)
      << "\" y2=\"" << num(kHeight - kMargin) << "\" stroke=\"#333\"/>\n";
  out << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(kMargin) << "\" y2=\""
      << num(kHeight - kMargin) << "\" stroke=\"#333\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    out << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v)
        << "</text>\n";
  }
  const std::size_t stride = std::max<std::size_t>(1, x_ticks.size() / 25);
  for (std::size_t k = 0; k < x_ticks.size(); k += stride) {
    out << "<text x=\"" << num(px(k)) << "\" y=\"" << num(kHeight - kMargin + 16) << "\" text-anchor=\"middle\">"
        << xml_escape(x_ticks[k]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << colour(s) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[s].values.size(); ++k) {
      if (k) out << ' ';
      out << num(px(k)) << ',' << num(py(series[s].values[k]));
    }
    out << "\"/>\n";
    for (std::size_t k = 0; k < series[s].values.size(); ++k) {
      out << "<circle cx=\"" << num(px(k)) << "\" cy=\"" << num(py(series[s].values[k])) << "\" r=\"2.5\" fill=\""
          << colour(s) << "\"/>";
    }
    out << "\n<text x=\"" << num(kWidth - kMargin + 4) << "\" y=\"" << num(kMargin + 14.0 * static_cast<double>(s))
        << "\" fill=\"" << colour(s) << "\" font-size=\"10\">" << xml_escape(series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write(const std::string& path, const std::string& document) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << document;
}

}  // namespace narrative::svg
