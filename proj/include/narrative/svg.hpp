#pragma once

#include <string>
#include <vector>

namespace narrative::svg {

struct ScatterPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
  int group = 0;
};

struct LineSeries {
  std::string label;
  std::vector<double> values;
};

/// Scatter plot with axis cross-hairs through the origin. Groups pick the
/// marker colour.
std::string scatter(const std::string& title, const std::string& x_label, const std::string& y_label,
                    const std::vector<ScatterPoint>& points);

/// One polyline per series over a shared categorical x axis.
std::string line_chart(const std::string& title, const std::vector<std::string>& x_ticks,
                       const std::vector<LineSeries>& series);

void write(const std::string& path, const std::string& document);

}  // namespace narrative::svg
