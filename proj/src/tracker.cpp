#include "narrative/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "narrative/csv.hpp"
#include "narrative/error.hpp"
#include "narrative/svg.hpp"

namespace narrative {
namespace {

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::vector<Eigen::Index> all_rows(const CAModel& model, const std::vector<Eigen::Index>& rows) {
  if (!rows.empty()) {
    for (auto i : rows) {
      if (i < 0 || i >= model.rows()) throw Error("tracker: row " + std::to_string(i) + " not in model");
    }
    return rows;
  }
  std::vector<Eigen::Index> out(static_cast<std::size_t>(model.rows()));
  std::iota(out.begin(), out.end(), Eigen::Index{0});
  return out;
}

std::string row_label(const CAModel& model, Eigen::Index i) {
  return i < static_cast<Eigen::Index>(model.row_labels.size()) ? model.row_labels[static_cast<std::size_t>(i)]
                                                                 : std::to_string(i + 1);
}

}  // namespace

Eigen::Index term_column(const CAModel& model, const std::string& term) {
  const auto& vocab = model.col_labels;
  const auto it = std::find(vocab.begin(), vocab.end(), term);
  if (it != vocab.end()) return it - vocab.begin();

  std::vector<std::pair<std::size_t, std::string>> near;
  for (const auto& word : vocab) near.emplace_back(edit_distance(term, word), word);
  std::sort(near.begin(), near.end());
  std::string message = "term '" + term + "' is not in the retained vocabulary";
  if (!near.empty()) {
    message += "; closest entries:";
    for (std::size_t k = 0; k < std::min<std::size_t>(5, near.size()); ++k) message += " " + near[k].second;
  }
  throw Error(message);
}

TrackSeries term_distances(const CAModel& model, const std::string& term, const std::vector<Eigen::Index>& rows) {
  const Eigen::Index j = term_column(model, term);
  TrackSeries series{term, {}};
  for (auto i : all_rows(model, rows)) {
    series.points.push_back({row_label(model, i), (model.row_principal.row(i) - model.col_principal.row(j)).norm()});
  }
  return series;
}

double dyad_distance(const CAModel& model, Eigen::Index row, const std::string& subject, const std::string& partner) {
  if (row < 0 || row >= model.rows()) throw Error("tracker: row " + std::to_string(row) + " not in model");
  const auto s = model.row_principal.row(row);
  const double df = (s - model.col_principal.row(term_column(model, subject))).squaredNorm();
  const double dm = (s - model.col_principal.row(term_column(model, partner))).squaredNorm();
  return std::sqrt(df + dm);
}

TrackSeries dyad_series(const CAModel& model, const DyadSpec& spec, const std::vector<Eigen::Index>& rows) {
  term_column(model, spec.subject);
  term_column(model, spec.partner);
  TrackSeries series{spec.label(), {}};
  for (auto i : all_rows(model, rows)) {
    series.points.push_back({row_label(model, i), dyad_distance(model, i, spec.subject, spec.partner)});
  }
  return series;
}

SegmentTrack term_segment_distances(const CAModel& model, const ContingencyTable& table, const std::string& term,
                                    const Segmentation& segmentation) {
  if (table.rows() != model.rows() || table.cols() != model.cols()) {
    throw Error("tracker: table shape does not match the model");
  }
  const Eigen::Index j = term_column(model, term);
  const Eigen::VectorXd word = model.col_principal.row(j).transpose();
  SegmentTrack out;
  out.series.label = term;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < segmentation.segments.size(); ++s) {
    const auto& seg = segmentation.segments[s];
    if (seg.first < 0 || seg.last >= table.rows() || seg.last < seg.first) {
      throw Error("tracker: segment " + std::to_string(s + 1) + " outside the table rows");
    }
    Eigen::VectorXd summed = Eigen::VectorXd::Zero(table.cols());
    for (Eigen::Index i = seg.first; i <= seg.last; ++i) {
      for (CountMatrix::InnerIterator it(table.counts(), i); it; ++it) summed(it.col()) += static_cast<double>(it.value());
    }
    const Eigen::VectorXd point = project_supplementary(model, summed, Side::Rows);
    const double d = (point - word).norm();
    out.series.points.push_back({std::to_string(s + 1), d});
    if (d < best) {
      best = d;
      out.closest = s;
    }
  }
  if (!segmentation.segments.empty()) {
    const auto& seg = segmentation.segments[out.closest];
    out.first_id = row_label(model, seg.first);
    out.last_id = row_label(model, seg.last);
    out.size = seg.size();
  }
  return out;
}

void write_series_csv(const std::vector<TrackSeries>& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  csv::write_row(out, {"label", "unit_id", "distance"});
  for (const auto& s : series) {
    for (const auto& p : s.points) csv::write_row(out, {s.label, p.unit_id, csv::format_double(p.distance)});
  }
}

void write_series_svg(const std::vector<TrackSeries>& series, const std::string& title, const std::string& path) {
  if (series.empty()) return;
  std::vector<std::string> ticks;
  for (const auto& p : series.front().points) ticks.push_back(p.unit_id);
  std::vector<svg::LineSeries> lines;
  for (const auto& s : series) {
    svg::LineSeries line{s.label, {}};
    for (const auto& p : s.points) line.values.push_back(p.distance);
    lines.push_back(std::move(line));
  }
  svg::write(path, svg::line_chart(title, ticks, lines));
}

}  // namespace narrative
