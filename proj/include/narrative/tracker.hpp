#pragma once

#include <string>
#include <vector>

#include "narrative/ca.hpp"
#include "narrative/chrono_cluster.hpp"
#include "narrative/contingency.hpp"

namespace narrative {

struct TrackPoint {
  std::string unit_id;
  double distance = 0.0;
};

struct TrackSeries {
  std::string label;
  std::vector<TrackPoint> points;
};

/// A character pair referenced to each unit: subject f and partner m.
struct DyadSpec {
  std::string subject;
  std::string partner;
  std::string label() const { return subject + "+" + partner; }
};

struct SegmentTrack {
  TrackSeries series;
  std::size_t closest = 0;  ///< 0-based segment index of the minimum distance
  std::string first_id;
  std::string last_id;
  Eigen::Index size = 0;
};

/// Column index of a retained word; unknown words raise an error naming
/// the closest vocabulary entries.
Eigen::Index term_column(const CAModel& model, const std::string& term);

/// Full-space Euclidean distance between the term's column point and each
/// listed row point (all rows when `rows` is empty).
TrackSeries term_distances(const CAModel& model, const std::string& term, const std::vector<Eigen::Index>& rows = {});

/// sqrt(d^2(s, f) + d^2(s, m)) for row point s and word points f, m.
double dyad_distance(const CAModel& model, Eigen::Index row, const std::string& subject, const std::string& partner);

TrackSeries dyad_series(const CAModel& model, const DyadSpec& spec, const std::vector<Eigen::Index>& rows = {});

/// Distance from the term to each segment, where a segment sits at the
/// supplementary row projection of its members' summed counts. `table` must
/// be the table the model was fitted on.
SegmentTrack term_segment_distances(const CAModel& model, const ContingencyTable& table, const std::string& term,
                                    const Segmentation& segmentation);

void write_series_csv(const std::vector<TrackSeries>& series, const std::string& path);
void write_series_svg(const std::vector<TrackSeries>& series, const std::string& title, const std::string& path);

}  // namespace narrative
