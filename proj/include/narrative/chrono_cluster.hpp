#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "narrative/contingency.hpp"

namespace narrative {

/// Points are the rows of a matrix, in sequence order.
using PointMatrix = Eigen::MatrixXd;

/// One agglomeration. Leaves are clusters 0..n-1 and merge s creates
/// cluster n+s covering the sequence interval [first, last].
struct Merge {
  Eigen::Index left = 0;
  Eigen::Index right = 0;
  double height = 0.0;
  Eigen::Index first = 0;
  Eigen::Index last = 0;
};

struct Dendrogram {
  Eigen::Index leaves = 0;
  std::vector<Merge> merges;
};

struct Segment {
  Eigen::Index first = 0;
  Eigen::Index last = 0;
  Eigen::Index size() const { return last - first + 1; }
};

/// Contiguous partition. `boundary_p_values[b]` is the p-value of the
/// refused merge between segments b and b+1; `boundaries[b]` is the first
/// index of segment b+1.
struct Segmentation {
  std::vector<Segment> segments;
  std::vector<Eigen::Index> boundaries;
  std::vector<double> boundary_p_values;
  double alpha = 0.1;
  int n_permutations = 999;
  std::uint64_t seed = 0;
};

/// Euclidean distances between all rows, computed from coordinate
/// differences rather than a Gram expansion.
Eigen::MatrixXd pairwise_distances(const Eigen::Ref<const PointMatrix>& points);

/// Stacks equal-length vectors into a point matrix; throws on a dimension mismatch.
PointMatrix stack_points(const std::vector<Eigen::VectorXd>& points);

/// Complete-link agglomeration where only sequence-adjacent clusters may
/// merge. Each step takes the adjacent pair with the smallest maximum
/// pairwise distance, the lowest left index winning ties.
Dendrogram constrained_cluster(const Eigen::Ref<const PointMatrix>& points);
Dendrogram constrained_cluster(const std::vector<Eigen::VectorXd>& points);

/// Labels 1..k in sequence order.
std::vector<int> cut_count(const Dendrogram& dendrogram, Eigen::Index k);
/// Applies every merge whose height is <= h.
std::vector<int> cut_height(const Dendrogram& dendrogram, double h);

/// p-value of the merge of two groups. The statistic is the mean Euclidean
/// distance between members of A and members of B; pooled members are
/// relabelled at random with group sizes kept, and
/// p = (1 + #{T* >= T}) / (n_perm + 1). Trial t draws from its own stream
/// seeded from (seed, t).
double permutation_merge_test(const Eigen::Ref<const PointMatrix>& group_a, const Eigen::Ref<const PointMatrix>& group_b,
                              int n_perm, std::uint64_t seed);

/// Same test on a precomputed pooled distance matrix whose first `size_a`
/// rows form group A.
double permutation_p_value(const Eigen::Ref<const Eigen::MatrixXd>& pooled, Eigen::Index size_a, int n_perm,
                           std::uint64_t seed);

/// Constrained complete-link agglomeration in which each candidate merge
/// is performed only when its permutation p-value exceeds alpha. Refused
/// pairs become segment boundaries and are re-tested only after one side
/// has grown.
Segmentation segment(const Eigen::Ref<const PointMatrix>& points, double alpha, int n_perm, std::uint64_t seed);

struct SingletonFilterResult {
  Segmentation segmentation;        ///< over the rows of unit_table
  ContingencyTable unit_table;      ///< rows of non-singleton segments only
  ContingencyTable segment_table;   ///< one summed row per kept segment
  std::vector<std::string> removed_rows;
  std::vector<std::string> removed_words;
};

/// Removes one-unit segments and the words left without support, then sums
/// the remaining units by segment.
SingletonFilterResult drop_singleton_segments(const Segmentation& segmentation, const ContingencyTable& table);

nlohmann::json dendrogram_to_json(const Dendrogram& dendrogram, const std::vector<std::string>& labels);
/// Indented outline, one line per node, root first.
std::string dendrogram_outline(const Dendrogram& dendrogram, const std::vector<std::string>& labels);

/// (segment_id, first_id, last_id, size, boundary_p); boundary_p refers to
/// the boundary after the segment and is empty for the last one.
void write_segmentation_csv(const Segmentation& segmentation, const std::vector<std::string>& ids,
                            const std::string& path);
Segmentation read_segmentation_csv(const std::string& path, const std::vector<std::string>& ids);

}  // namespace narrative
