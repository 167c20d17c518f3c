#include "narrative/chrono_cluster.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "narrative/csv.hpp"
#include "narrative/error.hpp"

namespace narrative {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

// Unbiased integer in [0, bound) by rejection; std distributions are not
// portable across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Sequence of live clusters, each identified by its first index.
struct Chain {
  std::vector<Eigen::Index> next;
  std::vector<Eigen::Index> prev;
  std::vector<Eigen::Index> last;
  std::vector<bool> alive;
  Eigen::MatrixXd dist;  // complete-link distance between live clusters

  explicit Chain(const Eigen::Ref<const PointMatrix>& points) : dist(pairwise_distances(points)) {
    const Eigen::Index n = points.rows();
    next.resize(static_cast<std::size_t>(n));
    prev.resize(static_cast<std::size_t>(n));
    last.resize(static_cast<std::size_t>(n));
    alive.assign(static_cast<std::size_t>(n), true);
    for (Eigen::Index i = 0; i < n; ++i) {
      next[static_cast<std::size_t>(i)] = i + 1 < n ? i + 1 : -1;
      prev[static_cast<std::size_t>(i)] = i - 1;
      last[static_cast<std::size_t>(i)] = i;
    }
  }

  Eigen::Index right_of(Eigen::Index a) const { return next[static_cast<std::size_t>(a)]; }

  // Merges a with its right neighbour b; the result keeps representative a.
  void merge(Eigen::Index a) {
    const auto ua = static_cast<std::size_t>(a);
    const Eigen::Index b = next[ua];
    const auto ub = static_cast<std::size_t>(b);
    for (Eigen::Index c = 0; c < dist.rows(); ++c) {
      if (!alive[static_cast<std::size_t>(c)] || c == a || c == b) continue;
      const double d = std::max(dist(a, c), dist(b, c));
      dist(a, c) = d;
      dist(c, a) = d;
    }
    alive[ub] = false;
    last[ua] = last[ub];
    next[ua] = next[ub];
    if (next[ua] >= 0) prev[static_cast<std::size_t>(next[ua])] = a;
  }
};

}  // namespace

Eigen::MatrixXd pairwise_distances(const Eigen::Ref<const PointMatrix>& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

PointMatrix stack_points(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) return PointMatrix(0, 0);
  const Eigen::Index dim = points.front().size();
  PointMatrix m(static_cast<Eigen::Index>(points.size()), dim);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) {
      throw Error("point " + std::to_string(i) + " has dimension " + std::to_string(points[i].size()) +
                  ", expected " + std::to_string(dim));
    }
    m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  }
  return m;
}

Dendrogram constrained_cluster(const Eigen::Ref<const PointMatrix>& points) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw Error("constrained_cluster: no points");
  Dendrogram tree;
  tree.leaves = n;
  Chain chain(points);
  std::vector<Eigen::Index> id_of(static_cast<std::size_t>(n));
  std::iota(id_of.begin(), id_of.end(), Eigen::Index{0});

  for (Eigen::Index step = 0; step + 1 < n; ++step) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a >= 0; a = chain.right_of(a)) {
      const Eigen::Index b = chain.right_of(a);
      if (b < 0) break;
      if (chain.dist(a, b) < best_d) {
        best_d = chain.dist(a, b);
        best = a;
      }
    }
    const Eigen::Index b = chain.right_of(best);
    Merge m{id_of[static_cast<std::size_t>(best)], id_of[static_cast<std::size_t>(b)], best_d, best,
            chain.last[static_cast<std::size_t>(b)]};
    chain.merge(best);
    id_of[static_cast<std::size_t>(best)] = n + step;
    tree.merges.push_back(m);
  }
  return tree;
}

Dendrogram constrained_cluster(const std::vector<Eigen::VectorXd>& points) {
  return constrained_cluster(stack_points(points));
}

namespace {

std::vector<int> labels_after(const Dendrogram& dendrogram, std::size_t merges) {
  std::vector<bool> starts(static_cast<std::size_t>(dendrogram.leaves), true);
  for (std::size_t s = 0; s < merges; ++s) {
    const auto& m = dendrogram.merges[s];
    for (Eigen::Index i = m.first + 1; i <= m.last; ++i) starts[static_cast<std::size_t>(i)] = false;
  }
  std::vector<int> labels(starts.size());
  int label = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i]) ++label;
    labels[i] = label;
  }
  return labels;
}

}  // namespace

std::vector<int> cut_count(const Dendrogram& dendrogram, Eigen::Index k) {
  if (k < 1 || k > dendrogram.leaves) {
    throw Error("cut: cluster count " + std::to_string(k) + " outside [1, " + std::to_string(dendrogram.leaves) + "]");
  }
  return labels_after(dendrogram, static_cast<std::size_t>(dendrogram.leaves - k));
}

std::vector<int> cut_height(const Dendrogram& dendrogram, double h) {
  if (!(h >= 0)) throw Error("cut: height must be non-negative");
  std::size_t applied = 0;
  while (applied < dendrogram.merges.size() && dendrogram.merges[applied].height <= h) ++applied;
  return labels_after(dendrogram, applied);
}

double permutation_p_value(const Eigen::Ref<const Eigen::MatrixXd>& pooled, Eigen::Index size_a, int n_perm,
                           std::uint64_t seed) {
  const Eigen::Index m = pooled.rows();
  const Eigen::Index size_b = m - size_a;
  if (size_a < 1 || size_b < 1) throw Error("permutation test: both groups need at least one point");
  if (n_perm < 1) throw Error("permutation test: need at least one permutation");

  const double observed = pooled.topRightCorner(size_a, size_b).sum() / static_cast<double>(size_a * size_b);
  const double tolerance = 1e-12 * std::max(1.0, std::abs(observed));
  const Eigen::Index draw = std::min(size_a, size_b);
  const Eigen::VectorXd row_sums = pooled.rowwise().sum();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::int64_t at_least = 0;
  for (int t = 0; t < n_perm; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (Eigen::Index k = 0; k < draw; ++k) {
      const auto pick = k + static_cast<Eigen::Index>(uniform_below(rng, static_cast<std::uint64_t>(m - k)));
      std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
    }
    double within = 0.0;
    double total = 0.0;
    for (Eigen::Index k = 0; k < draw; ++k) {
      const Eigen::Index i = order[static_cast<std::size_t>(k)];
      total += row_sums(i);
      for (Eigen::Index l = 0; l < draw; ++l) within += pooled(i, order[static_cast<std::size_t>(l)]);
    }
    const double statistic = (total - within) / static_cast<double>(size_a * size_b);
    if (statistic >= observed - tolerance) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(n_perm + 1);
}

double permutation_merge_test(const Eigen::Ref<const PointMatrix>& group_a, const Eigen::Ref<const PointMatrix>& group_b,
                              int n_perm, std::uint64_t seed) {
  if (group_a.rows() < 1 || group_b.rows() < 1) throw Error("permutation test: both groups need at least one point");
  if (group_a.cols() != group_b.cols()) throw Error("permutation test: groups differ in dimension");
  PointMatrix pooled(group_a.rows() + group_b.rows(), group_a.cols());
  pooled << group_a, group_b;
  return permutation_p_value(pairwise_distances(pooled), group_a.rows(), n_perm, seed);
}

Segmentation segment(const Eigen::Ref<const PointMatrix>& points, double alpha, int n_perm, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw Error("segment: need at least 2 points");
  if (!(alpha >= 0 && alpha < 1)) throw Error("segment: alpha must lie in [0, 1)");

  Chain chain(points);
  const Eigen::MatrixXd point_dist = chain.dist;
  // refused[a] holds the p-value of the refused merge of a with its right
  // neighbour, or NaN while that pair is untested.
  std::vector<double> refused(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());

  for (;;) {
    Eigen::Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a >= 0; a = chain.right_of(a)) {
      const Eigen::Index b = chain.right_of(a);
      if (b < 0) break;
      if (!std::isnan(refused[static_cast<std::size_t>(a)])) continue;
      if (chain.dist(a, b) < best_d) {
        best_d = chain.dist(a, b);
        best = a;
      }
    }
    if (best < 0) break;

    const Eigen::Index b = chain.right_of(best);
    const Eigen::Index last = chain.last[static_cast<std::size_t>(b)];
    const Eigen::Index size = last - best + 1;
    const double p = permutation_p_value(point_dist.block(best, best, size, size), b - best, n_perm,
                                         derive_seed(seed, static_cast<std::uint64_t>(best),
                                                     static_cast<std::uint64_t>(last) * 0x100000001ULL +
                                                         static_cast<std::uint64_t>(b)));
    if (p > alpha) {
      chain.merge(best);
      refused[static_cast<std::size_t>(best)] = std::numeric_limits<double>::quiet_NaN();
      const Eigen::Index left = chain.prev[static_cast<std::size_t>(best)];
      if (left >= 0) refused[static_cast<std::size_t>(left)] = std::numeric_limits<double>::quiet_NaN();
    } else {
      refused[static_cast<std::size_t>(best)] = p;
    }
  }

  Segmentation out;
  out.alpha = alpha;
  out.n_permutations = n_perm;
  out.seed = seed;
  for (Eigen::Index a = 0; a >= 0; a = chain.right_of(a)) {
    out.segments.push_back({a, chain.last[static_cast<std::size_t>(a)]});
    if (chain.right_of(a) >= 0) {
      out.boundaries.push_back(chain.right_of(a));
      out.boundary_p_values.push_back(refused[static_cast<std::size_t>(a)]);
    }
  }
  return out;
}

SingletonFilterResult drop_singleton_segments(const Segmentation& segmentation, const ContingencyTable& table) {
  if (segmentation.segments.empty() || segmentation.segments.back().last + 1 != table.rows()) {
    throw Error("drop_singleton_segments: segmentation does not cover the table rows");
  }
  SingletonFilterResult out;
  out.segmentation.alpha = segmentation.alpha;
  out.segmentation.n_permutations = segmentation.n_permutations;
  out.segmentation.seed = segmentation.seed;

  std::vector<Eigen::Index> rows;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges;
  std::vector<std::string> ids;
  for (std::size_t s = 0; s < segmentation.segments.size(); ++s) {
    const auto& seg = segmentation.segments[s];
    if (seg.size() < 2) {
      out.removed_rows.push_back(table.row_ids()[static_cast<std::size_t>(seg.first)]);
      continue;
    }
    const auto first = static_cast<Eigen::Index>(rows.size());
    for (Eigen::Index i = seg.first; i <= seg.last; ++i) rows.push_back(i);
    const auto last = static_cast<Eigen::Index>(rows.size()) - 1;
    if (!out.segmentation.segments.empty()) {
      out.segmentation.boundaries.push_back(first);
      out.segmentation.boundary_p_values.push_back(segmentation.boundary_p_values.at(s - 1));
    }
    out.segmentation.segments.push_back({first, last});
    ranges.emplace_back(first, last);
    ids.push_back(std::to_string(ranges.size()));
  }
  if (ranges.empty()) throw Error("drop_singleton_segments: every segment is a singleton");

  out.unit_table = select_rows(table, rows);
  std::size_t k = 0;
  for (const auto& word : table.col_ids()) {
    if (k < out.unit_table.col_ids().size() && out.unit_table.col_ids()[k] == word) {
      ++k;
    } else {
      out.removed_words.push_back(word);
    }
  }
  out.segment_table = sum_row_ranges(out.unit_table, ranges, std::move(ids));
  return out;
}

nlohmann::json dendrogram_to_json(const Dendrogram& dendrogram, const std::vector<std::string>& labels) {
  nlohmann::json doc;
  doc["leaves"] = labels;
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : dendrogram.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height},
                      {"first", labels.at(static_cast<std::size_t>(m.first))},
                      {"last", labels.at(static_cast<std::size_t>(m.last))}});
  }
  doc["merges"] = std::move(merges);
  return doc;
}

std::string dendrogram_outline(const Dendrogram& dendrogram, const std::vector<std::string>& labels) {
  std::ostringstream out;
  const Eigen::Index n = dendrogram.leaves;
  auto visit = [&](auto&& self, Eigen::Index node, int depth) -> void {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    if (node < n) {
      out << labels.at(static_cast<std::size_t>(node)) << '\n';
      return;
    }
    const auto& m = dendrogram.merges[static_cast<std::size_t>(node - n)];
    out << '[' << labels.at(static_cast<std::size_t>(m.first)) << " .. " << labels.at(static_cast<std::size_t>(m.last))
        << "] height " << csv::format_double(m.height) << '\n';
    self(self, m.left, depth + 1);
    self(self, m.right, depth + 1);
  };
  if (n > 0) visit(visit, dendrogram.merges.empty() ? 0 : n + static_cast<Eigen::Index>(dendrogram.merges.size()) - 1, 0);
  return out.str();
}

void write_segmentation_csv(const Segmentation& segmentation, const std::vector<std::string>& ids,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  csv::write_row(out, {"segment_id", "first_id", "last_id", "size", "boundary_p"});
  for (std::size_t s = 0; s < segmentation.segments.size(); ++s) {
    const auto& seg = segmentation.segments[s];
    csv::write_row(out, {std::to_string(s + 1), ids.at(static_cast<std::size_t>(seg.first)),
                         ids.at(static_cast<std::size_t>(seg.last)), std::to_string(seg.size()),
                         s < segmentation.boundary_p_values.size() ? csv::format_double(segmentation.boundary_p_values[s])
                                                                   : std::string()});
  }
}

Segmentation read_segmentation_csv(const std::string& path, const std::vector<std::string>& ids) {
  const auto records = csv::read_file(path);
  Segmentation seg;
  auto index_of = [&](const std::string& id, std::size_t line) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == id) return static_cast<Eigen::Index>(i);
    }
    throw Error("segmentation '" + path + "' line " + std::to_string(line) + ": unknown unit id '" + id + "'");
  };
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != 5) throw Error("segmentation '" + path + "' line " + std::to_string(records[r].line) + ": expected 5 fields");
    Segment s{index_of(f[1], records[r].line), index_of(f[2], records[r].line)};
    const Eigen::Index expected_first = seg.segments.empty() ? 0 : seg.segments.back().last + 1;
    if (s.first != expected_first || s.last < s.first) {
      throw Error("segmentation '" + path + "' line " + std::to_string(records[r].line) + ": segments are not contiguous");
    }
    if (!seg.segments.empty()) seg.boundaries.push_back(s.first);
    seg.segments.push_back(s);
    if (!f[4].empty()) seg.boundary_p_values.push_back(std::stod(f[4]));
  }
  if (seg.segments.empty()) throw Error("segmentation '" + path + "' has no segments");
  return seg;
}

}  // namespace narrative
