// One line per acceptance criterion: PASS, FAIL or SKIPPED with the measured values.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "narrative/ca.hpp"
#include "narrative/ca_io.hpp"
#include "narrative/chrono_cluster.hpp"
#include "narrative/contingency.hpp"
#include "narrative/pipeline.hpp"
#include "narrative/text_ingest.hpp"
#include "narrative/tracker.hpp"

using namespace narrative;
namespace fs = std::filesystem;

namespace {

constexpr double kInertiaTol = 1e-10;
constexpr double kTransitionTol = 1e-8;
constexpr double kDistanceTol = 1e-8;
constexpr double kCtrTol = 1e-10;
constexpr double kCos2Tol = 1e-8;
constexpr double kCaSeconds = 10.0;
constexpr double kOracleTol = 1e-8;
constexpr double kHeightTol = 1e-12;
constexpr double kAlpha = 0.10;
constexpr double kRejectLow = 0.07;
constexpr double kRejectHigh = 0.13;
constexpr double kPythagorasTol = 1e-12;
constexpr double kSharePointsTol = 0.01;
constexpr double kCorpusSeconds = 30.0;

enum class Status { Pass, Fail, Skipped };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

Eigen::MatrixXd random_counts(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_int_distribution<int> count(1, 12);
  std::bernoulli_distribution zero(0.5);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = zero(rng) ? 0 : count(rng);
  for (int i = 0; i < rows; ++i)
    if (m.row(i).sum() == 0) m(i, i % cols) = 1;
  for (int j = 0; j < cols; ++j)
    if (m.col(j).sum() == 0) m(j % rows, j) = 1;
  return m;
}

ContingencyTable table_of(const Eigen::MatrixXd& counts) {
  std::vector<std::string> rows, cols;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) rows.push_back("u" + std::to_string(i + 1));
  for (Eigen::Index j = 0; j < counts.cols(); ++j) cols.push_back("w" + std::to_string(j + 1));
  CountMatrix m = counts.cast<std::int64_t>().sparseView();
  return ContingencyTable(m, rows, cols);
}

Outcome ca_correctness() {
  Timer timer;
  std::mt19937_64 rng(20240601);
  double worst_inertia = 0, worst_transition = 0, worst_distance = 0, worst_ctr = 0, worst_cos2 = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = std::uniform_int_distribution<int>(2, 20)(rng);
    const int cols = std::uniform_int_distribution<int>(2, 30)(rng);
    const Eigen::MatrixXd counts = random_counts(rng, rows, cols);
    const auto table = table_of(counts);
    const auto model = fit(counts);
    if (model.axes() == 0) continue;
    worst_inertia = std::max(worst_inertia, std::abs(model.eigenvalues.sum() - total_inertia(table)));

    const Eigen::VectorXd root = model.eigenvalues.cwiseSqrt();
    const Eigen::MatrixXd row_profiles = counts.rowwise().sum().cwiseInverse().asDiagonal() * counts;
    const Eigen::MatrixXd col_profiles =
        counts.colwise().sum().transpose().cwiseInverse().asDiagonal() * counts.transpose();
    const Eigen::MatrixXd inv_root = root.cwiseInverse().asDiagonal();
    worst_transition = std::max(
        {worst_transition, (row_profiles * model.col_principal * inv_root - model.row_principal).cwiseAbs().maxCoeff(),
         (col_profiles * model.row_principal * inv_root - model.col_principal).cwiseAbs().maxCoeff()});

    for (Eigen::Index a = 0; a < rows; ++a) {
      for (Eigen::Index b = a + 1; b < rows; ++b) {
        const double full = (model.row_principal.row(a) - model.row_principal.row(b)).norm();
        worst_distance = std::max(worst_distance, std::abs(full - chi2_distance(table, a, b)));
      }
    }

    const auto diag = diagnostics(model);
    worst_ctr = std::max({worst_ctr, (diag.row_ctr.colwise().sum().array() - 1).abs().maxCoeff(),
                          (diag.col_ctr.colwise().sum().array() - 1).abs().maxCoeff()});
    for (Eigen::Index i = 0; i < rows; ++i)
      if (model.row_principal.row(i).norm() > 0) worst_cos2 = std::max(worst_cos2, std::abs(diag.row_cos2.row(i).sum() - 1));
    for (Eigen::Index j = 0; j < cols; ++j)
      if (model.col_principal.row(j).norm() > 0) worst_cos2 = std::max(worst_cos2, std::abs(diag.col_cos2.row(j).sum() - 1));
  }
  const double secs = timer.seconds();
  const bool ok = worst_inertia <= kInertiaTol && worst_transition < kTransitionTol && worst_distance <= kDistanceTol &&
                  worst_ctr <= kCtrTol && worst_cos2 <= kCos2Tol && secs < kCaSeconds;
  return {ok ? Status::Pass : Status::Fail,
          "100 tables; max |sum lambda - inertia| " + fmt("%.1e", worst_inertia) + ", transition " +
              fmt("%.1e", worst_transition) + ", distance " + fmt("%.1e", worst_distance) + ", CTR " +
              fmt("%.1e", worst_ctr) + ", COS2 " + fmt("%.1e", worst_cos2) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome ca_oracle() {
  std::mt19937_64 rng(6080);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd counts = random_counts(rng, 6, 8);
    const Eigen::MatrixXd p = counts / counts.sum();
    const Eigen::VectorXd r = p.rowwise().sum();
    const Eigen::VectorXd c = p.colwise().sum().transpose();
    const Eigen::VectorXd w = c.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd a =
        w.asDiagonal() * (p.transpose() * r.cwiseInverse().asDiagonal() * p - c * c.transpose()) * w.asDiagonal();
    const Eigen::VectorXd oracle = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().reverse();
    const auto model = fit(counts);
    for (Eigen::Index k = 0; k < oracle.size(); ++k) {
      const double got = k < model.axes() ? model.eigenvalues(k) : 0.0;
      worst = std::max(worst, std::abs(got - oracle(k)));
    }
  }
  return {worst <= kOracleTol ? Status::Pass : Status::Fail, "20 tables 6x8; max eigenvalue error " + fmt("%.1e", worst)};
}

double complete_link(const PointMatrix& p, Eigen::Index a0, Eigen::Index a1, Eigen::Index b0, Eigen::Index b1) {
  double d = 0;
  for (Eigen::Index i = a0; i <= a1; ++i)
    for (Eigen::Index j = b0; j <= b1; ++j) d = std::max(d, (p.row(i) - p.row(j)).norm());
  return d;
}

std::vector<double> exhaustive_heights(const PointMatrix& p) {
  std::vector<double> best, path;
  std::function<void(std::vector<std::pair<Eigen::Index, Eigen::Index>>)> visit = [&](auto clusters) {
    if (clusters.size() == 1) {
      if (best.empty() || path < best) best = path;
      return;
    }
    for (std::size_t a = 0; a + 1 < clusters.size(); ++a) {
      path.push_back(complete_link(p, clusters[a].first, clusters[a].second, clusters[a + 1].first,
                                   clusters[a + 1].second));
      if (best.empty() || !(std::vector<double>(best.begin(), best.begin() + path.size()) < path)) {
        auto next = clusters;
        next[a].second = next[a + 1].second;
        next.erase(next.begin() + static_cast<std::ptrdiff_t>(a) + 1);
        visit(next);
      }
      path.pop_back();
    }
  };
  std::vector<std::pair<Eigen::Index, Eigen::Index>> leaves;
  for (Eigen::Index i = 0; i < p.rows(); ++i) leaves.emplace_back(i, i);
  visit(leaves);
  return best;
}

Outcome clustering_oracle() {
  std::mt19937_64 rng(3131);
  std::normal_distribution<double> normal;
  double worst = 0;
  int non_monotone = 0;
  auto monotone = [](const Dendrogram& d) {
    for (std::size_t s = 1; s < d.merges.size(); ++s)
      if (d.merges[s].height < d.merges[s - 1].height) return false;
    return true;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const int dim = std::uniform_int_distribution<int>(1, 4)(rng);
    PointMatrix p(n, dim);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = normal(rng);
    const auto tree = constrained_cluster(p);
    const auto oracle = exhaustive_heights(p);
    if (tree.merges.size() != oracle.size()) return {Status::Fail, "merge count differs on trial " + std::to_string(trial)};
    for (std::size_t s = 0; s < oracle.size(); ++s) worst = std::max(worst, std::abs(tree.merges[s].height - oracle[s]));
    if (!monotone(tree)) ++non_monotone;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 60)(rng);
    PointMatrix p(n, 3);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = normal(rng);
    if (!monotone(constrained_cluster(p))) ++non_monotone;
  }
  const bool ok = worst <= kHeightTol && non_monotone == 0;
  return {ok ? Status::Pass : Status::Fail, "50 oracle sequences, max height error " + fmt("%.1e", worst) + "; " +
                                                std::to_string(non_monotone) + " non-monotone of 250 fuzz cases"};
}

Outcome permutation_calibration() {
  std::normal_distribution<double> normal;
  int rejected = 0;
  constexpr int trials = 500;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(900000 + static_cast<std::uint64_t>(t));
    PointMatrix a(10, 2), b(10, 2);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
    if (permutation_merge_test(a, b, 999, static_cast<std::uint64_t>(t)) <= kAlpha) ++rejected;
  }
  const double rate = static_cast<double>(rejected) / trials;

  PointMatrix blobs(10, 1);
  blobs << 0, 0, 0, 0, 0, 100, 100, 100, 100, 100;
  const auto first = segment(blobs, kAlpha, 999, 1);
  const auto second = segment(blobs, kAlpha, 999, 1);
  const bool blobs_ok = first.segments.size() == 2 && first.boundaries == std::vector<Eigen::Index>{5} &&
                        first.boundary_p_values[0] <= kAlpha && second.boundaries == first.boundaries &&
                        second.boundary_p_values == first.boundary_p_values;
  const bool ok = rate >= kRejectLow && rate <= kRejectHigh && blobs_ok;
  std::string blob_detail = std::to_string(first.segments.size()) + " blob segments";
  if (!first.boundary_p_values.empty()) blob_detail += ", boundary p " + fmt("%.4f", first.boundary_p_values[0]);
  return {ok ? Status::Pass : Status::Fail,
          "null rejection rate " + fmt("%.3f", rate) + " over 500 trials; " + blob_detail};
}

Outcome dyad_identities() {
  CAModel m;
  m.eigenvalues = Eigen::Vector2d(0.5, 0.25);
  m.row_principal = Eigen::MatrixXd::Zero(1, 2);
  m.col_principal.resize(2, 2);
  m.col_principal << 3, 0, 0, 4;
  m.row_masses = Eigen::VectorXd::Ones(1);
  m.col_masses = Eigen::VectorXd::Constant(2, 0.5);
  m.row_labels = {"s"};
  m.col_labels = {"f", "m"};
  const double pythagoras = std::abs(dyad_distance(m, 0, "f", "m") - 5.0);

  std::mt19937_64 rng(555);
  const auto model = fit(table_of(random_counts(rng, 20, 25)));
  std::uniform_int_distribution<Eigen::Index> row(0, 19), col(0, 24);
  int asymmetric = 0, below_max = 0;
  double worst_identity = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index i = row(rng);
    const auto& f = model.col_labels[static_cast<std::size_t>(col(rng))];
    const auto& g = model.col_labels[static_cast<std::size_t>(col(rng))];
    const double d = dyad_distance(model, i, f, g);
    const double df = term_distances(model, f, {i}).points[0].distance;
    const double dg = term_distances(model, g, {i}).points[0].distance;
    if (d != dyad_distance(model, i, g, f)) ++asymmetric;
    if (d < std::max(df, dg)) ++below_max;
    worst_identity = std::max(worst_identity, std::abs(d * d - (df * df + dg * dg)) / std::max(1.0, d * d));
  }
  const bool ok = pythagoras <= kPythagorasTol && asymmetric == 0 && below_max == 0 && worst_identity <= kPythagorasTol;
  return {ok ? Status::Pass : Status::Fail,
          "3-4-5 error " + fmt("%.1e", pythagoras) + "; 1000 triples: " + std::to_string(asymmetric) + " asymmetric, " +
              std::to_string(below_max) + " below max, max identity error " + fmt("%.1e", worst_identity)};
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / "narrative_acceptance_determinism";
  fs::remove_all(base);
  auto doc = nlohmann::json::parse(read_all(fs::path(NARRATIVE_FIXTURES) / "segment_blocks.json"));
  std::vector<std::string> manifests;
  for (const char* name : {"a", "b"}) {
    doc["output"] = (base / name).string();
    run(parse_config(doc, NARRATIVE_FIXTURES));
    manifests.push_back(read_all(base / name / "manifest.json"));
  }
  const bool ok = !manifests[0].empty() && manifests[0] == manifests[1];
  const auto files = nlohmann::json::parse(manifests[0]).at("files").size();
  fs::remove_all(base);
  return {ok ? Status::Pass : Status::Fail,
          std::to_string(files) + " artifacts; manifests " + (ok ? "byte-identical" : "differ")};
}

fs::path corpus_data_dir() {
  if (const char* env = std::getenv("NARRATIVE_CORPUS_DATA")) return env;
  return NARRATIVE_DATA_DIR;
}

std::string casablanca_check(const fs::path& csv, bool& ok) {
  Timer timer;
  std::vector<std::string> failures;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  };
  const auto units = load_dialogue_csv(csv.string(), NormalizationRules::dialogue());
  const auto raw = build_table(units);
  const auto filtered = filter_vocabulary(raw, FilterSpec{2, 2}).table;
  expect(units.size() == 150, "units " + std::to_string(units.size()) + " != 150");
  expect(raw.cols() == 528, "unique words " + std::to_string(raw.cols()) + " != 528");
  expect(filtered.cols() == 261, "retained " + std::to_string(filtered.cols()) + " != 261");

  const auto model = fit(filtered);
  const auto share = model.inertia_share();
  if (model.axes() >= 2) {
    expect(std::abs(100 * share(0) - 2.28) <= kSharePointsTol, "factor 1 share " + fmt("%.3f", 100 * share(0)) + "%");
    expect(std::abs(100 * share(1) - 2.16) <= kSharePointsTol, "factor 2 share " + fmt("%.3f", 100 * share(1)) + "%");
  } else {
    failures.push_back("fewer than 2 axes");
  }

  const auto map = UnitAggregationMap::from_csv((fs::path(NARRATIVE_CONFIGS) / "casablanca_scene_map.csv").string(), units);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> ranges;
  std::vector<std::string> ids;
  for (const auto& g : map.groups) {
    ranges.emplace_back(static_cast<Eigen::Index>(g.first_index), static_cast<Eigen::Index>(g.last_index));
    ids.push_back(g.group_id);
  }
  const auto scenes = sum_row_ranges(filtered, ranges, ids);
  const auto summary = describe(scenes);
  expect(scenes.rows() == 11 && scenes.cols() == 261,
         "scene table " + std::to_string(scenes.rows()) + "x" + std::to_string(scenes.cols()));
  expect(summary.nonzeros == 910, "scene non-zeros " + std::to_string(summary.nonzeros) + " != 910");
  expect(summary.max_count == 43, "scene max " + std::to_string(summary.max_count) + " != 43");

  const auto scene_model = fit(scenes);
  const auto labels = cut_count(constrained_cluster(diagnostics(scene_model).row_cos2), 5);
  expect(labels == std::vector<int>{1, 1, 1, 2, 3, 3, 3, 3, 4, 5, 5}, "5-cluster labels differ");
  expect(timer.seconds() < kCorpusSeconds, "took " + fmt("%.1f", timer.seconds()) + " s");

  ok = ok && failures.empty();
  std::string out = "Casablanca " + std::string(failures.empty() ? "matches" : "differs:");
  for (const auto& f : failures) out += " [" + f + "]";
  return out;
}

std::string bovary_check(const fs::path& text, bool& ok) {
  Timer timer;
  auto rules = NormalizationRules::dialogue();
  rules.punctuation_to_blank = false;
  rules.apostrophe_to_blank = false;
  const auto units = split_lines(text.string(), 20, rules);
  const auto raw = build_table(units);
  std::vector<std::string> failures;
  if (units.size() != 22) failures.push_back("segments " + std::to_string(units.size()) + " != 22");
  if (raw.cols() != 3069) failures.push_back("unique words " + std::to_string(raw.cols()) + " != 3069");
  if (raw.grand_total() != 14793) failures.push_back("total words " + std::to_string(raw.grand_total()) + " != 14793");
  if (timer.seconds() >= kCorpusSeconds) failures.push_back("took " + fmt("%.1f", timer.seconds()) + " s");
  ok = ok && failures.empty();
  std::string out = "Bovary " + std::string(failures.empty() ? "matches" : "differs:");
  for (const auto& f : failures) out += " [" + f + "]";
  return out;
}

Outcome corpus_reproduction() {
  const auto dir = corpus_data_dir();
  const auto casablanca = dir / "casablanca_dialogue.csv";
  const auto bovary = dir / "bovary_ch9-12.txt";
  const bool have_c = fs::exists(casablanca), have_b = fs::exists(bovary);
  if (!have_c && !have_b) {
    return {Status::Skipped, "no reconstructed corpora in " + dir.string() +
                                 " (expects casablanca_dialogue.csv, bovary_ch9-12.txt; set NARRATIVE_CORPUS_DATA)"};
  }
  bool ok = true;
  std::vector<std::string> parts;
  auto guarded = [&](const std::string& name, auto check, const fs::path& path) -> std::string {
    if (!fs::exists(path)) return name + " skipped (no " + path.string() + ")";
    try {
      return check(path, ok);
    } catch (const std::exception& e) {
      ok = false;
      return name + " error: " + e.what();
    }
  };
  parts.push_back(guarded("Casablanca", casablanca_check, casablanca));
  parts.push_back(guarded("Bovary", bovary_check, bovary));
  return {ok ? Status::Pass : Status::Fail, parts[0] + "; " + parts[1]};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 CA correctness on random tables", ca_correctness},
      {"2 CA eigenvalues match a dense eigensolver", ca_oracle},
      {"3 constrained clustering matches exhaustive search", clustering_oracle},
      {"4 permutation test calibration and blob segmentation", permutation_calibration},
      {"5 dyad distance identities", dyad_identities},
      {"6 byte-identical reruns", determinism},
      {"7 published corpus figures", corpus_reproduction},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {Status::Fail, std::string("error: ") + e.what()};
    }
    const char* tag = outcome.status == Status::Pass ? "PASS" : outcome.status == Status::Fail ? "FAIL" : "SKIPPED";
    if (outcome.status == Status::Fail) ++failed;
    std::printf("[%s] %s: %s\n", tag, name.c_str(), outcome.detail.c_str());
  }
  return failed == 0 ? 0 : 1;
}
