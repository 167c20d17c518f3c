#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "narrative/ca_io.hpp"
#include "narrative/error.hpp"
#include "narrative/tracker.hpp"
#include "test_util.hpp"

using namespace narrative;

namespace {

CAModel model_of(const Eigen::MatrixXd& counts) { return fit(test_util::make_table(counts)); }

// Row and column principal coordinates from an eigendecomposition of S^T S.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> oracle_coordinates(const Eigen::MatrixXd& counts) {
  const Eigen::MatrixXd p = counts / counts.sum();
  const Eigen::VectorXd r = p.rowwise().sum();
  const Eigen::VectorXd c = p.colwise().sum().transpose();
  const Eigen::MatrixXd s = r.cwiseSqrt().cwiseInverse().asDiagonal() * (p - r * c.transpose()) *
                            c.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.transpose() * s);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k)
    if (solver.eigenvalues()(k) > 1e-12) keep.push_back(k);
  Eigen::MatrixXd g(counts.cols(), static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd f(counts.rows(), g.cols());
  for (std::size_t a = 0; a < keep.size(); ++a) {
    const double lambda = solver.eigenvalues()(keep[a]);
    const Eigen::VectorXd gamma = c.cwiseSqrt().cwiseInverse().asDiagonal() * solver.eigenvectors().col(keep[a]);
    g.col(static_cast<Eigen::Index>(a)) = gamma * std::sqrt(lambda);
    f.col(static_cast<Eigen::Index>(a)) = r.cwiseInverse().asDiagonal() * p * gamma;
  }
  return {f, g};
}

CAModel pythagorean_model() {
  CAModel m;
  m.eigenvalues = Eigen::Vector2d(0.5, 0.25);
  m.row_principal = Eigen::MatrixXd::Zero(1, 2);
  m.col_principal.resize(2, 2);
  m.col_principal << 3, 0, 0, 4;
  m.row_masses = Eigen::VectorXd::Ones(1);
  m.col_masses = Eigen::VectorXd::Constant(2, 0.5);
  m.row_labels = {"s"};
  m.col_labels = {"f", "m"};
  return m;
}

}  // namespace

TEST_CASE("3-4-5 dyad") {
  const auto m = pythagorean_model();
  CHECK(std::abs(dyad_distance(m, 0, "f", "m") - 5.0) < 1e-12);
  CHECK(dyad_distance(m, 0, "m", "f") == dyad_distance(m, 0, "f", "m"));
  auto at_origin = m;
  at_origin.col_principal.setZero();
  CHECK(dyad_distance(at_origin, 0, "f", "m") == 0.0);
}

TEST_CASE("term distances against oracle coordinates") {
  Eigen::MatrixXd counts(3, 4);
  counts << 5, 1, 0, 2, 1, 4, 2, 0, 0, 2, 6, 3;
  const auto model = model_of(counts);
  const auto [f, g] = oracle_coordinates(counts);
  for (Eigen::Index j = 0; j < 4; ++j) {
    const auto series = term_distances(model, "w" + std::to_string(j + 1));
    REQUIRE(series.points.size() == 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      CHECK(series.points[static_cast<std::size_t>(i)].unit_id == "u" + std::to_string(i + 1));
      CHECK(series.points[static_cast<std::size_t>(i)].distance ==
            doctest::Approx((f.row(i) - g.row(j)).norm()).epsilon(1e-10));
    }
  }
}

TEST_CASE("equal profiles give equal distances") {
  std::mt19937_64 rng(4);
  Eigen::MatrixXd counts = test_util::random_counts(rng, 6, 7);
  counts.conservativeResize(7, Eigen::NoChange);
  counts.row(6) = 3 * counts.row(2);
  const auto model = model_of(counts);
  for (const auto& word : model.col_labels) {
    const auto s = term_distances(model, word);
    CHECK(s.points[2].distance == doctest::Approx(s.points[6].distance).epsilon(1e-10));
  }
}

TEST_CASE("dyads") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd counts = test_util::random_counts(rng, 9, 8);
  const auto model = model_of(counts);

  const auto same = dyad_series(model, {"w2", "w2"});
  const auto term = term_distances(model, "w2");
  CHECK(same.label == "w2+w2");
  for (std::size_t i = 0; i < term.points.size(); ++i)
    CHECK(same.points[i].distance == doctest::Approx(std::sqrt(2.0) * term.points[i].distance).epsilon(1e-12));

  const auto series = dyad_series(model, {"w1", "w5"}, {0, 3, 8});
  REQUIRE(series.points.size() == 3);
  const std::vector<Eigen::Index> rows{0, 3, 8};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto s = model.row_principal.row(rows[k]);
    const double expected = std::sqrt((s - model.col_principal.row(0)).squaredNorm() +
                                      (s - model.col_principal.row(4)).squaredNorm());
    CHECK(series.points[k].distance == doctest::Approx(expected).epsilon(1e-14));
    CHECK(series.points[k].unit_id == model.row_labels[static_cast<std::size_t>(rows[k])]);
  }
}

TEST_CASE("dyad inequalities on random triples") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd counts = test_util::random_counts(rng, 15, 12);
  const auto model = model_of(counts);
  std::uniform_int_distribution<Eigen::Index> row(0, 14), col(0, 11);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index i = row(rng);
    const auto f = model.col_labels[static_cast<std::size_t>(col(rng))];
    const auto m = model.col_labels[static_cast<std::size_t>(col(rng))];
    const double d = dyad_distance(model, i, f, m);
    const double df = term_distances(model, f, {i}).points[0].distance;
    const double dm = term_distances(model, m, {i}).points[0].distance;
    CHECK(d >= std::max(df, dm));
    CHECK(d == dyad_distance(model, i, m, f));
    CHECK(d >= 0);
  }
}

TEST_CASE("term distances are invariant under count scaling") {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd counts = test_util::random_counts(rng, 8, 9);
  const auto a = term_distances(model_of(counts), "w3");
  const auto b = term_distances(model_of(7 * counts), "w3");
  for (std::size_t i = 0; i < a.points.size(); ++i)
    CHECK(a.points[i].distance == doctest::Approx(b.points[i].distance).epsilon(1e-10));
}

TEST_CASE("unknown terms name the closest vocabulary entries") {
  Eigen::MatrixXd counts(2, 3);
  counts << 1, 2, 0, 0, 1, 3;
  auto table = test_util::make_table(counts);
  table = ContingencyTable(table.counts(), table.row_ids(), {"darling", "love", "paris"});
  const auto model = fit(table);
  CHECK_THROWS_WITH_AS(term_distances(model, "darlin"), doctest::Contains("closest entries: darling"), Error);
  CHECK_THROWS_AS(dyad_series(model, {"love", "lov"}), Error);
}

TEST_CASE("segment distances") {
  std::mt19937_64 rng(19);
  const Eigen::MatrixXd counts = test_util::random_counts(rng, 10, 8);
  const auto table = test_util::make_table(counts);
  const auto model = fit(table);

  Segmentation whole;
  whole.segments = {{0, 9}};
  const auto single = term_segment_distances(model, table, "w4", whole);
  REQUIRE(single.series.points.size() == 1);
  const Eigen::VectorXd centre = project_supplementary(model, Eigen::VectorXd(counts.colwise().sum().transpose()), Side::Rows);
  CHECK(single.series.points[0].distance ==
        doctest::Approx((centre - model.col_principal.row(3).transpose()).norm()).epsilon(1e-12));
  CHECK(single.first_id == "u1");
  CHECK(single.last_id == "u10");
  CHECK(single.size == 10);

  Segmentation seg;
  seg.segments = {{0, 2}, {3, 3}, {4, 7}, {8, 9}};
  seg.boundaries = {3, 4, 8};
  seg.boundary_p_values = {0.01, 0.01, 0.01};
  for (const auto& word : model.col_labels) {
    const auto track = term_segment_distances(model, table, word, seg);
    const Eigen::Index j = *table.column_index(word);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t s = 0; s < seg.segments.size(); ++s) {
      const Eigen::VectorXd summed =
          counts.middleRows(seg.segments[s].first, seg.segments[s].size()).colwise().sum().transpose();
      const Eigen::VectorXd point = project_supplementary(model, summed, Side::Rows);
      const double d = (point - model.col_principal.row(j).transpose()).norm();
      CHECK(track.series.points[s].distance == doctest::Approx(d).epsilon(1e-12));
      CHECK(track.series.points[s].unit_id == std::to_string(s + 1));
      if (d < best) {
        best = d;
        arg = s;
      }
    }
    CHECK(track.closest == arg);
    CHECK(track.first_id == table.row_ids()[static_cast<std::size_t>(seg.segments[arg].first)]);
  }
}

TEST_CASE("series export") {
  const auto dir = test_util::scratch_dir("tracker_io");
  const auto model = pythagorean_model();
  const std::vector<TrackSeries> series{term_distances(model, "f"), dyad_series(model, {"f", "m"})};
  write_series_csv(series, (dir / "s.csv").string());
  CHECK(test_util::read_file(dir / "s.csv") == "label,unit_id,distance\nf,s,3\nf+m,s,5\n");
  write_series_svg(series, "t", (dir / "s.svg").string());
  const auto svg = test_util::read_file(dir / "s.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("f+m") != std::string::npos);
}
