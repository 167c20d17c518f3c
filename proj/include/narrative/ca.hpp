#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "narrative/error.hpp"

namespace narrative {

enum class Side { Rows, Columns };

/// Correspondence analysis solution. Axes are ordered by decreasing
/// eigenvalue and only axes above the rank tolerance are kept, so every
/// coordinate matrix has `axes()` columns.
template <typename Scalar>
struct BasicCAModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector eigenvalues;
  Matrix row_principal;
  Matrix col_principal;
  Matrix row_standard;
  Matrix col_standard;
  Vector row_masses;
  Vector col_masses;
  Scalar total_inertia = 0;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  Eigen::Index axes() const { return eigenvalues.size(); }
  Eigen::Index rows() const { return row_masses.size(); }
  Eigen::Index cols() const { return col_masses.size(); }

  /// lambda_k / sum(lambda).
  Vector inertia_share() const {
    const Scalar sum = eigenvalues.sum();
    return sum > 0 ? Vector(eigenvalues / sum) : Vector(Vector::Zero(eigenvalues.size()));
  }

  const Matrix& principal(Side side) const { return side == Side::Rows ? row_principal : col_principal; }
  const Matrix& standard(Side side) const { return side == Side::Rows ? row_standard : col_standard; }
  const Vector& masses(Side side) const { return side == Side::Rows ? row_masses : col_masses; }
  const std::vector<std::string>& labels(Side side) const { return side == Side::Rows ? row_labels : col_labels; }
};

using CAModel = BasicCAModel<double>;

template <typename Scalar>
struct BasicPointDiagnostics {
  using Matrix = typename BasicCAModel<Scalar>::Matrix;
  /// r_i F_ik^2 / lambda_k; each column sums to 1.
  Matrix row_ctr;
  Matrix col_ctr;
  /// F_ik^2 / sum_k F_ik^2; rows sum to 1 except for points at the origin.
  Matrix row_cos2;
  Matrix col_cos2;

  const Matrix& ctr(Side side) const { return side == Side::Rows ? row_ctr : col_ctr; }
  const Matrix& cos2(Side side) const { return side == Side::Rows ? row_cos2 : col_cos2; }
};

using PointDiagnostics = BasicPointDiagnostics<double>;

/// Fits CA to a table of non-negative frequencies with positive margins.
///
/// The standardized residuals S = D_r^{-1/2} (P - r c^T) D_c^{-1/2} are
/// factored by SVD, S = U diag(sigma) V^T, so lambda = sigma^2,
/// Phi = D_r^{-1/2} U, Gamma = D_c^{-1/2} V, F = Phi diag(sigma) and
/// G = Gamma diag(sigma). Axes with sigma_k^2 < 1e-12 sigma_1^2 are dropped,
/// and each axis is oriented so that its largest-magnitude column coordinate
/// is positive.
template <typename Derived>
BasicCAModel<typename Derived::Scalar> fit(const Eigen::MatrixBase<Derived>& counts) {
  using Scalar = typename Derived::Scalar;
  using Model = BasicCAModel<Scalar>;
  using Matrix = typename Model::Matrix;
  using Vector = typename Model::Vector;

  if (counts.rows() < 1 || counts.cols() < 1) throw Error("ca: empty table");
  if ((counts.array() < 0).any()) throw Error("ca: negative frequency");
  const Scalar n = counts.sum();
  if (!(n > 0)) throw Error("ca: table total is zero");

  const Matrix p = counts / n;
  Model model;
  model.row_masses = p.rowwise().sum();
  model.col_masses = p.colwise().sum().transpose();
  if ((model.row_masses.array() <= 0).any()) throw Error("ca: table has an empty row");
  if ((model.col_masses.array() <= 0).any()) throw Error("ca: table has an empty column");

  const Vector r_isqrt = model.row_masses.cwiseSqrt().cwiseInverse();
  const Vector c_isqrt = model.col_masses.cwiseSqrt().cwiseInverse();
  const Matrix s = r_isqrt.asDiagonal() * (p - model.row_masses * model.col_masses.transpose()) *
                   c_isqrt.asDiagonal();
  model.total_inertia = s.squaredNorm();

  Eigen::BDCSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar floor = (Scalar(1000) * eps) * (Scalar(1000) * eps);
  Eigen::Index k_max = 0;
  if (sigma.size() > 0 && sigma(0) * sigma(0) > floor) {
    const Scalar rel = Scalar(1e-12) * sigma(0) * sigma(0);
    while (k_max < sigma.size() && sigma(k_max) * sigma(k_max) >= rel && sigma(k_max) * sigma(k_max) > floor) {
      ++k_max;
    }
  }

  Matrix u = svd.matrixU().leftCols(k_max);
  Matrix v = svd.matrixV().leftCols(k_max);
  for (Eigen::Index k = 0; k < k_max; ++k) {
    Eigen::Index arg = 0;
    c_isqrt.cwiseProduct(v.col(k)).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0) {
      u.col(k) = -u.col(k);
      v.col(k) = -v.col(k);
    }
  }

  const Vector sv = sigma.head(k_max);
  model.eigenvalues = sv.cwiseAbs2();
  model.row_standard = r_isqrt.asDiagonal() * u;
  model.col_standard = c_isqrt.asDiagonal() * v;
  model.row_principal = model.row_standard * sv.asDiagonal();
  model.col_principal = model.col_standard * sv.asDiagonal();
  return model;
}

template <typename Scalar>
BasicPointDiagnostics<Scalar> diagnostics(const BasicCAModel<Scalar>& model) {
  if (model.axes() < 1) throw Error("ca: diagnostics need at least one axis");
  using Matrix = typename BasicCAModel<Scalar>::Matrix;
  auto contributions = [&](const Matrix& f, const auto& masses) -> Matrix {
    return masses.asDiagonal() * f.cwiseAbs2() * model.eigenvalues.cwiseInverse().asDiagonal();
  };
  auto correlations = [](const Matrix& f) -> Matrix {
    Matrix sq = f.cwiseAbs2();
    for (Eigen::Index i = 0; i < sq.rows(); ++i) {
      const Scalar d2 = sq.row(i).sum();
      if (d2 > 0) {
        sq.row(i) /= d2;
      } else {
        sq.row(i).setZero();
      }
    }
    return sq;
  };
  BasicPointDiagnostics<Scalar> d;
  d.row_ctr = contributions(model.row_principal, model.row_masses);
  d.col_ctr = contributions(model.col_principal, model.col_masses);
  d.row_cos2 = correlations(model.row_principal);
  d.col_cos2 = correlations(model.col_principal);
  return d;
}

/// Principal coordinates of a supplementary profile. A row profile has one
/// entry per column and is placed at the barycentre of the column standard
/// coordinates weighted by its profile; columns are the mirror case.
template <typename Scalar, typename Derived>
typename BasicCAModel<Scalar>::Vector project_supplementary(const BasicCAModel<Scalar>& model,
                                                            const Eigen::MatrixBase<Derived>& profile,
                                                            Side kind) {
  const auto& opposite = kind == Side::Rows ? model.col_standard : model.row_standard;
  const Eigen::Index expected = kind == Side::Rows ? model.cols() : model.rows();
  if (profile.size() != expected) {
    throw Error("ca: supplementary profile has " + std::to_string(profile.size()) + " entries, expected " +
                std::to_string(expected));
  }
  if ((profile.array() < 0).any()) throw Error("ca: supplementary profile has a negative entry");
  const Scalar total = profile.sum();
  if (!(total > 0)) throw Error("ca: supplementary profile sums to zero");
  return opposite.transpose() * (profile.derived().template cast<Scalar>() / total);
}

struct Contributor {
  Eigen::Index index = 0;
  std::string label;
  double coordinate = 0.0;
  double ctr = 0.0;
};

struct HalfAxisContributors {
  Eigen::Index axis = 0;
  double threshold = 0.0;
  std::vector<Contributor> negative;
  std::vector<Contributor> positive;
};

/// Points whose contribution to `axis` (0-based) exceeds `multiplier` times
/// the mean contribution, split by coordinate sign and sorted by decreasing
/// contribution. A multiplier of 0 keeps every point.
template <typename Scalar>
HalfAxisContributors top_contributors(const BasicCAModel<Scalar>& model, const BasicPointDiagnostics<Scalar>& diag,
                                      Side side, Eigen::Index axis, double multiplier) {
  if (axis < 0 || axis >= model.axes()) throw Error("ca: axis " + std::to_string(axis + 1) + " not in model");
  if (multiplier < 0) throw Error("ca: contribution multiplier must be non-negative");
  const auto& ctr = diag.ctr(side);
  const auto& coords = model.principal(side);
  const auto& labels = model.labels(side);
  HalfAxisContributors out;
  out.axis = axis;
  out.threshold = multiplier * static_cast<double>(ctr.col(axis).sum()) / static_cast<double>(ctr.rows());
  for (Eigen::Index i = 0; i < ctr.rows(); ++i) {
    const double c = static_cast<double>(ctr(i, axis));
    if (multiplier > 0 && !(c > out.threshold)) continue;
    Contributor entry{i, i < static_cast<Eigen::Index>(labels.size()) ? labels[static_cast<std::size_t>(i)]
                                                                       : std::to_string(i + 1),
                      static_cast<double>(coords(i, axis)), c};
    (entry.coordinate < 0 ? out.negative : out.positive).push_back(std::move(entry));
  }
  auto by_ctr = [](const Contributor& a, const Contributor& b) {
    return a.ctr != b.ctr ? a.ctr > b.ctr : a.index < b.index;
  };
  std::sort(out.negative.begin(), out.negative.end(), by_ctr);
  std::sort(out.positive.begin(), out.positive.end(), by_ctr);
  return out;
}

template <typename Scalar>
std::array<HalfAxisContributors, 2> top_contributors(const BasicCAModel<Scalar>& model,
                                                     const BasicPointDiagnostics<Scalar>& diag, Side side,
                                                     std::array<Eigen::Index, 2> plane, double multiplier) {
  return {top_contributors(model, diag, side, plane[0], multiplier),
          top_contributors(model, diag, side, plane[1], multiplier)};
}

}  // namespace narrative
