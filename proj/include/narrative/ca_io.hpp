#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/ca.hpp"
#include "narrative/contingency.hpp"

namespace narrative {

/// Fits the table and attaches its row and column ids as point labels.
CAModel fit(const ContingencyTable& table);

/// Eigenvalues, shares, masses, labels and both principal coordinate sets.
/// `model_from_json` restores a model bit-identical to the exported one.
nlohmann::json model_to_json(const CAModel& model);
CAModel model_from_json(const nlohmann::json& doc);
void write_model_json(const CAModel& model, const std::string& path);
CAModel read_model_json(const std::string& path);

/// Labelled matrix with columns prefix1..prefixK.
void write_matrix_csv(const std::string& path, const std::vector<std::string>& labels,
                      const Eigen::MatrixXd& values, const std::string& prefix);
Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* labels = nullptr);

/// (id, x, y, ctr) for one factor plane; ctr is the share of the plane's
/// inertia carried by the point.
void write_plane_csv(const std::string& path, const CAModel& model, const PointDiagnostics& diag, Side side,
                     std::array<Eigen::Index, 2> plane);

/// Scatter of both point clouds in a factor plane, keeping only points
/// above `multiplier` times the mean contribution to either axis.
void write_plane_svg(const std::string& path, const CAModel& model, const PointDiagnostics& diag,
                     std::array<Eigen::Index, 2> plane, double multiplier);

}  // namespace narrative
