#include "narrative/ca_io.hpp"

#include <fstream>

#include "narrative/csv.hpp"
#include "narrative/svg.hpp"

namespace narrative {
namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw Error("model json: ragged coordinate matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

CAModel fit(const ContingencyTable& table) {
  if (!table.has_positive_margins()) throw Error("ca: table has an empty row or column; filter it first");
  CAModel model = fit(table.dense());
  model.row_labels = table.row_ids();
  model.col_labels = table.col_ids();
  return model;
}

nlohmann::json model_to_json(const CAModel& model) {
  nlohmann::json doc;
  doc["axes"] = model.axes();
  doc["total_inertia"] = model.total_inertia;
  doc["eigenvalues"] = to_std(model.eigenvalues);
  doc["inertia_share"] = to_std(model.inertia_share());
  doc["row_labels"] = model.row_labels;
  doc["col_labels"] = model.col_labels;
  doc["row_masses"] = to_std(model.row_masses);
  doc["col_masses"] = to_std(model.col_masses);
  doc["row_principal"] = matrix_to_json(model.row_principal);
  doc["col_principal"] = matrix_to_json(model.col_principal);
  doc["row_standard"] = matrix_to_json(model.row_standard);
  doc["col_standard"] = matrix_to_json(model.col_standard);
  return doc;
}

CAModel model_from_json(const nlohmann::json& doc) {
  try {
    CAModel model;
    model.total_inertia = doc.at("total_inertia").get<double>();
    model.eigenvalues = from_std(doc.at("eigenvalues").get<std::vector<double>>());
    model.row_labels = doc.at("row_labels").get<std::vector<std::string>>();
    model.col_labels = doc.at("col_labels").get<std::vector<std::string>>();
    model.row_masses = from_std(doc.at("row_masses").get<std::vector<double>>());
    model.col_masses = from_std(doc.at("col_masses").get<std::vector<double>>());
    const Eigen::Index k = model.eigenvalues.size();
    model.row_principal = matrix_from_json(doc.at("row_principal"), k);
    model.col_principal = matrix_from_json(doc.at("col_principal"), k);
    model.row_standard = matrix_from_json(doc.at("row_standard"), k);
    model.col_standard = matrix_from_json(doc.at("col_standard"), k);
    if (model.row_principal.rows() != model.rows() || model.col_principal.rows() != model.cols() ||
        static_cast<Eigen::Index>(model.row_labels.size()) != model.rows() ||
        static_cast<Eigen::Index>(model.col_labels.size()) != model.cols()) {
      throw Error("model json: inconsistent dimensions");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model json: ") + e.what());
  }
}

void write_model_json(const CAModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << model_to_json(model).dump(1) << '\n';
}

CAModel read_model_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

void write_matrix_csv(const std::string& path, const std::vector<std::string>& labels, const Eigen::MatrixXd& values,
                      const std::string& prefix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  csv::Row header{"id"};
  for (Eigen::Index k = 0; k < values.cols(); ++k) header.push_back(prefix + std::to_string(k + 1));
  csv::write_row(out, header);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    csv::Row row{labels.at(static_cast<std::size_t>(i))};
    for (Eigen::Index k = 0; k < values.cols(); ++k) row.push_back(csv::format_double(values(i, k)));
    csv::write_row(out, row);
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* labels) {
  const auto records = csv::read_file(path);
  if (records.empty()) throw Error("matrix '" + path + "' is empty");
  const auto cols = static_cast<Eigen::Index>(records.front().fields.size()) - 1;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()) - 1, std::max<Eigen::Index>(cols, 0));
  if (labels) labels->clear();
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (static_cast<Eigen::Index>(f.size()) != cols + 1) {
      throw Error("matrix '" + path + "' line " + std::to_string(records[r].line) + ": wrong field count");
    }
    if (labels) labels->push_back(f[0]);
    for (Eigen::Index k = 0; k < cols; ++k) {
      try {
        m(static_cast<Eigen::Index>(r) - 1, k) = std::stod(f[static_cast<std::size_t>(k) + 1]);
      } catch (const std::exception&) {
        throw Error("matrix '" + path + "' line " + std::to_string(records[r].line) + ": not a number");
      }
    }
  }
  return m;
}

void write_plane_csv(const std::string& path, const CAModel& model, const PointDiagnostics& diag, Side side,
                     std::array<Eigen::Index, 2> plane) {
  for (auto a : plane) {
    if (a < 0 || a >= model.axes()) throw Error("ca: axis " + std::to_string(a + 1) + " not in model");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  csv::write_row(out, {"id", "x", "y", "ctr"});
  const auto& f = model.principal(side);
  const auto& ctr = diag.ctr(side);
  const double la = model.eigenvalues(plane[0]);
  const double lb = model.eigenvalues(plane[1]);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    const double plane_ctr = (ctr(i, plane[0]) * la + ctr(i, plane[1]) * lb) / (la + lb);
    csv::write_row(out, {model.labels(side).at(static_cast<std::size_t>(i)), csv::format_double(f(i, plane[0])),
                         csv::format_double(f(i, plane[1])), csv::format_double(plane_ctr)});
  }
}

void write_plane_svg(const std::string& path, const CAModel& model, const PointDiagnostics& diag,
                     std::array<Eigen::Index, 2> plane, double multiplier) {
  std::vector<svg::ScatterPoint> points;
  for (Side side : {Side::Rows, Side::Columns}) {
    const auto& f = model.principal(side);
    const auto& ctr = diag.ctr(side);
    const double mean = 1.0 / static_cast<double>(ctr.rows());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      if (ctr(i, plane[0]) <= multiplier * mean && ctr(i, plane[1]) <= multiplier * mean) continue;
      points.push_back({model.labels(side).at(static_cast<std::size_t>(i)), f(i, plane[0]), f(i, plane[1]),
                        side == Side::Rows ? 1 : 0});
    }
  }
  const auto share = model.inertia_share();
  auto axis_label = [&](Eigen::Index a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "factor %ld (%.2f%%)", static_cast<long>(a + 1), 100.0 * share(a));
    return std::string(buf);
  };
  svg::write(path, svg::scatter("Factor plane " + std::to_string(plane[0] + 1) + "-" + std::to_string(plane[1] + 1),
                                axis_label(plane[0]), axis_label(plane[1]), points));
}

}  // namespace narrative
