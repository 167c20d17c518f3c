#include "narrative/contingency.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include "narrative/csv.hpp"
#include "narrative/error.hpp"

namespace narrative {
namespace {

using Triplet = Eigen::Triplet<std::int64_t>;

std::int64_t parse_count(const std::string& s, const std::string& where) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0) {
    throw Error(where + ": '" + s + "' is not a non-negative integer count");
  }
  return v;
}

ContingencyTable from_triplets(const std::vector<Triplet>& triplets, std::vector<std::string> row_ids,
                               std::vector<std::string> col_ids) {
  CountMatrix m(static_cast<Eigen::Index>(row_ids.size()), static_cast<Eigen::Index>(col_ids.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(std::int64_t{0});
  m.makeCompressed();
  return ContingencyTable(std::move(m), std::move(row_ids), std::move(col_ids));
}

}  // namespace

ContingencyTable::ContingencyTable(CountMatrix counts, std::vector<std::string> row_ids,
                                   std::vector<std::string> col_ids)
    : counts_(std::move(counts)), row_ids_(std::move(row_ids)), col_ids_(std::move(col_ids)) {
  if (static_cast<Eigen::Index>(row_ids_.size()) != counts_.rows() ||
      static_cast<Eigen::Index>(col_ids_.size()) != counts_.cols()) {
    throw Error("contingency table: id lists do not match the count matrix shape");
  }
  counts_.makeCompressed();
  for (Eigen::Index k = 0; k < counts_.nonZeros(); ++k) {
    if (counts_.valuePtr()[k] < 0) throw Error("contingency table: negative count");
  }
  grand_total_ = counts_.sum();
  const double n = static_cast<double>(grand_total_);
  row_masses_ = n > 0 ? Eigen::VectorXd(row_sums() / n) : Eigen::VectorXd::Zero(counts_.rows());
  col_masses_ = n > 0 ? Eigen::VectorXd(col_sums() / n) : Eigen::VectorXd::Zero(counts_.cols());
}

Eigen::VectorXd ContingencyTable::row_sums() const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(counts_.rows());
  for (Eigen::Index i = 0; i < counts_.outerSize(); ++i) {
    for (CountMatrix::InnerIterator it(counts_, i); it; ++it) sums(it.row()) += static_cast<double>(it.value());
  }
  return sums;
}

Eigen::VectorXd ContingencyTable::col_sums() const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(counts_.cols());
  for (Eigen::Index i = 0; i < counts_.outerSize(); ++i) {
    for (CountMatrix::InnerIterator it(counts_, i); it; ++it) sums(it.col()) += static_cast<double>(it.value());
  }
  return sums;
}

std::optional<Eigen::Index> ContingencyTable::column_index(const std::string& word) const {
  for (std::size_t j = 0; j < col_ids_.size(); ++j) {
    if (col_ids_[j] == word) return static_cast<Eigen::Index>(j);
  }
  return std::nullopt;
}

std::optional<Eigen::Index> ContingencyTable::row_index(const std::string& id) const {
  for (std::size_t i = 0; i < row_ids_.size(); ++i) {
    if (row_ids_[i] == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

bool ContingencyTable::has_positive_margins() const {
  return rows() > 0 && cols() > 0 && (row_sums().array() > 0).all() && (col_sums().array() > 0).all();
}

void FilterSpec::validate() const {
  if (min_units_per_word < 1 || min_total_per_word < 1) {
    throw Error("filter: thresholds must be at least 1");
  }
}

ContingencyTable build_table(const std::vector<TextUnit>& units) {
  std::unordered_map<std::string, Eigen::Index> column_of;
  std::vector<std::string> words;
  std::vector<std::string> row_ids;
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::int64_t> cells;
  std::size_t nonempty = 0;

  for (std::size_t i = 0; i < units.size(); ++i) {
    row_ids.push_back(units[i].id);
    if (!units[i].tokens.empty()) ++nonempty;
    for (const auto& token : units[i].tokens) {
      auto [it, inserted] = column_of.try_emplace(token, static_cast<Eigen::Index>(words.size()));
      if (inserted) words.push_back(token);
      ++cells[{static_cast<Eigen::Index>(i), it->second}];
    }
  }
  if (nonempty < 2) throw Error("build_table: fewer than 2 nonempty units");
  if (words.size() < 2) throw Error("build_table: fewer than 2 distinct words");

  std::vector<Triplet> triplets;
  triplets.reserve(cells.size());
  for (const auto& [cell, count] : cells) triplets.emplace_back(cell.first, cell.second, count);
  return from_triplets(triplets, std::move(row_ids), std::move(words));
}

FilterResult filter_vocabulary(const ContingencyTable& table, const FilterSpec& spec) {
  spec.validate();
  const auto& counts = table.counts();
  std::vector<std::int64_t> presence(static_cast<std::size_t>(table.cols()), 0);
  std::vector<std::int64_t> totals(static_cast<std::size_t>(table.cols()), 0);
  for (Eigen::Index i = 0; i < counts.outerSize(); ++i) {
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) {
      ++presence[static_cast<std::size_t>(it.col())];
      totals[static_cast<std::size_t>(it.col())] += it.value();
    }
  }

  FilterResult result;
  std::vector<Eigen::Index> new_col(static_cast<std::size_t>(table.cols()), -1);
  std::vector<std::string> kept_words;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    const auto u = static_cast<std::size_t>(j);
    if (presence[u] >= spec.min_units_per_word && totals[u] >= spec.min_total_per_word) {
      new_col[u] = static_cast<Eigen::Index>(kept_words.size());
      kept_words.push_back(table.col_ids()[u]);
    } else {
      result.removed_words.push_back(table.col_ids()[u]);
    }
  }

  std::vector<Triplet> triplets;
  std::vector<std::string> kept_rows;
  for (Eigen::Index i = 0; i < counts.outerSize(); ++i) {
    std::vector<Triplet> row;
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) {
      const auto j = new_col[static_cast<std::size_t>(it.col())];
      if (j >= 0 && it.value() > 0) row.emplace_back(static_cast<Eigen::Index>(kept_rows.size()), j, it.value());
    }
    if (row.empty()) {
      result.removed_rows.push_back(table.row_ids()[static_cast<std::size_t>(i)]);
    } else {
      triplets.insert(triplets.end(), row.begin(), row.end());
      kept_rows.push_back(table.row_ids()[static_cast<std::size_t>(i)]);
    }
  }
  if (kept_rows.size() < 2 || kept_words.size() < 2) {
    throw Error("filter: result has " + std::to_string(kept_rows.size()) + " rows and " +
                std::to_string(kept_words.size()) + " columns; need at least 2 of each");
  }
  result.table = from_triplets(triplets, std::move(kept_rows), std::move(kept_words));
  return result;
}

double chi2_distance(const ContingencyTable& table, Eigen::Index i, Eigen::Index k) {
  if (i < 0 || k < 0 || i >= table.rows() || k >= table.rows()) throw Error("chi2_distance: row out of range");
  const Eigen::VectorXd sums = table.row_sums();
  if (sums(i) <= 0 || sums(k) <= 0) throw Error("chi2_distance: empty row has no profile");
  const Eigen::VectorXd a = Eigen::VectorXd(table.counts().row(i).cast<double>().transpose()) / sums(i);
  const Eigen::VectorXd b = Eigen::VectorXd(table.counts().row(k).cast<double>().transpose()) / sums(k);
  const auto& c = table.col_masses();
  double total = 0.0;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    if (c(j) <= 0) continue;
    const double diff = a(j) - b(j);
    total += diff * diff / c(j);
  }
  return std::sqrt(total);
}

double total_inertia(const ContingencyTable& table) {
  const double n = static_cast<double>(table.grand_total());
  if (n <= 0) return 0.0;
  const auto& r = table.row_masses();
  const auto& c = table.col_masses();
  const auto& counts = table.counts();
  double total = 0.0;
  Eigen::VectorXd row(table.cols());
  for (Eigen::Index i = 0; i < counts.outerSize(); ++i) {
    if (r(i) <= 0) continue;
    row.setZero();
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) row(it.col()) = static_cast<double>(it.value()) / n;
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (c(j) <= 0) continue;
      const double expected = r(i) * c(j);
      const double diff = row(j) - expected;
      total += diff * diff / expected;
    }
  }
  return total;
}

TableSummary describe(const ContingencyTable& table) {
  TableSummary s;
  s.rows = table.rows();
  s.cols = table.cols();
  s.grand_total = table.grand_total();
  const auto& counts = table.counts();
  for (Eigen::Index i = 0; i < counts.outerSize(); ++i) {
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) {
      if (it.value() == 0) continue;
      ++s.nonzeros;
      if (it.value() > s.max_count) {
        s.max_count = it.value();
        s.max_row = table.row_ids()[static_cast<std::size_t>(it.row())];
        s.max_col = table.col_ids()[static_cast<std::size_t>(it.col())];
      }
    }
  }
  const double cells = static_cast<double>(s.rows) * static_cast<double>(s.cols);
  s.density = cells > 0 ? static_cast<double>(s.nonzeros) / cells : 0.0;
  return s;
}

ContingencyTable select_rows(const ContingencyTable& table, const std::vector<Eigen::Index>& rows) {
  const auto& counts = table.counts();
  std::vector<Eigen::Index> new_col(static_cast<std::size_t>(table.cols()), -1);
  std::vector<std::string> words;
  std::vector<std::string> ids;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
  std::vector<std::int64_t> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Eigen::Index i = rows[r];
    if (i < 0 || i >= table.rows()) throw Error("select_rows: row out of range");
    ids.push_back(table.row_ids()[static_cast<std::size_t>(i)]);
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) {
      if (it.value() == 0) continue;
      cells.emplace_back(static_cast<Eigen::Index>(r), it.col());
      values.push_back(it.value());
      new_col[static_cast<std::size_t>(it.col())] = 0;
    }
  }
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    if (new_col[static_cast<std::size_t>(j)] == 0) {
      new_col[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(words.size());
      words.push_back(table.col_ids()[static_cast<std::size_t>(j)]);
    }
  }
  std::vector<Triplet> triplets;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    triplets.emplace_back(cells[k].first, new_col[static_cast<std::size_t>(cells[k].second)], values[k]);
  }
  return from_triplets(triplets, std::move(ids), std::move(words));
}

ContingencyTable sum_row_ranges(const ContingencyTable& table,
                                const std::vector<std::pair<Eigen::Index, Eigen::Index>>& ranges,
                                std::vector<std::string> ids) {
  if (ids.size() != ranges.size()) throw Error("sum_row_ranges: one id per range required");
  std::vector<Triplet> triplets;
  const auto& counts = table.counts();
  for (std::size_t g = 0; g < ranges.size(); ++g) {
    const auto [first, last] = ranges[g];
    if (first < 0 || first > last || last >= table.rows()) throw Error("sum_row_ranges: range out of bounds");
    for (Eigen::Index i = first; i <= last; ++i) {
      for (CountMatrix::InnerIterator it(counts, i); it; ++it) {
        triplets.emplace_back(static_cast<Eigen::Index>(g), it.col(), it.value());
      }
    }
  }
  return from_triplets(triplets, std::move(ids), table.col_ids());
}

void write_dense_csv(const ContingencyTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  csv::Row header{"id"};
  header.insert(header.end(), table.col_ids().begin(), table.col_ids().end());
  csv::write_row(out, header);
  const auto& counts = table.counts();
  std::vector<std::int64_t> row(static_cast<std::size_t>(table.cols()));
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    std::fill(row.begin(), row.end(), 0);
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) row[static_cast<std::size_t>(it.col())] = it.value();
    out << csv::escape(table.row_ids()[static_cast<std::size_t>(i)]);
    for (auto v : row) out << ',' << v;
    out << '\n';
  }
}

void write_triplets_csv(const ContingencyTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  csv::write_row(out, {"row", "col", "count"});
  const auto& counts = table.counts();
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (CountMatrix::InnerIterator it(counts, i); it; ++it) {
      if (it.value() == 0) continue;
      csv::write_row(out, {table.row_ids()[static_cast<std::size_t>(i)],
                           table.col_ids()[static_cast<std::size_t>(it.col())], std::to_string(it.value())});
    }
  }
}

ContingencyTable read_dense_csv(const std::string& path) {
  const auto records = csv::read_file(path);
  if (records.empty()) throw Error("table '" + path + "' is empty");
  const auto& header = records.front().fields;
  if (header.size() < 2) throw Error("table '" + path + "' has no word columns");
  std::vector<std::string> words(header.begin() + 1, header.end());
  std::vector<std::string> ids;
  std::vector<Triplet> triplets;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    const std::string where = "table '" + path + "' line " + std::to_string(records[r].line);
    if (f.size() != header.size()) throw Error(where + ": expected " + std::to_string(header.size()) + " fields");
    const auto i = static_cast<Eigen::Index>(ids.size());
    ids.push_back(f[0]);
    for (std::size_t k = 1; k < f.size(); ++k) {
      const auto v = parse_count(f[k], where);
      if (v) triplets.emplace_back(i, static_cast<Eigen::Index>(k - 1), v);
    }
  }
  return from_triplets(triplets, std::move(ids), std::move(words));
}

ContingencyTable read_triplets_csv(const std::string& path) {
  const auto records = csv::read_file(path);
  std::vector<std::string> ids;
  std::vector<std::string> words;
  std::unordered_map<std::string, Eigen::Index> row_of;
  std::unordered_map<std::string, Eigen::Index> col_of;
  std::vector<Triplet> triplets;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (r == 0 && f.size() == 3 && f[0] == "row" && f[1] == "col" && f[2] == "count") continue;
    const std::string where = "triplets '" + path + "' line " + std::to_string(records[r].line);
    if (f.size() != 3) throw Error(where + ": expected row,col,count");
    auto [ri, new_row] = row_of.try_emplace(f[0], static_cast<Eigen::Index>(ids.size()));
    if (new_row) ids.push_back(f[0]);
    auto [ci, new_col] = col_of.try_emplace(f[1], static_cast<Eigen::Index>(words.size()));
    if (new_col) words.push_back(f[1]);
    triplets.emplace_back(ri->second, ci->second, parse_count(f[2], where));
  }
  return from_triplets(triplets, std::move(ids), std::move(words));
}

}  // namespace narrative
