#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "narrative/text_ingest.hpp"

namespace narrative {

using CountMatrix = Eigen::SparseMatrix<std::int64_t, Eigen::RowMajor>;

/// Units x words frequency table. Rows may be empty straight after
/// `build_table`; `filter_vocabulary` guarantees positive margins.
class ContingencyTable {
 public:
  ContingencyTable() = default;
  ContingencyTable(CountMatrix counts, std::vector<std::string> row_ids, std::vector<std::string> col_ids);

  const CountMatrix& counts() const { return counts_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<std::string>& col_ids() const { return col_ids_; }
  Eigen::Index rows() const { return counts_.rows(); }
  Eigen::Index cols() const { return counts_.cols(); }

  std::int64_t grand_total() const { return grand_total_; }
  const Eigen::VectorXd& row_masses() const { return row_masses_; }
  const Eigen::VectorXd& col_masses() const { return col_masses_; }
  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd col_sums() const;

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(counts_.cast<double>()); }
  std::optional<Eigen::Index> column_index(const std::string& word) const;
  std::optional<Eigen::Index> row_index(const std::string& id) const;

  /// True when every row and column total is positive.
  bool has_positive_margins() const;

 private:
  CountMatrix counts_;
  std::vector<std::string> row_ids_;
  std::vector<std::string> col_ids_;
  std::int64_t grand_total_ = 0;
  Eigen::VectorXd row_masses_;
  Eigen::VectorXd col_masses_;
};

struct FilterSpec {
  /// Word must occur in at least this many distinct units.
  std::int64_t min_units_per_word = 1;
  /// Word's total frequency must be at least this.
  std::int64_t min_total_per_word = 1;

  void validate() const;
};

struct FilterResult {
  ContingencyTable table;
  std::vector<std::string> removed_words;
  std::vector<std::string> removed_rows;
};

struct TableSummary {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index nonzeros = 0;
  double density = 0.0;
  std::int64_t grand_total = 0;
  std::int64_t max_count = 0;
  std::string max_row;
  std::string max_col;
};

/// Columns are words in order of first appearance; one row per unit, empty
/// units included.
ContingencyTable build_table(const std::vector<TextUnit>& units);

/// Drops failing columns, then rows left empty, then recomputes masses.
/// Single pass: removing rows never triggers another column scan.
FilterResult filter_vocabulary(const ContingencyTable& table, const FilterSpec& spec);

double chi2_distance(const ContingencyTable& table, Eigen::Index i, Eigen::Index k);
double total_inertia(const ContingencyTable& table);
TableSummary describe(const ContingencyTable& table);

/// Restriction to the listed rows (in the given order) and then to the
/// columns that still have support.
ContingencyTable select_rows(const ContingencyTable& table, const std::vector<Eigen::Index>& rows);

/// One row per inclusive [first, last] range, holding the summed counts.
ContingencyTable sum_row_ranges(const ContingencyTable& table,
                                const std::vector<std::pair<Eigen::Index, Eigen::Index>>& ranges,
                                std::vector<std::string> ids);

void write_dense_csv(const ContingencyTable& table, const std::string& path);
void write_triplets_csv(const ContingencyTable& table, const std::string& path);
ContingencyTable read_dense_csv(const std::string& path);
ContingencyTable read_triplets_csv(const std::string& path);

}  // namespace narrative
