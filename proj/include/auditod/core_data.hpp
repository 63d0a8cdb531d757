#pragma once
// Award-record ingestion and preprocessing: CSV extract -> derived columns ->
// mean imputation -> min-max scaled FeatureFrame.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace auditod {

using RecordId = std::string;

// A numeric cell; std::nullopt marks a missing value.
using Cell = std::optional<double>;

struct RawTable {
  std::vector<std::string> headers;
  std::vector<std::vector<Cell>> rows;
  // Record identifiers aligned with rows (empty for tables built in code).
  std::vector<RecordId> ids;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return headers.size(); }
  std::optional<std::size_t> column_index(std::string_view header) const;
};

// H = lhs - rhs (sign '-') or H = lhs + rhs (sign '+').
struct DerivedFormula {
  char lhs = 'A';
  char rhs = 'A';
  char sign = '-';
};

struct ColumnMapping {
  std::string id_column;
  std::map<char, std::string> original;            // A..G -> CSV header
  std::map<char, DerivedFormula> derived_formulas;  // H..J
  // H..J read verbatim from a CSV header instead of computed.
  std::map<char, std::string> derived_sources;

  static ColumnMapping usaspending_defaults();

  // Throws InvalidConfig when the mapping breaks its invariants.
  void validate() const;

  // CSV/frame header for a letter tag A..J.
  std::string header_for(char letter) const;
};

inline constexpr std::array<char, 7> kOriginalLetters{'A', 'B', 'C', 'D', 'E', 'F', 'G'};
inline constexpr std::array<char, 3> kDerivedLetters{'H', 'I', 'J'};

// Default frame header of a computed derived column.
std::string derived_column_name(char letter);

struct ColumnStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Immutable n x p matrix of finite feature values with record ids and column names.
class FeatureFrame {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Validates: n >= 2, p >= 1, finite values, unique ids, shapes consistent.
  // Stats default to those of `values` when empty.
  FeatureFrame(std::vector<RecordId> ids, std::vector<std::string> columns, Matrix values,
               std::vector<ColumnStats> stats = {});

  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<RecordId>& ids() const { return ids_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const Matrix& values() const { return values_; }
  const std::vector<ColumnStats>& stats() const { return stats_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols(), cols()};
  }

 private:
  std::vector<RecordId> ids_;
  std::vector<std::string> columns_;
  Matrix values_;
  std::vector<ColumnStats> stats_;
};

// Currency-tolerant numeric parse: "$1,234.50" -> 1234.5, "(12)" -> -12.
// Returns nullopt for empty, unparseable or non-finite text.
Cell parse_currency(std::string_view text);

// Reads an RFC 4180-style CSV (comma, optional double quotes) into header + rows.
struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvDocument read_csv(const std::filesystem::path& path);
CsvDocument parse_csv(std::string_view text);

// Returns the ID column plus A..G (and any H..J mapped via derived_sources), in letter order.
RawTable ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping);
RawTable ingest_csv_text(std::string_view text, const ColumnMapping& mapping);

// Appends H, I, J. Missing operands yield missing results.
RawTable compute_derived(const RawTable& table, const ColumnMapping& mapping);

// Keeps only the columns named by `letters`, in that order.
RawTable select_features(const RawTable& table, const ColumnMapping& mapping,
                         std::span<const char> letters);

RawTable impute_mean(const RawTable& table);

// (x - min) / (max - min) per column; constant columns become zero.
FeatureFrame minmax_scale(const RawTable& table, std::vector<RecordId> ids);

// Throws DuplicateRecordId listing every repeated id.
void check_unique_ids(std::span<const RecordId> ids);

}  // namespace auditod
