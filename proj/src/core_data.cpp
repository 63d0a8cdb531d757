#include "auditod/core_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "auditod/error.hpp"

namespace auditod {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_original(char letter) {
  return std::find(kOriginalLetters.begin(), kOriginalLetters.end(), letter) !=
         kOriginalLetters.end();
}

bool is_derived(char letter) {
  return std::find(kDerivedLetters.begin(), kDerivedLetters.end(), letter) !=
         kDerivedLetters.end();
}

std::size_t require_column(const RawTable& table, const std::string& header) {
  auto idx = table.column_index(header);
  if (!idx) throw Error(ErrorCode::MissingHeader, header);
  return *idx;
}

RawTable ingest_document(const CsvDocument& doc, const ColumnMapping& mapping) {
  mapping.validate();
  auto find = [&](const std::string& name) -> std::size_t {
    auto it = std::find(doc.header.begin(), doc.header.end(), name);
    if (it == doc.header.end()) throw Error(ErrorCode::MissingHeader, name);
    return static_cast<std::size_t>(it - doc.header.begin());
  };
  const std::size_t id_col = find(mapping.id_column);

  RawTable out;
  std::vector<std::size_t> source;
  for (char letter : kOriginalLetters) {
    const auto& header = mapping.original.at(letter);
    source.push_back(find(header));
    out.headers.push_back(header);
  }
  for (const auto& [letter, header] : mapping.derived_sources) {
    source.push_back(find(header));
    out.headers.push_back(mapping.header_for(letter));
  }
  if (doc.rows.empty()) throw Error(ErrorCode::EmptyTable, "no data rows");

  out.rows.reserve(doc.rows.size());
  out.ids.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& fields = doc.rows[r];
    auto id = std::string(trim(fields[id_col]));
    if (id.empty()) {
      throw Error(ErrorCode::MalformedCsv, "empty record id on data row " + std::to_string(r + 1));
    }
    out.ids.push_back(std::move(id));
    std::vector<Cell> cells;
    cells.reserve(source.size());
    for (std::size_t c : source) cells.push_back(parse_currency(fields[c]));
    out.rows.push_back(std::move(cells));
  }
  check_unique_ids(out.ids);
  return out;
}

}  // namespace

std::optional<std::size_t> RawTable::column_index(std::string_view header) const {
  auto it = std::find(headers.begin(), headers.end(), header);
  if (it == headers.end()) return std::nullopt;
  return static_cast<std::size_t>(it - headers.begin());
}

ColumnMapping ColumnMapping::usaspending_defaults() {
  ColumnMapping m;
  m.id_column = "contract_award_unique_key";
  m.original = {
      {'A', "federal_action_obligation"},
      {'B', "total_dollars_obligated"},
      {'C', "total_outlayed_amount_for_overall_award"},
      {'D', "base_and_exercised_options_value"},
      {'E', "current_total_value_of_award"},
      {'F', "base_and_all_options_value"},
      {'G', "potential_total_value_of_award"},
  };
  m.derived_formulas = {
      {'H', {'A', 'D', '-'}},
      {'I', {'E', 'A', '-'}},
      {'J', {'G', 'F', '-'}},
  };
  return m;
}

void ColumnMapping::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (id_column.empty()) fail("column mapping: id_column is empty");
  std::set<std::string> seen{id_column};
  for (char letter : kOriginalLetters) {
    auto it = original.find(letter);
    if (it == original.end() || it->second.empty()) {
      fail(std::string("column mapping: letter ") + letter + " is not mapped");
    }
    if (!seen.insert(it->second).second) {
      fail("column mapping: header '" + it->second + "' mapped twice");
    }
  }
  for (const auto& [letter, _] : original) {
    if (!is_original(letter)) fail(std::string("column mapping: unexpected original letter ") + letter);
  }
  for (char letter : kDerivedLetters) {
    if (derived_sources.contains(letter)) continue;
    auto it = derived_formulas.find(letter);
    if (it == derived_formulas.end()) {
      fail(std::string("column mapping: no formula or source for ") + letter);
    }
    const auto& f = it->second;
    if (!is_original(f.lhs) || !is_original(f.rhs)) {
      fail(std::string("column mapping: formula for ") + letter + " must reference A-G");
    }
    if (f.sign != '-' && f.sign != '+') {
      fail(std::string("column mapping: formula sign for ") + letter + " must be '+' or '-'");
    }
  }
  for (const auto& [letter, header] : derived_sources) {
    if (!is_derived(letter)) fail(std::string("column mapping: unexpected derived letter ") + letter);
    if (!seen.insert(header).second) fail("column mapping: header '" + header + "' mapped twice");
  }
}

std::string derived_column_name(char letter) {
  switch (letter) {
    case 'H': return "net_obligation_difference";
    case 'I': return "value_above_obligation";
    case 'J': return "future_value_potential";
    default: return std::string(1, letter);
  }
}

std::string ColumnMapping::header_for(char letter) const {
  if (is_original(letter)) return original.at(letter);
  if (is_derived(letter)) {
    if (auto it = derived_sources.find(letter); it != derived_sources.end()) return it->second;
    return derived_column_name(letter);
  }
  throw Error(ErrorCode::InvalidConfig, std::string("unknown feature letter ") + letter);
}

FeatureFrame::FeatureFrame(std::vector<RecordId> ids, std::vector<std::string> columns,
                           Matrix values, std::vector<ColumnStats> stats)
    : ids_(std::move(ids)),
      columns_(std::move(columns)),
      values_(std::move(values)),
      stats_(std::move(stats)) {
  if (ids_.size() < 2) throw Error(ErrorCode::EmptyTable, "feature frame needs at least 2 records");
  if (columns_.empty()) throw Error(ErrorCode::EmptyTable, "feature frame needs at least 1 column");
  if (static_cast<std::size_t>(values_.rows()) != ids_.size() ||
      static_cast<std::size_t>(values_.cols()) != columns_.size()) {
    throw Error(ErrorCode::InvalidConfig, "feature frame shape does not match ids/columns");
  }
  if (!values_.allFinite()) throw Error(ErrorCode::NonFiniteInput, "feature frame values");
  check_unique_ids(ids_);
  if (stats_.empty()) {
    for (Eigen::Index c = 0; c < values_.cols(); ++c) {
      const auto col = values_.col(c);
      double sum = 0.0;
      for (Eigen::Index r = 0; r < col.size(); ++r) sum += col(r);
      stats_.push_back({col.minCoeff(), col.maxCoeff(), sum / static_cast<double>(col.size())});
    }
  } else if (stats_.size() != columns_.size()) {
    throw Error(ErrorCode::InvalidConfig, "feature frame stats size mismatch");
  }
}

Cell parse_currency(std::string_view text) {
  std::string_view s = trim(text);
  bool negative = false;
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    negative = true;
    s = s.substr(1, s.size() - 2);
  }
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    if (c == '$' || c == ',' || is_space(c)) continue;
    cleaned.push_back(c);
  }
  if (cleaned.empty()) return std::nullopt;
  const char* first = cleaned.data();
  const char* last = cleaned.data() + cleaned.size();
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return negative ? -value : value;
}

CsvDocument parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record.front().empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !trim(field).empty()) {
          throw Error(ErrorCode::MalformedCsv, "stray quote on line " + std::to_string(line));
        }
        field.clear();
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedCsv, "unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();

  CsvDocument doc;
  if (records.empty()) throw Error(ErrorCode::EmptyTable, "missing header row");
  doc.header = std::move(records.front());
  for (auto& h : doc.header) h = std::string(trim(h));
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != doc.header.size()) {
      throw Error(ErrorCode::MalformedCsv,
                  "data row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(doc.header.size()));
    }
    doc.rows.push_back(std::move(records[r]));
  }
  return doc;
}

CsvDocument read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

RawTable ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping) {
  return ingest_document(read_csv(path), mapping);
}

RawTable ingest_csv_text(std::string_view text, const ColumnMapping& mapping) {
  return ingest_document(parse_csv(text), mapping);
}

RawTable compute_derived(const RawTable& table, const ColumnMapping& mapping) {
  RawTable out = table;
  for (char letter : kDerivedLetters) {
    if (mapping.derived_sources.contains(letter)) continue;
    const auto& f = mapping.derived_formulas.at(letter);
    const std::size_t lhs = require_column(table, mapping.header_for(f.lhs));
    const std::size_t rhs = require_column(table, mapping.header_for(f.rhs));
    out.headers.push_back(mapping.header_for(letter));
    for (auto& row : out.rows) {
      const Cell& a = row[lhs];
      const Cell& b = row[rhs];
      if (a && b) {
        row.push_back(f.sign == '-' ? *a - *b : *a + *b);
      } else {
        row.push_back(std::nullopt);
      }
    }
  }
  return out;
}

RawTable select_features(const RawTable& table, const ColumnMapping& mapping,
                         std::span<const char> letters) {
  if (letters.empty()) throw Error(ErrorCode::InvalidConfig, "feature list is empty");
  std::vector<std::size_t> idx;
  RawTable out;
  out.ids = table.ids;
  for (char letter : letters) {
    const auto header = mapping.header_for(letter);
    if (std::find(out.headers.begin(), out.headers.end(), header) != out.headers.end()) {
      throw Error(ErrorCode::InvalidConfig, std::string("feature listed twice: ") + letter);
    }
    idx.push_back(require_column(table, header));
    out.headers.push_back(header);
  }
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::vector<Cell> cells;
    cells.reserve(idx.size());
    for (std::size_t c : idx) cells.push_back(row[c]);
    out.rows.push_back(std::move(cells));
  }
  return out;
}

RawTable impute_mean(const RawTable& table) {
  RawTable out = table;
  for (std::size_t c = 0; c < table.column_count(); ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : table.rows) {
      if (row[c]) {
        sum += *row[c];
        ++count;
      }
    }
    if (count == 0) throw Error(ErrorCode::AllMissingColumn, table.headers[c]);
    const double mean = sum / static_cast<double>(count);
    for (auto& row : out.rows) {
      if (!row[c]) row[c] = mean;
    }
  }
  return out;
}

FeatureFrame minmax_scale(const RawTable& table, std::vector<RecordId> ids) {
  const std::size_t n = table.row_count();
  const std::size_t p = table.column_count();
  if (ids.size() != n) throw Error(ErrorCode::InvalidConfig, "id count does not match row count");
  FeatureFrame::Matrix values(n, p);
  std::vector<ColumnStats> stats(p);
  for (std::size_t c = 0; c < p; ++c) {
    double lo = 0.0, hi = 0.0, sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const Cell& cell = table.rows[r][c];
      if (!cell) throw Error(ErrorCode::NonFiniteInput, "missing cell in column " + table.headers[c]);
      const double x = *cell;
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "column " + table.headers[c]);
      if (r == 0 || x < lo) lo = x;
      if (r == 0 || x > hi) hi = x;
      sum += x;
    }
    stats[c] = {lo, hi, n == 0 ? 0.0 : sum / static_cast<double>(n)};
    const double span = hi - lo;
    for (std::size_t r = 0; r < n; ++r) {
      values(r, c) = span > 0.0 ? (*table.rows[r][c] - lo) / span : 0.0;
    }
  }
  return FeatureFrame(std::move(ids), table.headers, std::move(values), std::move(stats));
}

void check_unique_ids(std::span<const RecordId> ids) {
  std::set<RecordId> seen;
  std::set<RecordId> dupes;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) dupes.insert(id);
  }
  if (dupes.empty()) return;
  std::string list;
  for (const auto& d : dupes) {
    if (!list.empty()) list += ", ";
    list += d;
  }
  throw Error(ErrorCode::DuplicateRecordId, list);
}

}  // namespace auditod
