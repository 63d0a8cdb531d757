#include "auditod/fusion.hpp"

#include <algorithm>
#include <numeric>

#include "auditod/error.hpp"

namespace auditod {

namespace {

void require_aligned(std::span<const RecordId> a, std::span<const RecordId> b, const std::string& who) {
  if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) {
    throw Error(ErrorCode::InvalidConfig, who + ": inputs are not aligned on the same record ids");
  }
}

std::vector<double> minmax(std::vector<double> v) {
  if (v.empty()) return v;
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;
  for (auto& x : v) x = span > 0.0 ? (x - lo) / span : 0.0;
  return v;
}

std::vector<ScoredRecord> sorted_records(std::span<const RecordId> ids, const std::vector<double>& values) {
  std::vector<ScoredRecord> out;
  out.reserve(ids.size());
  for (auto i : descending_order(values, ids)) out.push_back({ids[i], values[i]});
  return out;
}

}  // namespace

std::vector<std::size_t> RankTable::by_ordering() const {
  std::vector<std::size_t> idx(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) idx[rows[i].ordering - 1] = i;
  return idx;
}

std::vector<std::size_t> descending_order(std::span<const double> scores, std::span<const RecordId> ids) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  return idx;
}

ScoreVector normalize_scores(const ScoreVector& raw) {
  if (raw.normalized) throw Error(ErrorCode::InvalidConfig, "scores are already normalized");
  ScoreVector out = raw;
  out.scores = minmax(raw.scores);
  out.normalized = true;
  return out;
}

RankTable make_rank_table(const ScoreVector& norm) {
  if (!norm.normalized) throw Error(ErrorCode::InvalidConfig, "rank tables need normalized scores");
  const std::size_t n = norm.size();
  RankTable table;
  table.detector = norm.detector;
  table.rows.resize(n);
  const auto order = descending_order(norm.scores, norm.ids);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && norm.scores[order[end]] == norm.scores[order[start]]) ++end;
    // Orderings start+1 .. end share their mean.
    const double ranking = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t pos = start; pos < end; ++pos) {
      const std::size_t i = order[pos];
      table.rows[i] = {norm.ids[i], norm.scores[i], pos + 1, ranking};
    }
    start = end;
  }
  return table;
}

std::map<RecordId, std::size_t> top_k_frequency(std::span<const RankTable> tables, std::size_t k) {
  std::map<RecordId, std::size_t> freq;
  for (const auto& table : tables) {
    if (k == 0 || k > table.rows.size()) {
      throw Error(ErrorCode::InvalidConfig, "top_k must be in [1, n]");
    }
    const auto order = table.by_ordering();
    for (std::size_t pos = 0; pos < k; ++pos) ++freq[table.rows[order[pos]].id];
  }
  return freq;
}

std::vector<ScoredRecord> ensemble_average_score(std::span<const ScoreVector> norm_vectors) {
  if (norm_vectors.empty()) throw Error(ErrorCode::InvalidConfig, "no score vectors to average");
  const auto& ids = norm_vectors.front().ids;
  std::vector<double> mean(ids.size(), 0.0);
  for (const auto& v : norm_vectors) {
    if (!v.normalized) throw Error(ErrorCode::InvalidConfig, "average-score ensemble needs normalized scores");
    require_aligned(ids, v.ids, "average-score ensemble");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v.scores[i];
  }
  for (auto& m : mean) m /= static_cast<double>(norm_vectors.size());
  return sorted_records(ids, minmax(std::move(mean)));
}

std::vector<ScoredRecord> ensemble_average_rank(std::span<const RankTable> tables) {
  if (tables.empty()) throw Error(ErrorCode::InvalidConfig, "no rank tables to average");
  const std::size_t n = tables.front().rows.size();
  std::vector<RecordId> ids;
  ids.reserve(n);
  for (const auto& row : tables.front().rows) ids.push_back(row.id);
  std::vector<double> mean(n, 0.0);
  for (const auto& t : tables) {
    if (t.rows.size() != n) throw Error(ErrorCode::InvalidConfig, "rank tables differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      if (t.rows[i].id != ids[i]) {
        throw Error(ErrorCode::InvalidConfig, "average-rank ensemble: tables are not aligned");
      }
      mean[i] += t.rows[i].ranking;
    }
  }
  for (auto& m : mean) m /= static_cast<double>(tables.size());
  auto normalized = minmax(std::move(mean));
  for (auto& v : normalized) v = 1.0 - v;
  return sorted_records(ids, normalized);
}

EnsembleSummary summarize(std::span<const ScoreVector> norm_vectors, std::span<const RankTable> tables,
                          std::size_t k) {
  const auto by_score = ensemble_average_score(norm_vectors);
  const auto by_rank = ensemble_average_rank(tables);
  const auto freq = top_k_frequency(tables, k);
  std::map<RecordId, double> rank_value;
  for (const auto& r : by_rank) rank_value[r.id] = r.value;

  EnsembleSummary summary;
  summary.k = k;
  summary.detector_count = tables.size();
  summary.rows.reserve(by_score.size());
  for (const auto& r : by_score) {
    const auto f = freq.find(r.id);
    summary.rows.push_back({r.id, r.value, rank_value.at(r.id), f == freq.end() ? 0 : f->second});
  }
  return summary;
}

}  // namespace auditod
