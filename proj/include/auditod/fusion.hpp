#pragma once
// Score normalization, ordering/ranking tables and the ensembles built on them.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "auditod/detectors.hpp"

namespace auditod {

struct RankRow {
  RecordId id;
  double norm_score = 0.0;
  std::size_t ordering = 0;  // unique 1..n, descending score, ties by ascending id
  double ranking = 0.0;      // tied scores share the mean of their orderings
};

struct RankTable {
  std::string detector;
  std::vector<RankRow> rows;  // aligned with the input ScoreVector's ids

  // Row indices sorted by ordering (position 0 holds ordering 1).
  std::vector<std::size_t> by_ordering() const;
};

struct ScoredRecord {
  RecordId id;
  double value = 0.0;
};

struct EnsembleRow {
  RecordId id;
  double avg_norm_score = 0.0;
  double one_minus_avg_rank = 0.0;
  std::size_t frequency = 0;
};

struct EnsembleSummary {
  std::vector<EnsembleRow> rows;  // sorted by avg_norm_score descending, ties by id
  std::size_t k = 0;
  std::size_t detector_count = 0;
};

// Min-max over the vector; a constant vector maps to zeros.
ScoreVector normalize_scores(const ScoreVector& raw);

RankTable make_rank_table(const ScoreVector& norm);

// Descending-score order of record indices, ties broken by ascending id.
std::vector<std::size_t> descending_order(std::span<const double> scores,
                                          std::span<const RecordId> ids);

// Count of appearances in each table's top-k; records never in a top-k are absent.
std::map<RecordId, std::size_t> top_k_frequency(std::span<const RankTable> tables, std::size_t k);

// Mean normalized score per record, re-normalized, sorted descending.
std::vector<ScoredRecord> ensemble_average_score(std::span<const ScoreVector> norm_vectors);

// 1 - min-max(mean ranking) per record, sorted descending.
std::vector<ScoredRecord> ensemble_average_rank(std::span<const RankTable> tables);

EnsembleSummary summarize(std::span<const ScoreVector> norm_vectors,
                          std::span<const RankTable> tables, std::size_t k);

}  // namespace auditod
