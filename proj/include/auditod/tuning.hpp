#pragma once
// Pseudo-label evaluation: correction rate, hyperparameter sweeps, precision /
// recall / F1, ROC-AUC, and the seeded planted-anomaly generator.

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "auditod/core_data.hpp"
#include "auditod/detectors.hpp"

namespace auditod {

struct LabelSet {
  std::set<RecordId> positives;
};

// One id per line, '#' starts a comment, blank lines ignored.
LabelSet read_labels(const std::filesystem::path& path);
LabelSet parse_labels(std::string_view text);
void write_labels(const std::filesystem::path& path, const LabelSet& labels);

// Throws UnknownRecordId when a label is not among `ids`.
void check_labels_known(const LabelSet& labels, std::span<const RecordId> ids);

// The |labels| highest-scoring records (ties broken by ascending id).
std::set<RecordId> top_flagged(const ScoreVector& scores, std::size_t count);

// |top-|labels| flagged ∩ labels| / |labels|.
double correction_rate(const ScoreVector& scores, const LabelSet& labels);

struct SweepPoint {
  ParamValue value;
  double correction_rate = 0.0;
};

struct SweepResult {
  DetectorKind kind = DetectorKind::Hbos;
  std::string param;
  std::vector<SweepPoint> grid;
  ParamValue best;
  double best_rate = 0.0;
};

// Orders parameter values; used for the smallest-value tie-break.
bool param_less(const ParamValue& a, const ParamValue& b);

// Runs `kind` once per grid value (other parameters from `base`), seeding
// each run from (seed, kind, value).
SweepResult sweep(const FeatureFrame& frame, DetectorKind kind, const std::vector<ParamValue>& grid,
                  const LabelSet& labels, std::uint64_t seed, const ParamMap& base = {});

struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool empty_flagged = false;  // precision forced to 0
};

ClassificationMetrics precision_recall_f1(const std::set<RecordId>& flagged, const LabelSet& labels);

// Mann-Whitney probability that a positive outscores a negative, ties 0.5.
double roc_auc(const ScoreVector& scores, const LabelSet& labels);

struct SyntheticSpec {
  std::size_t n_inliers = 2000;
  std::size_t n_anomalies = 20;
  std::size_t p = 10;
  double shift = 6.0;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SyntheticData {
  FeatureFrame frame;
  LabelSet labels;
  // Generating distribution of the inliers in the frame's coordinates.
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Squared Mahalanobis distance of every frame row under (mean, covariance).
std::vector<double> mahalanobis_squared(const FeatureFrame& frame, const Eigen::VectorXd& mean,
                                        const Eigen::MatrixXd& covariance);

}  // namespace auditod
