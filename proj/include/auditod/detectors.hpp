#pragma once
// Unsupervised outlier detectors. Every detector maps a FeatureFrame to a
// ScoreVector oriented so that a higher score is more anomalous.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "auditod/core_data.hpp"

namespace auditod {

enum class DetectorKind { Hbos, Pca, Mcd, Knn, Lof, Cblof, Autoencoder, IsolationForest };

inline constexpr DetectorKind kAllDetectors[] = {
    DetectorKind::Hbos, DetectorKind::Pca,   DetectorKind::Mcd,         DetectorKind::Knn,
    DetectorKind::Lof,  DetectorKind::Cblof, DetectorKind::Autoencoder, DetectorKind::IsolationForest,
};

// "HBOS", "PCA", "MCD", "KNN", "LOF", "CBLOF", "AE", "IFOREST".
std::string_view to_string(DetectorKind kind) noexcept;
std::optional<DetectorKind> parse_detector_kind(std::string_view name);

struct ScoreVector {
  std::string detector;
  std::vector<RecordId> ids;
  std::vector<double> scores;
  bool normalized = false;

  std::size_t size() const { return scores.size(); }
};

using ParamValue = std::variant<std::int64_t, double, std::string, std::vector<std::int64_t>>;
using ParamMap = std::map<std::string, ParamValue>;

std::string format_param(const ParamValue& value);

struct DetectorConfig {
  DetectorKind kind = DetectorKind::Hbos;
  ParamMap params;
  std::uint64_t seed = 0;
};

// Hyperparameter tuned by the sweep harness for each kind
// (n_histograms, n_components, support_fraction, n_neighbors, n_clusters,
// hidden_neurons, n_estimators).
std::string_view primary_param(DetectorKind kind) noexcept;

// Defaults for every parameter of `kind`.
ParamMap default_params(DetectorKind kind);

// Fills defaults and checks names, types and domains; throws InvalidConfig.
DetectorConfig resolve_config(DetectorConfig config);

// Dispatches to the per-kind scorer after resolve_config.
ScoreVector run_detector(const FeatureFrame& frame, const DetectorConfig& config);

// --- individual detectors ------------------------------------------------

ScoreVector score_hbos(const FeatureFrame& frame, int n_bins);

ScoreVector score_pca(const FeatureFrame& frame, int n_components);

struct McdFit {
  Eigen::VectorXd location;
  Eigen::MatrixXd covariance;
  double log_determinant = 0.0;
  std::vector<std::size_t> support;
};

inline constexpr int kMcdTrials = 500;
inline constexpr int kMcdMaxCSteps = 100;

McdFit fit_mcd(const FeatureFrame& frame, double support_fraction, std::uint64_t seed,
               int trials = kMcdTrials);
ScoreVector score_mcd(const FeatureFrame& frame, double support_fraction, std::uint64_t seed);

enum class KnnMode { Mean, Kth };
ScoreVector score_knn(const FeatureFrame& frame, int n_neighbors, KnnMode mode = KnnMode::Mean);

ScoreVector score_lof(const FeatureFrame& frame, int n_neighbors);

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x p
  std::vector<std::size_t> labels;
  int iterations = 0;
  bool converged = false;
};

KMeansResult kmeans(const FeatureFrame& frame, int k, std::uint64_t seed, int max_iterations = 300,
                    double tolerance = 1e-6);

// Number of leading clusters (sizes sorted descending) treated as large.
std::size_t cblof_large_cluster_count(const std::vector<std::size_t>& sorted_sizes,
                                      std::size_t n, double alpha, double beta);

ScoreVector score_cblof(const FeatureFrame& frame, int n_clusters, double alpha, double beta,
                        std::uint64_t seed);

struct AutoencoderOptions {
  std::vector<int> hidden_neurons{64, 32, 32, 64};
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct AutoencoderResult {
  ScoreVector scores;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

AutoencoderResult train_autoencoder(const FeatureFrame& frame, const AutoencoderOptions& options);
ScoreVector score_autoencoder(const FeatureFrame& frame, const AutoencoderOptions& options);

// Average path length of an unsuccessful BST search over m points.
double iforest_average_path(std::size_t m);
// 2^(-mean_path / c(subsample)).
double iforest_score(double mean_path, std::size_t subsample);

ScoreVector score_iforest(const FeatureFrame& frame, int n_estimators, int subsample,
                          std::uint64_t seed);

}  // namespace auditod
