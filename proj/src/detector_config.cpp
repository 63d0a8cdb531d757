#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"

namespace auditod {

namespace {

[[noreturn]] void bad(DetectorKind kind, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, std::string(to_string(kind)) + ": " + what);
}

std::int64_t get_int(DetectorKind kind, const ParamMap& params, const std::string& name) {
  const auto& v = params.at(name);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v); d && std::floor(*d) == *d && std::isfinite(*d)) {
    return static_cast<std::int64_t>(*d);
  }
  bad(kind, name + " must be an integer");
}

double get_real(DetectorKind kind, const ParamMap& params, const std::string& name) {
  const auto& v = params.at(name);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  bad(kind, name + " must be a number");
}

std::string get_string(DetectorKind kind, const ParamMap& params, const std::string& name) {
  const auto& v = params.at(name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  bad(kind, name + " must be a string");
}

std::vector<int> get_int_list(DetectorKind kind, const ParamMap& params, const std::string& name) {
  const auto& v = params.at(name);
  if (const auto* l = std::get_if<std::vector<std::int64_t>>(&v)) {
    std::vector<int> out;
    for (auto x : *l) {
      if (x < 1 || x > 1'000'000) bad(kind, name + " entries must be positive");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }
  bad(kind, name + " must be a list of integers");
}

int positive_int(DetectorKind kind, const ParamMap& params, const std::string& name) {
  const auto v = get_int(kind, params, name);
  if (v < 1 || v > 1'000'000'000) bad(kind, name + " must be a positive integer");
  return static_cast<int>(v);
}

KnnMode knn_mode(const ParamMap& params) {
  const auto mode = get_string(DetectorKind::Knn, params, "mode");
  if (mode == "mean") return KnnMode::Mean;
  if (mode == "kth") return KnnMode::Kth;
  bad(DetectorKind::Knn, "mode must be \"mean\" or \"kth\"");
}

AutoencoderOptions ae_options(const DetectorConfig& c) {
  AutoencoderOptions o;
  o.hidden_neurons = get_int_list(c.kind, c.params, "hidden_neurons");
  o.epochs = positive_int(c.kind, c.params, "epochs");
  o.batch_size = positive_int(c.kind, c.params, "batch_size");
  o.learning_rate = get_real(c.kind, c.params, "learning_rate");
  o.seed = c.seed;
  return o;
}

// Type and domain checks that do not depend on the data.
void check_params(const DetectorConfig& c) {
  switch (c.kind) {
    case DetectorKind::Hbos:
      positive_int(c.kind, c.params, "n_histograms");
      break;
    case DetectorKind::Pca:
      if (get_int(c.kind, c.params, "n_components") < 0) bad(c.kind, "n_components must be >= 0");
      break;
    case DetectorKind::Mcd: {
      const double f = get_real(c.kind, c.params, "support_fraction");
      if (!(f >= 0.0 && f <= 1.0)) bad(c.kind, "support_fraction must be in [0, 1]");
      break;
    }
    case DetectorKind::Knn:
      positive_int(c.kind, c.params, "n_neighbors");
      knn_mode(c.params);
      break;
    case DetectorKind::Lof:
      positive_int(c.kind, c.params, "n_neighbors");
      break;
    case DetectorKind::Cblof: {
      positive_int(c.kind, c.params, "n_clusters");
      const double alpha = get_real(c.kind, c.params, "alpha");
      const double beta = get_real(c.kind, c.params, "beta");
      if (!(alpha > 0.5 && alpha <= 1.0)) bad(c.kind, "alpha must be in (0.5, 1]");
      if (!(beta > 1.0)) bad(c.kind, "beta must be > 1");
      break;
    }
    case DetectorKind::Autoencoder: {
      const auto o = ae_options(c);
      if (!std::equal(o.hidden_neurons.begin(), o.hidden_neurons.end(), o.hidden_neurons.rbegin())) {
        bad(c.kind, "hidden_neurons must be symmetric");
      }
      if (!(o.learning_rate > 0.0)) bad(c.kind, "learning_rate must be positive");
      break;
    }
    case DetectorKind::IsolationForest:
      positive_int(c.kind, c.params, "n_estimators");
      if (positive_int(c.kind, c.params, "subsample") < 2) bad(c.kind, "subsample must be >= 2");
      break;
  }
}

}  // namespace

std::string_view to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::Hbos: return "HBOS";
    case DetectorKind::Pca: return "PCA";
    case DetectorKind::Mcd: return "MCD";
    case DetectorKind::Knn: return "KNN";
    case DetectorKind::Lof: return "LOF";
    case DetectorKind::Cblof: return "CBLOF";
    case DetectorKind::Autoencoder: return "AE";
    case DetectorKind::IsolationForest: return "IFOREST";
  }
  return "?";
}

std::optional<DetectorKind> parse_detector_kind(std::string_view name) {
  for (auto kind : kAllDetectors) {
    if (name == to_string(kind)) return kind;
  }
  if (name == "IF") return DetectorKind::IsolationForest;
  return std::nullopt;
}

std::string format_param(const ParamValue& value) {
  std::ostringstream out;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
          out << '[';
          for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ";" : "") << v[i];
          out << ']';
        } else if constexpr (std::is_same_v<T, double>) {
          // Shortest text that reads back to the same double.
          char buf[32];
          const auto res = std::to_chars(buf, buf + sizeof buf, v);
          out << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        } else {
          out << v;
        }
      },
      value);
  return out.str();
}

std::string_view primary_param(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::Hbos: return "n_histograms";
    case DetectorKind::Pca: return "n_components";
    case DetectorKind::Mcd: return "support_fraction";
    case DetectorKind::Knn:
    case DetectorKind::Lof: return "n_neighbors";
    case DetectorKind::Cblof: return "n_clusters";
    case DetectorKind::Autoencoder: return "hidden_neurons";
    case DetectorKind::IsolationForest: return "n_estimators";
  }
  return "";
}

ParamMap default_params(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::Hbos: return {{"n_histograms", std::int64_t{20}}};
    case DetectorKind::Pca: return {{"n_components", std::int64_t{2}}};
    case DetectorKind::Mcd: return {{"support_fraction", 0.01}};
    case DetectorKind::Knn: return {{"n_neighbors", std::int64_t{5}}, {"mode", std::string("mean")}};
    case DetectorKind::Lof: return {{"n_neighbors", std::int64_t{5}}};
    case DetectorKind::Cblof:
      return {{"n_clusters", std::int64_t{5}}, {"alpha", 0.9}, {"beta", 5.0}};
    case DetectorKind::Autoencoder:
      return {{"hidden_neurons", std::vector<std::int64_t>{64, 32, 32, 64}},
              {"epochs", std::int64_t{100}},
              {"batch_size", std::int64_t{32}},
              {"learning_rate", 1e-3}};
    case DetectorKind::IsolationForest:
      return {{"n_estimators", std::int64_t{100}}, {"subsample", std::int64_t{256}}};
  }
  return {};
}

DetectorConfig resolve_config(DetectorConfig config) {
  ParamMap resolved = default_params(config.kind);
  for (auto& [name, value] : config.params) {
    if (!resolved.contains(name)) bad(config.kind, "unknown parameter '" + name + "'");
    resolved[name] = std::move(value);
  }
  config.params = std::move(resolved);
  check_params(config);
  return config;
}

ScoreVector run_detector(const FeatureFrame& frame, const DetectorConfig& raw) {
  const DetectorConfig c = resolve_config(raw);
  const auto& p = c.params;
  switch (c.kind) {
    case DetectorKind::Hbos:
      return score_hbos(frame, positive_int(c.kind, p, "n_histograms"));
    case DetectorKind::Pca: {
      const auto k = get_int(c.kind, p, "n_components");
      if (k > static_cast<std::int64_t>(frame.cols())) bad(c.kind, "n_components exceeds feature count");
      return score_pca(frame, static_cast<int>(k));
    }
    case DetectorKind::Mcd:
      return score_mcd(frame, get_real(c.kind, p, "support_fraction"), c.seed);
    case DetectorKind::Knn:
      return score_knn(frame, positive_int(c.kind, p, "n_neighbors"), knn_mode(p));
    case DetectorKind::Lof:
      return score_lof(frame, positive_int(c.kind, p, "n_neighbors"));
    case DetectorKind::Cblof:
      return score_cblof(frame, positive_int(c.kind, p, "n_clusters"), get_real(c.kind, p, "alpha"),
                         get_real(c.kind, p, "beta"), c.seed);
    case DetectorKind::Autoencoder:
      return score_autoencoder(frame, ae_options(c));
    case DetectorKind::IsolationForest:
      return score_iforest(frame, positive_int(c.kind, p, "n_estimators"),
                           positive_int(c.kind, p, "subsample"), c.seed);
  }
  bad(c.kind, "unsupported detector");
}

}  // namespace auditod
