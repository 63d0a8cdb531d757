#include "auditod/tuning.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "auditod/error.hpp"
#include "auditod/fusion.hpp"
#include "auditod/rng.hpp"

namespace auditod {

LabelSet parse_labels(std::string_view text) {
  LabelSet labels;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    labels.positives.insert(line.substr(first, last - first + 1));
  }
  return labels;
}

LabelSet read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_labels(buf.str());
}

void write_labels(const std::filesystem::path& path, const LabelSet& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, path.string());
  out << "# planted anomalies\n";
  for (const auto& id : labels.positives) out << id << '\n';
}

void check_labels_known(const LabelSet& labels, std::span<const RecordId> ids) {
  const std::set<RecordId> known(ids.begin(), ids.end());
  for (const auto& id : labels.positives) {
    if (!known.contains(id)) throw Error(ErrorCode::UnknownRecordId, id);
  }
}

std::set<RecordId> top_flagged(const ScoreVector& scores, std::size_t count) {
  const auto order = descending_order(scores.scores, scores.ids);
  std::set<RecordId> out;
  for (std::size_t i = 0; i < std::min(count, order.size()); ++i) out.insert(scores.ids[order[i]]);
  return out;
}

double correction_rate(const ScoreVector& scores, const LabelSet& labels) {
  if (labels.positives.empty()) throw Error(ErrorCode::EmptyLabels, "correction rate needs labels");
  check_labels_known(labels, scores.ids);
  const ScoreVector norm = scores.normalized ? scores : normalize_scores(scores);
  const auto flagged = top_flagged(norm, labels.positives.size());
  std::size_t hits = 0;
  for (const auto& id : flagged) hits += labels.positives.count(id);
  return static_cast<double>(hits) / static_cast<double>(labels.positives.size());
}

bool param_less(const ParamValue& a, const ParamValue& b) {
  auto as_number = [](const ParamValue& v) -> std::optional<double> {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::nullopt;
  };
  const auto na = as_number(a), nb = as_number(b);
  if (na && nb) return *na < *nb;
  if (const auto* la = std::get_if<std::vector<std::int64_t>>(&a)) {
    if (const auto* lb = std::get_if<std::vector<std::int64_t>>(&b)) {
      // Smaller network first: total width, then lexicographic.
      const auto sa = std::accumulate(la->begin(), la->end(), std::int64_t{0});
      const auto sb = std::accumulate(lb->begin(), lb->end(), std::int64_t{0});
      if (sa != sb) return sa < sb;
      return *la < *lb;
    }
  }
  return a < b;
}

SweepResult sweep(const FeatureFrame& frame, DetectorKind kind, const std::vector<ParamValue>& grid,
                  const LabelSet& labels, std::uint64_t seed, const ParamMap& base) {
  if (grid.empty()) throw Error(ErrorCode::InvalidConfig, "sweep grid is empty");
  if (labels.positives.empty()) throw Error(ErrorCode::EmptyLabels, "sweep needs labels");
  check_labels_known(labels, frame.ids());

  SweepResult result;
  result.kind = kind;
  result.param = std::string(primary_param(kind));
  for (const auto& value : grid) {
    DetectorConfig config{kind, base, 0};
    config.params[result.param] = value;
    const std::string tag = std::string(to_string(kind)) + ":" + result.param + "=" + format_param(value);
    config.seed = derive_seed(seed, tag);
    double rate = 0.0;
    try {
      rate = correction_rate(run_detector(frame, config), labels);
    } catch (const Error& e) {
      throw e.with_context("grid value " + format_param(value));
    }
    result.grid.push_back({value, rate});
    const bool better = result.grid.size() == 1 || rate > result.best_rate ||
                        (rate == result.best_rate && param_less(value, result.best));
    if (better) {
      result.best = value;
      result.best_rate = rate;
    }
  }
  return result;
}

ClassificationMetrics precision_recall_f1(const std::set<RecordId>& flagged, const LabelSet& labels) {
  if (labels.positives.empty()) throw Error(ErrorCode::EmptyLabels, "metrics need labels");
  std::size_t hits = 0;
  for (const auto& id : flagged) hits += labels.positives.count(id);
  ClassificationMetrics m;
  m.empty_flagged = flagged.empty();
  m.precision = flagged.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(flagged.size());
  m.recall = static_cast<double>(hits) / static_cast<double>(labels.positives.size());
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

double roc_auc(const ScoreVector& scores, const LabelSet& labels) {
  const std::size_t n = scores.size();
  std::vector<bool> positive(n);
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    positive[i] = labels.positives.contains(scores.ids[i]);
    n_pos += positive[i];
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorCode::DegenerateLabels, "ROC-AUC needs at least one positive and one negative");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores.scores[a] < scores.scores[b]; });
  // Sum of tie-averaged ascending ranks over positives (times 2 to stay integral).
  std::uint64_t twice_rank_sum = 0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && scores.scores[idx[end]] == scores.scores[idx[start]]) ++end;
    const std::uint64_t twice_rank = (start + 1) + end;
    for (std::size_t k = start; k < end; ++k) {
      if (positive[idx[k]]) twice_rank_sum += twice_rank;
    }
    start = end;
  }
  const double u = static_cast<double>(twice_rank_sum) / 2.0 -
                   static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "synthetic spec: " + m); };
  if (n_inliers == 0) fail("n_inliers must be positive");
  if (n_anomalies == 0) fail("n_anomalies must be positive");
  if (n_anomalies >= n_inliers) fail("n_anomalies must be smaller than n_inliers");
  if (p == 0) fail("p must be positive");
  if (!(shift > 0.0)) fail("shift must be positive");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.p);
  const std::size_t n = spec.n_inliers + spec.n_anomalies;
  Rng rng(derive_seed(spec.seed, "synthetic"));

  // Random SPD covariance with strong off-diagonal structure.
  Eigen::MatrixXd a(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) a(i, j) = rng.normal();
  const Eigen::MatrixXd sigma =
      a * a.transpose() / static_cast<double>(p) + 0.05 * Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd chol = sigma.llt().matrixL();

  // Rows [0, n_inliers) are inliers, the rest anomaly base draws.
  Eigen::MatrixXd raw(n, p);
  Eigen::VectorXd z(p);
  for (std::size_t r = 0; r < n; ++r) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    raw.row(r) = (chol * z).transpose();
  }
  const auto inliers = raw.topRows(static_cast<Eigen::Index>(spec.n_inliers));
  const Eigen::RowVectorXd lo = inliers.colwise().minCoeff();
  const Eigen::RowVectorXd range = inliers.colwise().maxCoeff() - lo;

  for (std::size_t r = spec.n_inliers; r < n; ++r) {
    Eigen::VectorXd u(p);
    for (Eigen::Index j = 0; j < p; ++j) u(j) = rng.normal();
    u.normalize();
    raw.row(r) += spec.shift * range.cwiseProduct(u.transpose());
  }
  // Joint min-max over all records.
  const Eigen::RowVectorXd lo2 = raw.colwise().minCoeff();
  const Eigen::RowVectorXd range2 = raw.colwise().maxCoeff() - lo2;
  Eigen::MatrixXd scaled = (raw.rowwise() - lo2).array().rowwise() / range2.array();

  // Random record order so anomalies are not positionally grouped.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));

  const int width = static_cast<int>(std::to_string(n).size());
  FeatureFrame::Matrix values(n, p);
  std::vector<RecordId> ids(n);
  LabelSet labels;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = perm[r];
    values.row(r) = scaled.row(src);
    std::string num = std::to_string(r + 1);
    ids[r] = "R" + std::string(width - static_cast<int>(num.size()), '0') + num;
    if (src >= spec.n_inliers) labels.positives.insert(ids[r]);
  }
  std::vector<std::string> columns;
  for (Eigen::Index j = 0; j < p; ++j) columns.push_back("x" + std::to_string(j + 1));

  const Eigen::VectorXd inv_range = range2.transpose().cwiseInverse();
  Eigen::VectorXd mean = (-lo2.transpose()).cwiseProduct(inv_range);
  Eigen::MatrixXd covariance = inv_range.asDiagonal() * sigma * inv_range.asDiagonal();
  return {FeatureFrame(std::move(ids), std::move(columns), std::move(values)), std::move(labels),
          std::move(mean), std::move(covariance)};
}

std::vector<double> mahalanobis_squared(const FeatureFrame& frame, const Eigen::VectorXd& mean,
                                        const Eigen::MatrixXd& covariance) {
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateCovariance, "covariance not SPD");
  Eigen::MatrixXd centered = (frame.values().rowwise() - mean.transpose()).transpose();
  llt.matrixL().solveInPlace(centered);
  std::vector<double> out(frame.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = centered.col(static_cast<Eigen::Index>(i)).squaredNorm();
  return out;
}

}  // namespace auditod
