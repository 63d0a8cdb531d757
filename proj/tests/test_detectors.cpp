#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "auditod/detectors.hpp"
#include "auditod/error.hpp"
#include "brute_force.hpp"
#include "test_util.hpp"

using namespace auditod;
using testing::frame_from_column;
using testing::frame_from_rows;

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

bool strictly_largest(const std::vector<double>& v, std::size_t i) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j != i && !(v[j] < v[i])) return false;
  }
  return true;
}

FeatureFrame gaussian_frame(std::size_t n, std::size_t p, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& r : rows)
    for (auto& x : r) x = g(gen);
  return frame_from_rows(rows);
}

FeatureFrame translate(const FeatureFrame& f, const Eigen::RowVectorXd& shift) {
  FeatureFrame::Matrix m = f.values();
  m.rowwise() += shift;
  return FeatureFrame(f.ids(), f.columns(), std::move(m));
}

}  // namespace

// --- HBOS ----------------------------------------------------------------

TEST_CASE("HBOS constant feature contributes nothing") {
  const auto f = frame_from_rows({{0.3, 0.0}, {0.3, 1.0}, {0.3, 0.2}, {0.3, 0.9}});
  const auto only_constant = score_hbos(frame_from_column({0.3, 0.3, 0.3}), 10);
  for (double s : only_constant.scores) CHECK(s == 0.0);
  const auto with_constant = score_hbos(f, 2);
  const auto varying = score_hbos(frame_from_column({0.0, 1.0, 0.2, 0.9}), 2);
  CHECK(with_constant.scores == varying.scores);
}

TEST_CASE("HBOS hand-built histogram") {
  std::vector<double> xs(9, 0.0);
  xs.push_back(1.0);
  const auto s = score_hbos(frame_from_column(xs), 2);
  for (int i = 0; i < 9; ++i) CHECK(s.scores[i] == 0.0);
  CHECK(s.scores[9] == doctest::Approx(std::log10(9.0)).epsilon(1e-12));
  CHECK(s.scores[9] == doctest::Approx(0.954).epsilon(1e-3));
}

TEST_CASE("HBOS maximum value falls in the last bin") {
  const auto s = score_hbos(frame_from_column({0.0, 0.5, 1.0, 1.0}), 4);
  // bins: [0,.25) 1, [.5,.75) 1, last bin holds both 1.0 values.
  CHECK(s.scores[2] == 0.0);
  CHECK(s.scores[0] == doctest::Approx(std::log10(2.0)));
}

TEST_CASE("HBOS duplicating a record never raises its score") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto base = testing::random_frame(40, 3, gen);
    const auto before = score_hbos(base, 7);
    const std::size_t pick = gen() % 40;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < 40; ++i) rows.push_back({base.values()(i, 0), base.values()(i, 1), base.values()(i, 2)});
    rows.push_back(rows[pick]);
    const auto after = score_hbos(frame_from_rows(rows), 7);
    CHECK(after.scores[pick] <= before.scores[pick] + 1e-12);
  }
}

TEST_CASE("HBOS grid values are accepted") {
  const auto f = gaussian_frame(60, 3, 1);
  for (int bins : {5, 10, 15, 20, 50, 100}) {
    const auto s = run_detector(f, {DetectorKind::Hbos, {{"n_histograms", std::int64_t{bins}}}, 0});
    CHECK(s.size() == 60);
  }
  CHECK_THROWS_AS(score_hbos(f, 0), Error);
}

// --- PCA -----------------------------------------------------------------

TEST_CASE("PCA full rank reconstructs exactly") {
  const auto f = gaussian_frame(80, 4, 2);
  const auto s = score_pca(f, 4);
  for (double v : s.scores) CHECK(std::abs(v) <= 1e-9);
  CHECK(std::accumulate(s.scores.begin(), s.scores.end(), 0.0) <= 1e-9 * 80);
}

TEST_CASE("PCA with zero components is squared distance to the mean") {
  const auto f = gaussian_frame(30, 3, 3);
  const auto s = score_pca(f, 0);
  const Eigen::RowVectorXd mean = f.values().colwise().mean();
  for (std::size_t i = 0; i < f.rows(); ++i) {
    CHECK(s.scores[i] == doctest::Approx((f.values().row(i) - mean).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("PCA off-line point against a 2x2 eigendecomposition oracle") {
  std::vector<std::vector<double>> rows;
  for (int t = 0; t < 10; ++t) rows.push_back({t / 9.0, t / 9.0});
  rows.push_back({0.0, 1.0});
  const auto f = frame_from_rows(rows);
  const auto s = score_pca(f, 1);

  // Closed-form covariance and dominant eigenvector.
  const double n = static_cast<double>(rows.size());
  double mx = 0, my = 0;
  for (const auto& r : rows) {
    mx += r[0];
    my += r[1];
  }
  mx /= n;
  my /= n;
  double a = 0, b = 0, c = 0;
  for (const auto& r : rows) {
    a += (r[0] - mx) * (r[0] - mx);
    b += (r[0] - mx) * (r[1] - my);
    c += (r[1] - my) * (r[1] - my);
  }
  const double lambda = (a + c) / 2 + std::sqrt((a - c) * (a - c) / 4 + b * b);
  double vx = b, vy = lambda - a;
  const double norm = std::hypot(vx, vy);
  vx /= norm;
  vy /= norm;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double dx = rows[i][0] - mx, dy = rows[i][1] - my;
    const double along = dx * vx + dy * vy;
    const double expected = dx * dx + dy * dy - along * along;
    CHECK(s.scores[i] == doctest::Approx(expected).epsilon(1e-9));
  }
  CHECK(strictly_largest(s.scores, 10));
}

TEST_CASE("PCA rejects too many components") {
  const auto f = gaussian_frame(10, 2, 4);
  CHECK_THROWS_AS(score_pca(f, 3), Error);
  CHECK_THROWS_AS(run_detector(f, {DetectorKind::Pca, {{"n_components", std::int64_t{3}}}, 0}), Error);
  CHECK_NOTHROW(run_detector(f, {DetectorKind::Pca, {{"n_components", std::int64_t{2}}}, 0}));
}

// --- MCD -----------------------------------------------------------------

TEST_CASE("MCD robust mean of a Gaussian sample") {
  const auto f = gaussian_frame(200, 2, 99);
  const auto fit = fit_mcd(f, 0.5, 7);
  const Eigen::RowVectorXd sample_mean = f.values().colwise().mean();
  CHECK(std::abs(fit.location(0) - sample_mean(0)) < 0.3);
  CHECK(std::abs(fit.location(1) - sample_mean(1)) < 0.3);
  CHECK(fit.support.size() == 100);
}

TEST_CASE("MCD finds the exhaustive minimum-determinant subset") {
  auto rows = std::vector<std::vector<double>>{};
  std::mt19937_64 gen(13);
  std::normal_distribution<double> g(0.0, 0.05);
  for (int i = 0; i < 20; ++i) rows.push_back({1.0 + g(gen), 2.0 + g(gen)});
  rows.push_back({101.0, 2.0});
  const auto f = frame_from_rows(rows);

  // h = ceil(0.9 * 21) = 19: enumerate every pair left out.
  double best = std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> best_out;
  for (std::size_t a = 0; a < 21; ++a) {
    for (std::size_t b = a + 1; b < 21; ++b) {
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (std::size_t i = 0; i < 21; ++i)
        if (i != a && i != b) mean += Eigen::Vector2d(rows[i][0], rows[i][1]);
      mean /= 19.0;
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (std::size_t i = 0; i < 21; ++i) {
        if (i == a || i == b) continue;
        const Eigen::Vector2d d = Eigen::Vector2d(rows[i][0], rows[i][1]) - mean;
        cov += d * d.transpose();
      }
      cov /= 19.0;
      const double logdet = std::log(cov.determinant());
      if (logdet < best) {
        best = logdet;
        best_out = {a, b};
      }
    }
  }
  CHECK((best_out.first == 20 || best_out.second == 20));

  const auto fit = fit_mcd(f, 0.9, 1);
  CHECK(fit.log_determinant == doctest::Approx(best).epsilon(1e-9));
  CHECK(std::find(fit.support.begin(), fit.support.end(), 20u) == fit.support.end());

  const auto s = score_mcd(f, 0.9, 1);
  CHECK(strictly_largest(s.scores, 20));
}

TEST_CASE("MCD scores are translation invariant") {
  const auto f = gaussian_frame(60, 3, 21);
  Eigen::RowVectorXd shift(3);
  shift << 5.0, -3.0, 0.25;
  const auto a = score_mcd(f, 0.5, 3);
  const auto b = score_mcd(translate(f, shift), 0.5, 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.scores[i] - b.scores[i]) <= 1e-9);
}

TEST_CASE("MCD accepts the full support_fraction grid") {
  const auto f = gaussian_frame(50, 3, 8);
  for (double sf : {0.0, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
    const auto s = run_detector(f, {DetectorKind::Mcd, {{"support_fraction", sf}}, 11});
    for (double v : s.scores) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(score_mcd(gaussian_frame(4, 3, 1), 0.5, 0), Error);
}

TEST_CASE("MCD reports degenerate covariance") {
  const auto f = frame_from_rows(std::vector<std::vector<double>>(10, {1.0, 2.0}));
  try {
    score_mcd(f, 0.5, 0);
    FAIL("expected DegenerateCovariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCovariance);
  }
}

// --- KNN / LOF -----------------------------------------------------------

TEST_CASE("KNN hand-computed scores") {
  const auto f = frame_from_column({0.0, 1.0, 3.0});
  CHECK(score_knn(f, 1).scores == std::vector<double>{1.0, 1.0, 2.0});
  CHECK(score_knn(f, 2, KnnMode::Mean).scores == std::vector<double>{2.0, 1.5, 2.5});
  CHECK(score_knn(f, 2, KnnMode::Kth).scores == std::vector<double>{3.0, 2.0, 3.0});
  const auto dup = score_knn(frame_from_column({0.4, 0.4, 0.9}), 1);
  CHECK(dup.scores[0] == 0.0);
  CHECK(dup.scores[1] == 0.0);
  CHECK_THROWS_AS(score_knn(f, 3), Error);
  CHECK_NOTHROW(run_detector(gaussian_frame(20, 2, 1), {DetectorKind::Knn, {{"n_neighbors", std::int64_t{5}}}, 0}));
}

TEST_CASE("KNN and LOF match the exhaustive oracle") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = testing::random_frame(30 + gen() % 100, 1 + gen() % 5, gen);
    const std::size_t k = 1 + gen() % 8;
    const auto mean = score_knn(f, static_cast<int>(k));
    const auto kth = score_knn(f, static_cast<int>(k), KnnMode::Kth);
    const auto lof = score_lof(f, static_cast<int>(k));
    const auto want_mean = oracle::knn_mean_scores(f, k);
    const auto want_kth = oracle::knn_kth_scores(f, k);
    const auto want_lof = oracle::lof_scores(f, k);
    for (std::size_t i = 0; i < f.rows(); ++i) {
      CHECK(std::abs(mean.scores[i] - want_mean[i]) <= 1e-12);
      CHECK(std::abs(kth.scores[i] - want_kth[i]) <= 1e-12);
      CHECK(std::abs(lof.scores[i] - want_lof[i]) <= 1e-12 * std::max(1.0, want_lof[i]));
    }
  }
}

TEST_CASE("LOF on a uniform grid is close to one") {
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(i / 49.0);
  const auto s = score_lof(frame_from_column(xs), 5);
  for (int i = 5; i < 45; ++i) {
    CHECK(s.scores[i] >= 0.9);
    CHECK(s.scores[i] <= 1.1);
  }
}

TEST_CASE("LOF isolates a distant point") {
  auto rows = std::vector<std::vector<double>>{};
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) rows.push_back({u(gen), u(gen)});
  rows.push_back({50.0 * std::sqrt(2.0), 0.0});
  const auto s = score_lof(frame_from_rows(rows), 5);
  CHECK(strictly_largest(s.scores, 30));
}

TEST_CASE("LOF duplicate groups larger than k score one") {
  std::vector<double> xs(8, 0.25);
  xs.push_back(0.9);
  xs.push_back(0.95);
  const auto s = score_lof(frame_from_column(xs), 3);
  for (int i = 0; i < 8; ++i) CHECK(s.scores[i] == doctest::Approx(1.0));
  for (double v : s.scores) CHECK(std::isfinite(v));
}

// --- CBLOF ---------------------------------------------------------------

TEST_CASE("CBLOF single cluster scores distance to the global centroid") {
  const auto f = gaussian_frame(40, 3, 9);
  const auto s = score_cblof(f, 1, 0.9, 5.0, 1);
  const Eigen::RowVectorXd c = f.values().colwise().mean();
  for (std::size_t i = 0; i < f.rows(); ++i) {
    CHECK(s.scores[i] == doctest::Approx((f.values().row(i) - c).norm()).epsilon(1e-12));
  }
}

TEST_CASE("CBLOF small blob takes the top scores") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({g(gen), g(gen)});
  for (int i = 0; i < 3; ++i) rows.push_back({100.0 + g(gen), g(gen)});
  const auto f = frame_from_rows(rows);
  const auto s = score_cblof(f, 2, 0.9, 5.0, 3);

  double cx = 0, cy = 0;
  for (int i = 0; i < 50; ++i) {
    cx += rows[i][0];
    cy += rows[i][1];
  }
  cx /= 50;
  cy /= 50;
  for (int i = 50; i < 53; ++i) {
    CHECK(s.scores[i] == doctest::Approx(std::hypot(rows[i][0] - cx, rows[i][1] - cy)).epsilon(1e-12));
  }
  std::vector<std::size_t> order(53);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.scores[a] > s.scores[b]; });
  std::vector<std::size_t> top(order.begin(), order.begin() + 3);
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<std::size_t>{50, 51, 52});
}

TEST_CASE("CBLOF large/small boundary") {
  CHECK(cblof_large_cluster_count({50, 3}, 53, 0.9, 5.0) == 1);
  CHECK(cblof_large_cluster_count({40, 38, 10, 2}, 90, 0.9, 5.0) == 3);  // ratio 10/2 = 5
  CHECK(cblof_large_cluster_count({30, 30, 30, 10}, 100, 0.9, 5.0) == 3);  // cumulative 90
  CHECK(cblof_large_cluster_count({25, 25, 25, 25}, 100, 1.0, 5.0) == 4);
  CHECK(cblof_large_cluster_count({7}, 7, 0.9, 5.0) == 1);
}

TEST_CASE("k-means handles more clusters than distinct points") {
  const auto f = frame_from_rows({{0, 0}, {0, 0}, {1, 1}, {1, 1}, {1, 1}});
  const auto km = kmeans(f, 3, 5);
  CHECK(km.labels.size() == 5);
  const auto s = score_cblof(f, 3, 0.9, 5.0, 5);
  for (double v : s.scores) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(kmeans(f, 6, 1), Error);
}

// --- Autoencoder ---------------------------------------------------------

TEST_CASE("autoencoder training reduces loss on correlated data") {
  std::mt19937_64 gen(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 500; ++i) {
    const double t = u(gen);
    rows.push_back({t, 1 - t, 0.5 * t + 0.25, t * t, 0.8 * t + 0.1, 1 - 0.6 * t});
    for (auto& x : rows.back()) x = std::clamp(x + noise(gen), 0.0, 1.0);
  }
  const auto f = frame_from_rows(rows);
  AutoencoderOptions opts;
  opts.seed = 17;
  const auto result = train_autoencoder(f, opts);
  REQUIRE(result.epoch_loss.size() == 100);
  CHECK(result.epoch_loss.back() <= 0.5 * result.epoch_loss.front());
  for (double s : result.scores.scores) CHECK(s >= 0.0);

  const auto again = train_autoencoder(f, opts);
  CHECK(again.scores.scores == result.scores.scores);
}

TEST_CASE("autoencoder validates its architecture") {
  const auto f = gaussian_frame(20, 3, 1);
  AutoencoderOptions asym;
  asym.hidden_neurons = {8, 4};
  CHECK_THROWS_AS(score_autoencoder(f, asym), Error);
  CHECK_THROWS_AS(run_detector(f, {DetectorKind::Autoencoder, {{"hidden_neurons", std::vector<std::int64_t>{8, 4}}}, 0}),
                  Error);
  AutoencoderOptions tiny;
  tiny.hidden_neurons = {4, 2, 4};
  tiny.epochs = 2;
  CHECK(score_autoencoder(f, tiny).size() == 20);
}

TEST_CASE("autoencoder divergence raises NonFiniteLoss") {
  auto rows = std::vector<std::vector<double>>{{0, 1}, {1, 0}, {0.5, 0.5}, {0.2, 0.9}};
  AutoencoderOptions o;
  o.hidden_neurons = {4};
  o.epochs = 3;
  o.learning_rate = std::numeric_limits<double>::max();
  try {
    score_autoencoder(frame_from_rows(rows), o);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
}

// --- Isolation forest ----------------------------------------------------

TEST_CASE("isolation forest normalization constants") {
  CHECK(iforest_average_path(1) == 0.0);
  CHECK(iforest_average_path(2) == 1.0);
  CHECK(iforest_average_path(256) == doctest::Approx(2 * (std::log(255.0) + 0.5772156649015329) - 2 * 255.0 / 256));
  CHECK(iforest_score(iforest_average_path(256), 256) == 0.5);
  CHECK(iforest_score(0.0, 256) == 1.0);
}

TEST_CASE("isolation forest ranks an extreme point first") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({u(gen), u(gen)});
  rows.push_back({10.0, 10.0});
  const auto s = score_iforest(frame_from_rows(rows), 100, 256, 2);
  CHECK(argmax(s.scores) == 100);
  for (double v : s.scores) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

// --- shared --------------------------------------------------------------

TEST_CASE("every detector is deterministic for a fixed seed") {
  const auto f = gaussian_frame(120, 4, 55);
  for (auto kind : kAllDetectors) {
    DetectorConfig c{kind, {}, 99};
    if (kind == DetectorKind::Autoencoder) c.params["epochs"] = std::int64_t{5};
    const auto a = run_detector(f, c);
    const auto b = run_detector(f, c);
    CHECK(a.scores == b.scores);
    CHECK(a.ids == f.ids());
    for (double v : a.scores) {
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("config resolution") {
  CHECK(parse_detector_kind("IFOREST") == DetectorKind::IsolationForest);
  CHECK(parse_detector_kind("IF") == DetectorKind::IsolationForest);
  CHECK_FALSE(parse_detector_kind("ABOD").has_value());
  const auto c = resolve_config({DetectorKind::Cblof, {}, 0});
  CHECK(std::get<std::int64_t>(c.params.at("n_clusters")) == 5);
  CHECK(std::get<double>(c.params.at("alpha")) == 0.9);
  CHECK_THROWS_AS(resolve_config({DetectorKind::Cblof, {{"gamma", 1.0}}, 0}), Error);
  CHECK_THROWS_AS(resolve_config({DetectorKind::Cblof, {{"alpha", 0.4}}, 0}), Error);
  CHECK_THROWS_AS(resolve_config({DetectorKind::Knn, {{"mode", std::string("median")}}, 0}), Error);
  CHECK_THROWS_AS(resolve_config({DetectorKind::Mcd, {{"support_fraction", 1.5}}, 0}), Error);
  CHECK_THROWS_AS(resolve_config({DetectorKind::Hbos, {{"n_histograms", 2.5}}, 0}), Error);
  CHECK(format_param(0.1) == "0.1");
  CHECK(format_param(std::int64_t{20}) == "20");
  CHECK(format_param(std::vector<std::int64_t>{64, 32, 32, 64}) == "[64;32;32;64]");
  CHECK(format_param(std::string("kth")) == "kth");
  CHECK_NOTHROW(resolve_config({DetectorKind::Mcd, {{"support_fraction", std::int64_t{0}}}, 0}));
}
