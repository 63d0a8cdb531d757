#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "auditod/error.hpp"
#include "auditod/fusion.hpp"
#include "hbos_example.hpp"

using namespace auditod;

namespace {

ScoreVector vec(std::vector<double> scores, bool normalized = true, std::string name = "X") {
  ScoreVector v;
  v.detector = std::move(name);
  v.normalized = normalized;
  v.scores = std::move(scores);
  for (std::size_t i = 0; i < v.scores.size(); ++i) v.ids.push_back("id" + std::to_string(100 + i));
  return v;
}

const RankRow& row_for(const RankTable& t, const std::string& id) {
  return *std::find_if(t.rows.begin(), t.rows.end(), [&](const RankRow& r) { return r.id == id; });
}

double value_for(const std::vector<ScoredRecord>& v, const std::string& id) {
  return std::find_if(v.begin(), v.end(), [&](const ScoredRecord& r) { return r.id == id; })->value;
}

std::vector<ScoreVector> random_normalized(std::mt19937_64& gen, std::size_t n, std::size_t m) {
  std::uniform_int_distribution<int> level(0, 9);  // coarse levels so ties are common
  std::vector<ScoreVector> out;
  for (std::size_t d = 0; d < m; ++d) {
    std::vector<double> s(n);
    for (auto& x : s) x = level(gen);
    out.push_back(normalize_scores(vec(s, false, "D" + std::to_string(d))));
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_scores examples") {
  CHECK(normalize_scores(vec({2, 4, 6}, false)).scores == std::vector<double>{0, 0.5, 1});
  CHECK(normalize_scores(vec({7, 7}, false)).scores == std::vector<double>{0, 0});
  CHECK(normalize_scores(vec({3, 9, 1}, false)).normalized);
  CHECK_THROWS_AS(normalize_scores(vec({1, 2})), Error);
}

TEST_CASE("rank table on the reference HBOS example") {
  const auto t = make_rank_table(testing::hbos_example_scores());
  CHECK(row_for(t, "68").norm_score == 1.0);
  CHECK(row_for(t, "68").ordering == 1);
  CHECK(row_for(t, "68").ranking == 1.0);
  CHECK(row_for(t, "248").ranking == 13.5);
  CHECK(row_for(t, "179").ranking == 13.5);
  // Tie-break by ascending id: "179" < "248".
  CHECK(row_for(t, "179").ordering == 13);
  CHECK(row_for(t, "248").ordering == 14);
  const std::size_t n = t.rows.size();
  double rank_sum = 0;
  std::size_t order_sum = 0;
  for (const auto& r : t.rows) {
    rank_sum += r.ranking;
    order_sum += r.ordering;
  }
  CHECK(rank_sum == n * (n + 1) / 2.0);
  CHECK(order_sum == n * (n + 1) / 2);
}

TEST_CASE("rank table simple cases") {
  const auto strict = make_rank_table(vec({0.1, 1.0, 0.5, 0.0}));
  CHECK(strict.rows[1].ordering == 1);
  CHECK(strict.rows[2].ordering == 2);
  CHECK(strict.rows[0].ordering == 3);
  CHECK(strict.rows[3].ordering == 4);
  for (const auto& r : strict.rows) CHECK(r.ranking == static_cast<double>(r.ordering));

  const auto ties = make_rank_table(vec({0.3, 0.3, 0.3, 0.3}));
  std::vector<std::size_t> orders;
  for (const auto& r : ties.rows) {
    orders.push_back(r.ordering);
    CHECK(r.ranking == 2.5);
  }
  CHECK(orders == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK_THROWS_AS(make_rank_table(vec({1, 2}, false)), Error);

  const auto idx = ties.by_ordering();
  CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("top-k frequency examples") {
  const auto a = make_rank_table(vec({1.0, 0.2, 0.1, 0.0}));
  const auto b = make_rank_table(vec({1.0, 0.0, 0.4, 0.3}));
  const auto c = make_rank_table(vec({1.0, 0.5, 0.0, 0.9}));
  const std::vector<RankTable> one{a};
  const auto single = top_k_frequency(one, 2);
  CHECK(single.size() == 2);
  CHECK(single.at("id100") == 1);
  CHECK(single.at("id101") == 1);

  const std::vector<RankTable> three{a, b, c};
  const auto f1 = top_k_frequency(three, 1);
  CHECK(f1.size() == 1);
  CHECK(f1.at("id100") == 3);

  const auto f2 = top_k_frequency(three, 2);
  CHECK(f2.at("id100") == 3);
  CHECK(f2.at("id101") == 1);
  CHECK(f2.at("id102") == 1);
  CHECK(f2.at("id103") == 1);
}

TEST_CASE("ensemble examples") {
  const std::vector<double> common{0.0, 0.25, 1.0, 0.6};
  std::vector<ScoreVector> eight(8, vec(common));
  const auto avg = ensemble_average_score(eight);
  for (std::size_t i = 0; i < common.size(); ++i) {
    CHECK(value_for(avg, "id" + std::to_string(100 + i)) == doctest::Approx(common[i]).epsilon(1e-15));
  }
  CHECK(avg.front().id == "id102");

  const std::vector<ScoreVector> crossed{vec({1, 0}), vec({0, 1})};
  const auto flat = ensemble_average_score(crossed);
  for (const auto& r : flat) CHECK(r.value == 0.0);
  CHECK(flat.front().id == "id100");

  // Mean ranks 1, 2, 3 across two tables.
  const std::vector<RankTable> tables{make_rank_table(vec({1.0, 0.5, 0.0})), make_rank_table(vec({0.9, 0.6, 0.1}))};
  const auto rank = ensemble_average_rank(tables);
  CHECK(value_for(rank, "id100") == 1.0);
  CHECK(value_for(rank, "id101") == 0.5);
  CHECK(value_for(rank, "id102") == 0.0);
}

TEST_CASE("ensemble inputs must be aligned") {
  auto a = vec({0.0, 1.0});
  auto b = vec({0.0, 1.0});
  std::swap(b.ids[0], b.ids[1]);
  const std::vector<ScoreVector> both{a, b};
  CHECK_THROWS_AS(ensemble_average_score(both), Error);
  CHECK_THROWS_AS(ensemble_average_score(std::vector<ScoreVector>{}), Error);
}

TEST_CASE("rank-sum conservation and permutation invariance") {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 60;
    auto vs = random_normalized(gen, n, 1 + gen() % 8);
    std::vector<RankTable> tables;
    for (const auto& v : vs) tables.push_back(make_rank_table(v));
    for (const auto& t : tables) {
      double rs = 0;
      for (const auto& r : t.rows) rs += r.ranking;
      CHECK(rs == n * (n + 1) / 2.0);
    }

    // Shuffle record positions consistently across all inputs.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<ScoreVector> shuffled;
    for (const auto& v : vs) {
      ScoreVector s = v;
      for (std::size_t i = 0; i < n; ++i) {
        s.ids[i] = v.ids[perm[i]];
        s.scores[i] = v.scores[perm[i]];
      }
      shuffled.push_back(s);
    }
    std::vector<RankTable> shuffled_tables;
    for (const auto& v : shuffled) shuffled_tables.push_back(make_rank_table(v));
    for (std::size_t d = 0; d < vs.size(); ++d) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = shuffled_tables[d].rows[i];
        const auto& o = tables[d].rows[perm[i]];
        CHECK(r.id == o.id);
        CHECK(r.ordering == o.ordering);
        CHECK(r.ranking == o.ranking);
      }
    }
    const std::size_t k = 1 + gen() % n;
    const auto s1 = summarize(vs, tables, k);
    const auto s2 = summarize(shuffled, shuffled_tables, k);
    REQUIRE(s1.rows.size() == s2.rows.size());
    for (std::size_t i = 0; i < s1.rows.size(); ++i) {
      CHECK(s1.rows[i].id == s2.rows[i].id);
      CHECK(s1.rows[i].avg_norm_score == s2.rows[i].avg_norm_score);
      CHECK(s1.rows[i].one_minus_avg_rank == s2.rows[i].one_minus_avg_rank);
      CHECK(s1.rows[i].frequency == s2.rows[i].frequency);
    }
  }
}

TEST_CASE("frequency bound and monotone consistency") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 50;
    const auto vs = random_normalized(gen, n, 1 + gen() % 8);
    std::vector<RankTable> tables;
    for (const auto& v : vs) tables.push_back(make_rank_table(v));
    const std::size_t k = 1 + gen() % n;
    const auto freq = top_k_frequency(tables, k);
    std::size_t total = 0;
    for (const auto& [id, f] : freq) {
      CHECK(f >= 1);
      CHECK(f <= tables.size());
      total += f;
    }
    CHECK(total == k * tables.size());

    const auto avg = ensemble_average_score(vs);
    const auto rank = ensemble_average_rank(tables);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        bool dominates = true;
        for (const auto& v : vs) dominates = dominates && v.scores[a] >= v.scores[b];
        if (!dominates) continue;
        CHECK(value_for(avg, vs[0].ids[a]) >= value_for(avg, vs[0].ids[b]));
        // Tie-averaged rankings keep dominance: a's ranking never exceeds b's.
        CHECK(value_for(rank, vs[0].ids[a]) >= value_for(rank, vs[0].ids[b]));
      }
    }
  }
}

TEST_CASE("strictly increasing transforms leave ordering unchanged") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> raw(40);
    for (auto& x : raw) x = std::round(g(gen) * 4) / 4;
    std::vector<double> transformed(raw.size());
    std::transform(raw.begin(), raw.end(), transformed.begin(), [](double x) { return std::exp(3 * x) + 2; });
    const auto a = make_rank_table(normalize_scores(vec(raw, false)));
    const auto b = make_rank_table(normalize_scores(vec(transformed, false)));
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(a.rows[i].ordering == b.rows[i].ordering);
      CHECK(a.rows[i].ranking == b.rows[i].ranking);
    }
  }
}

TEST_CASE("summary invariants") {
  const std::vector<ScoreVector> vs{vec({0.0, 1.0, 0.5}), vec({0.2, 1.0, 0.0})};
  std::vector<RankTable> ts;
  for (const auto& v : vs) ts.push_back(make_rank_table(v));
  const auto s = summarize(vs, ts, 2);
  CHECK(s.k == 2);
  CHECK(s.detector_count == 2);
  REQUIRE(s.rows.size() == 3);
  CHECK(s.rows[0].id == "id101");
  CHECK(s.rows[0].avg_norm_score == 1.0);
  CHECK(s.rows[0].one_minus_avg_rank == 1.0);
  CHECK(s.rows[0].frequency == 2);
  std::size_t zero_freq = 0;
  for (const auto& r : s.rows) zero_freq += r.frequency == 0;
  CHECK(zero_freq == 0);  // n=3, k=2 over two tables: every record appears at least once here
}
