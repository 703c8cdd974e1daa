#include "aglae/strategies.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "aglae/error.hpp"
#include "oracles.hpp"

namespace aglae {
namespace {

ProbMatrix probs(std::initializer_list<std::initializer_list<double>> rows) {
  ProbMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

FeatureMatrix points(std::initializer_list<std::initializer_list<float>> rows) {
  std::vector<float> v;
  for (const auto& row : rows) v.insert(v.end(), row.begin(), row.end());
  return FeatureMatrix(rows.size(), rows.begin()->size(), v);
}

std::vector<std::size_t> iota_indices(std::size_t n, std::size_t offset = 100) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = offset + i;
  return v;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an aglae::Error";
  return ErrorCode::io;
}

TEST(StrategyNames, RoundTrip) {
  for (auto k : {StrategyKind::random, StrategyKind::entropy, StrategyKind::coreset,
                 StrategyKind::badge, StrategyKind::cal}) {
    EXPECT_EQ(parse_strategy(to_string(k)), k);
  }
  EXPECT_EQ(code_of([] { parse_strategy("bald"); }), ErrorCode::invalid_config);
}

TEST(EntropyScores, KnownValues) {
  const auto h = entropy_scores(probs({{0.5, 0.5}, {1.0, 0.0}, {0.9, 0.1}}));
  EXPECT_NEAR(h[0], std::log(2.0), 1e-12);
  EXPECT_EQ(h[1], 0.0);
  EXPECT_NEAR(h[2], -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-12);
  EXPECT_NEAR(h[2], 0.3251, 5e-5);
}

TEST(QueryEntropy, PicksHighestEntropy) {
  StrategyInput in;
  in.candidate_indices = {10, 11, 12};
  in.candidate_probs = probs({{0.9, 0.1}, {0.6, 0.4}, {0.5, 0.5}});
  EXPECT_EQ(query_entropy(in, 2).indices, (std::vector<std::size_t>{12, 11}));
}

TEST(QueryEntropy, TiesToLowestPosition) {
  StrategyInput in;
  in.candidate_indices = {7, 3, 9};
  in.candidate_probs = probs({{0.7, 0.3}, {0.7, 0.3}, {0.7, 0.3}});
  EXPECT_EQ(query_entropy(in, 2).indices, (std::vector<std::size_t>{7, 3}));
  EXPECT_TRUE(query_entropy(in, 0).indices.empty());
  EXPECT_EQ(code_of([&] { query_entropy(in, 4); }), ErrorCode::insufficient_candidates);
}

TEST(QueryCoreset, FarthestPointThenTieBreak) {
  StrategyInput in;
  in.candidate_indices = {0, 1, 2};
  in.candidate_embeddings = points({{1, 0}, {3, 0}, {2, 0}});
  in.labeled_embeddings = points({{0, 0}});
  EXPECT_EQ(query_coreset(in, 1).indices, (std::vector<std::size_t>{1}));
  // After (3,0) joins the centers both (1,0) and (2,0) sit at distance 1.
  EXPECT_EQ(query_coreset(in, 2).indices, (std::vector<std::size_t>{1, 0}));
}

TEST(QueryCoreset, NeedsLabeledPool) {
  StrategyInput in;
  in.candidate_indices = {0};
  in.candidate_embeddings = points({{1, 0}});
  in.labeled_embeddings = FeatureMatrix(0, 2);
  EXPECT_EQ(code_of([&] { query_coreset(in, 1); }), ErrorCode::needs_warm_start);
}

TEST(QueryCoreset, CoveringRadiusNonIncreasing) {
  Rng rng(4, 0, Purpose::test);
  FeatureMatrix cand(40, 3), lab(3, 3);
  for (auto* m : {&cand, &lab}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) (*m)(i, j) = static_cast<float>(rng.normal());
    }
  }
  const auto picked = greedy_k_center(cand, lab, 15);
  std::vector<std::vector<float>> centers;
  for (std::size_t i = 0; i < lab.rows(); ++i) centers.emplace_back(lab.row(i).begin(), lab.row(i).end());
  double prev = std::numeric_limits<double>::infinity();
  for (auto p : picked) {
    centers.emplace_back(cand.row(p).begin(), cand.row(p).end());
    double radius = 0.0;
    for (std::size_t i = 0; i < cand.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += std::pow(cand(i, j) - c[j], 2);
        best = std::min(best, s);
      }
      radius = std::max(radius, best);
    }
    EXPECT_LE(radius, prev);
    prev = radius;
  }
}

TEST(KlDivergence, Basics) {
  const std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
  EXPECT_NEAR(kl_divergence(p, q), std::log(2.0), 1e-12);
  EXPECT_EQ(kl_divergence(q, q), 0.0);
}

TEST(QueryCal, ScoresMatchAnalyticCases) {
  const auto lab_x = points({{0, 0}, {0, 1}});
  const auto lab_p = probs({{1.0, 0.0}, {1.0, 0.0}});
  const auto cand_x = points({{0, 0.5f}, {5, 5}});
  const auto cand_p = probs({{0.5, 0.5}, {1.0, 0.0}});
  const auto s = cal_scores(cand_x, cand_p, lab_x, lab_p, 10);
  EXPECT_NEAR(s[0], std::log(2.0), 1e-12);
  EXPECT_EQ(s[1], 0.0);

  StrategyInput in;
  in.candidate_indices = {40, 41};
  in.candidate_embeddings = cand_x;
  in.candidate_probs = cand_p;
  in.labeled_embeddings = lab_x;
  in.labeled_probs = lab_p;
  EXPECT_EQ(query_cal(in, 1, 10).indices, (std::vector<std::size_t>{40}));
}

TEST(QueryCal, UsesOnlyKNearest) {
  // The near neighbour agrees with the candidate, the far one disagrees.
  const auto lab_x = points({{0, 0}, {10, 0}});
  const auto lab_p = probs({{0.5, 0.5}, {1.0, 0.0}});
  const auto s1 = cal_scores(points({{0.1f, 0}}), probs({{0.5, 0.5}}), lab_x, lab_p, 1);
  const auto s2 = cal_scores(points({{0.1f, 0}}), probs({{0.5, 0.5}}), lab_x, lab_p, 2);
  EXPECT_EQ(s1[0], 0.0);
  EXPECT_NEAR(s2[0], std::log(2.0) / 2.0, 1e-12);
}

TEST(QueryCal, NeedsLabeledPool) {
  StrategyInput in;
  in.candidate_indices = {0};
  in.candidate_embeddings = points({{1, 0}});
  in.candidate_probs = probs({{0.5, 0.5}});
  in.labeled_embeddings = FeatureMatrix(0, 2);
  EXPECT_EQ(code_of([&] { query_cal(in, 1, 3); }), ErrorCode::needs_warm_start);
}

TEST(KmeansPP, ExhaustionReturnsAll) {
  RowMatrix pts(4, 2);
  pts << 1, 0, 0, 1, 2, 2, -1, 0;
  Rng rng(1, 0, Purpose::test);
  auto picked = kmeanspp_select(pts, 4, rng);
  std::sort(picked.begin(), picked.end());
  EXPECT_EQ(picked, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(KmeansPP, ZeroMassNeverFirst) {
  RowMatrix pts(2, 3);
  pts << 0, 0, 0, 0.1, 0.2, -0.3;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s, 0, Purpose::test);
    EXPECT_EQ(kmeanspp_select(pts, 1, rng), (std::vector<std::size_t>{1}));
  }
}

TEST(KmeansPP, AllZeroFallsBackToUniform) {
  RowMatrix pts = RowMatrix::Zero(3, 2);
  std::map<std::size_t, int> counts;
  for (std::uint64_t s = 0; s < 3000; ++s) {
    Rng rng(s, 0, Purpose::test);
    const auto picked = kmeanspp_select(pts, 2, rng);
    ASSERT_NE(picked[0], picked[1]);
    ++counts[picked[0]];
  }
  for (const auto& [i, c] : counts) EXPECT_NEAR(c / 3000.0, 1.0 / 3.0, 0.04);
}

TEST(QueryBadge, ZeroGradientCandidateHeldBack) {
  StrategyInput in;
  in.candidate_indices = {5, 6, 7};
  RowMatrix g(3, 2);
  g << 0, 0, 0.2, -0.1, -0.3, 0.05;
  in.grad_embeddings = g;
  for (std::uint64_t s = 0; s < 300; ++s) {
    Rng r1(s, 1, Purpose::strategy);
    EXPECT_NE(query_badge(in, 1, r1).indices[0], 5u);
    Rng r2(s, 1, Purpose::strategy);
    const auto two = query_badge(in, 2, r2).indices;
    EXPECT_EQ(std::set<std::size_t>(two.begin(), two.end()), (std::set<std::size_t>{6, 7}));
  }
  Rng rng(0, 1, Purpose::strategy);
  auto all = query_badge(in, 3, rng).indices;
  EXPECT_EQ(all.back(), 5u);
}

TEST(QueryBadge, DeterministicAndRequiresGradients) {
  StrategyInput in;
  in.candidate_indices = iota_indices(30);
  Rng g(2, 0, Purpose::test);
  RowMatrix grads(30, 4);
  for (Eigen::Index i = 0; i < grads.size(); ++i) grads.data()[i] = g.normal();
  in.grad_embeddings = grads;
  Rng a(3, 1, Purpose::strategy), b(3, 1, Purpose::strategy);
  EXPECT_EQ(query_badge(in, 10, a).indices, query_badge(in, 10, b).indices);
  in.grad_embeddings.reset();
  EXPECT_EQ(code_of([&] { query_badge(in, 1, a); }), ErrorCode::invalid_input);
}

TEST(QueryRandom, UniformSingleDraws) {
  StrategyInput in;
  in.candidate_indices = {0, 1, 2, 3};
  std::array<int, 4> counts{};
  for (std::uint64_t s = 0; s < 10000; ++s) {
    Rng rng(s, 1, Purpose::strategy);
    ++counts[query_random(in, 1, rng).indices[0]];
  }
  // Multinomial sd is sqrt(0.25 * 0.75 / 10000) ~ 0.0043.
  for (int c : counts) EXPECT_NEAR(c / 10000.0, 0.25, 0.02);
  Rng rng(1, 1, Purpose::strategy);
  auto whole = query_random(in, 4, rng).indices;
  std::sort(whole.begin(), whole.end());
  EXPECT_EQ(whole, in.candidate_indices);
  Rng a(5, 2, Purpose::strategy), b(5, 2, Purpose::strategy);
  EXPECT_EQ(query_random(in, 2, a).indices, query_random(in, 2, b).indices);
}

// Every strategy returns b distinct candidates; entropy/coreset/cal match
// the brute-force oracles on small random instances.
TEST(StrategiesProperty, DistinctAndOracleEquivalent) {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(trial, 0, Purpose::test);
    const std::size_t n = 1 + rng.below(12), m = 1 + rng.below(6), d = 1 + rng.below(4), c = 2 + rng.below(3);
    const std::size_t b = rng.below(std::min<std::size_t>(3, n) + 1);
    StrategyInput in;
    in.candidate_indices = iota_indices(n);
    in.candidate_embeddings = FeatureMatrix(n, d);
    in.labeled_embeddings = FeatureMatrix(m, d);
    in.candidate_probs = ProbMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    in.labeled_probs = ProbMatrix(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(c));
    oracle::Rows cx, cp, lx, lp;
    auto fill = [&](FeatureMatrix& x, ProbMatrix& p, oracle::Rows& ox, oracle::Rows& op) {
      for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<double> row, pr;
        for (std::size_t j = 0; j < d; ++j) {
          x(i, j) = static_cast<float>(rng.normal());
          row.push_back(x(i, j));
        }
        double total = 0.0;
        for (std::size_t k = 0; k < c; ++k) total += (pr.emplace_back(rng.uniform() + 1e-3));
        for (std::size_t k = 0; k < c; ++k) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pr[k] /= total;
        ox.push_back(row);
        op.push_back(pr);
      }
    };
    fill(in.candidate_embeddings, in.candidate_probs, cx, cp);
    fill(in.labeled_embeddings, in.labeled_probs, lx, lp);
    in.grad_embeddings = RowMatrix::Random(static_cast<Eigen::Index>(n), 3);

    auto positions = [&](const QueryBatch& q) {
      std::vector<std::size_t> p;
      for (auto i : q.indices) p.push_back(i - 100);
      return p;
    };
    EXPECT_EQ(positions(query_entropy(in, b)), oracle::entropy_select(cp, b));
    EXPECT_EQ(positions(query_coreset(in, b)), oracle::coreset_select(cx, lx, b));
    EXPECT_EQ(positions(query_cal(in, b, 3)), oracle::cal_select(cx, cp, lx, lp, 3, b));
    for (auto kind : {StrategyKind::random, StrategyKind::entropy, StrategyKind::coreset,
                      StrategyKind::badge, StrategyKind::cal}) {
      Rng srng(trial, 1, Purpose::strategy);
      const auto q = select_batch(StrategySpec{kind, 3}, in, b, srng);
      ASSERT_EQ(q.indices.size(), b);
      std::set<std::size_t> u(q.indices.begin(), q.indices.end());
      EXPECT_EQ(u.size(), b);
      for (auto i : q.indices) EXPECT_TRUE(i >= 100 && i < 100 + n);
    }
    for (double s : cal_scores(in.candidate_embeddings, in.candidate_probs, in.labeled_embeddings,
                               in.labeled_probs, 3)) {
      EXPECT_GE(s, 0.0);
    }
  }
}

TEST(StrategiesProperty, EntropySelectionInvariantUnderMonotoneTransform) {
  Rng rng(8, 0, Purpose::test);
  std::vector<double> scores(50);
  for (auto& s : scores) s = rng.uniform();
  std::vector<double> transformed;
  for (double s : scores) transformed.push_back(std::exp(3 * s) - 7);
  EXPECT_EQ(top_b(scores, 10), top_b(transformed, 10));
}

}  // namespace
}  // namespace aglae
