#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "npss/score.hpp"
#include "oracles.hpp"

using namespace npss;

TEST(Phi, BerkJonesHandValues) {
  EXPECT_NEAR(phi_bj(0.5, 10, 10), 10.0 * std::log(2.0), 1e-9);
  EXPECT_EQ(phi_bj(0.3, 3, 10), 0.0);
  EXPECT_NEAR(phi_bj(0.1, 30, 100), 100.0 * (0.3 * std::log(3.0) + 0.7 * std::log(0.7 / 0.9)), 1e-9);
}

TEST(Phi, HigherCriticismHandValues) {
  EXPECT_NEAR(phi_hc(0.5, 60, 100), 2.0, 1e-9);
  EXPECT_EQ(phi_hc(0.2, 20, 100), 0.0);
  EXPECT_NEAR(phi_hc(0.1, 10, 50), 2.357023, 1e-6);
  EXPECT_NEAR(phi_hc(0.1, 10, 50), 5.0 / std::sqrt(4.5), 1e-9);
}

TEST(Phi, UnderSignificanceScoresZero) {
  EXPECT_EQ(phi_bj(0.5, 2, 10), 0.0);
  EXPECT_EQ(phi_hc(0.5, 2, 10), 0.0);
  EXPECT_EQ(phi_bj(0.2, 0, 10), 0.0);
}

TEST(Phi, BoundaryProportionsAreFinite) {
  EXPECT_NEAR(phi_bj(0.01, 7, 7), -7.0 * std::log(0.01), 1e-9);
  EXPECT_TRUE(std::isfinite(phi_bj(1e-9, 1, 1)));
}

TEST(Phi, RejectsBadArguments) {
  EXPECT_THROW(phi_bj(0.0, 1, 2), std::domain_error);
  EXPECT_THROW(phi_hc(1.0, 1, 2), std::domain_error);
  EXPECT_THROW(phi_bj(-0.1, 1, 2), std::domain_error);
  EXPECT_THROW(phi_bj(0.5, 1, 0), std::invalid_argument);
  EXPECT_THROW(phi_hc(0.5, 3, 2), std::invalid_argument);
}

TEST(Phi, MatchesOracleOnAGrid) {
  for (double a : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
    for (std::size_t n : {1u, 2u, 7u, 50u, 1000u}) {
      for (std::size_t m = 0; m <= n; m += std::max<std::size_t>(1, n / 13)) {
        EXPECT_NEAR(phi_bj(a, m, n), oracle::phi_bj(a, m, n), 1e-9 * std::max(1.0, oracle::phi_bj(a, m, n)));
        EXPECT_NEAR(phi_hc(a, m, n), oracle::phi_hc(a, m, n), 1e-9 * std::max(1.0, oracle::phi_hc(a, m, n)));
      }
    }
  }
}

TEST(Phi, CountFormMatchesDirectForm) {
  const auto logs = detail::log_table(400);
  for (double a : {0.002, 0.03, 0.25, 0.5}) {
    const detail::ThresholdTerms terms(a);
    for (std::size_t n = 1; n <= 400; n += 37) {
      for (std::size_t m = 0; m <= n; ++m) {
        for (auto f : {ScoreFunction::berk_jones, ScoreFunction::higher_criticism}) {
          const double direct = phi(f, a, m, n);
          EXPECT_NEAR(detail::phi_counts(f, terms, m, n, logs.data()), direct, 1e-10 * std::max(1.0, direct));
        }
      }
    }
  }
}

TEST(Phi, NonDecreasingInSignificantCount) {
  for (double a : {0.01, 0.1, 0.4}) {
    const std::size_t n = 60;
    for (auto f : {ScoreFunction::berk_jones, ScoreFunction::higher_criticism}) {
      double prev = 0.0;
      for (auto m = static_cast<std::size_t>(std::ceil(a * n)); m <= n; ++m) {
        const double v = phi(f, a, m, n);
        EXPECT_GE(v, prev);
        prev = v;
      }
    }
  }
}

TEST(Thresholds, DataDrivenNudgesDistinctValues) {
  const std::vector<double> p{0.3, 0.1, 0.3, 0.7, 1.0};
  const auto t = candidate_thresholds(p, AlphaPolicy::data_driven(0.5));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_GT(t[0], 0.1);
  EXPECT_NEAR(t[0], 0.1, 1e-12);
  EXPECT_NEAR(t[1], 0.3, 1e-12);
}

TEST(Thresholds, LinearGrid) {
  const auto t = candidate_thresholds(std::vector<double>{0.5}, AlphaPolicy::linear_grid(4, 0.4));
  ASSERT_EQ(t.size(), 4u);
  EXPECT_DOUBLE_EQ(t[0], 0.1);
  EXPECT_DOUBLE_EQ(t[3], 0.4);
  // alpha_max = 1 drops the threshold 1 itself
  EXPECT_EQ(candidate_thresholds(std::vector<double>{0.5}, AlphaPolicy::linear_grid(4, 1.0)).size(), 3u);
}

TEST(Thresholds, PolicyValidation) {
  EXPECT_THROW(AlphaPolicy::data_driven(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(AlphaPolicy::data_driven(1.5).validate(), std::invalid_argument);
  EXPECT_THROW(AlphaPolicy::linear_grid(1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(AlphaPolicy::linear_grid(2, 1.0).validate());
}

TEST(ScoreSubset, Examples) {
  const auto two = score_subset(std::vector<double>{0.01, 0.01}, ScoreFunction::berk_jones, AlphaPolicy{});
  EXPECT_NEAR(two.score, 2.0 * std::log(100.0), 1e-9);
  EXPECT_EQ(two.n, 2u);
  EXPECT_EQ(two.n_alpha, 2u);

  const auto ones = score_subset(std::vector<double>{1.0, 1.0}, ScoreFunction::berk_jones, AlphaPolicy{});
  EXPECT_EQ(ones.score, 0.0);
  EXPECT_EQ(ones.alpha_at_max, 0.5);

  const auto hc = score_subset(std::vector<double>{0.2}, ScoreFunction::higher_criticism, AlphaPolicy{});
  EXPECT_NEAR(hc.score, 2.0, 1e-9);
  EXPECT_NEAR(hc.alpha_at_max, 0.2, 1e-12);
}

TEST(ScoreSubset, RejectsEmptyOrInvalid) {
  EXPECT_THROW(score_subset(std::vector<double>{}, ScoreFunction::berk_jones, AlphaPolicy{}), std::invalid_argument);
  EXPECT_THROW(score_subset(std::vector<double>{0.0}, ScoreFunction::berk_jones, AlphaPolicy{}),
               std::invalid_argument);
  EXPECT_THROW(score_subset(std::vector<double>{1.5}, ScoreFunction::berk_jones, AlphaPolicy{}),
               std::invalid_argument);
}

TEST(ScoreSubset, AlphaMaxExcludesEverything) {
  const auto s = score_subset(std::vector<double>{0.6, 0.7}, ScoreFunction::berk_jones, AlphaPolicy::data_driven(0.3));
  EXPECT_EQ(s.score, 0.0);
  EXPECT_EQ(s.alpha_at_max, 0.3);
}

TEST(ScoreSubset, MatchesOracleOnRandomLists) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 30);
  for (int trial = 0; trial < 300; ++trial) {
    auto p = oracle::uniform_pvalues(1, len(rng), rng).values();
    if (trial % 3 == 0) p = oracle::lattice_pvalues(1, p.size(), 20, rng).values();
    for (auto f : {ScoreFunction::berk_jones, ScoreFunction::higher_criticism}) {
      EXPECT_NEAR(score_subset(p, f, AlphaPolicy{}).score, oracle::score(p, f), 1e-12);
    }
  }
}

TEST(ScoreSubset, NonNegativeAndZeroExactlyWithoutOverSignificance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = oracle::lattice_pvalues(1, 1 + trial % 12, 9, rng).values();
    for (auto f : {ScoreFunction::berk_jones, ScoreFunction::higher_criticism}) {
      const double s = score_subset(p, f, AlphaPolicy{}).score;
      EXPECT_GE(s, 0.0);
      bool over = false;
      for (double t : oracle::data_thresholds(p, 0.5)) {
        over = over || static_cast<double>(oracle::count_below(p, t)) > t * static_cast<double>(p.size());
      }
      EXPECT_EQ(s == 0.0, !over);
    }
  }
}

TEST(ScoreSubset, AddingOneNeverRaisesBerkJones) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = oracle::uniform_pvalues(1, 1 + trial % 15, rng).values();
    const double before = score_subset(p, ScoreFunction::berk_jones, AlphaPolicy{}).score;
    p.push_back(1.0);
    EXPECT_LE(score_subset(p, ScoreFunction::berk_jones, AlphaPolicy{}).score, before + 1e-12);
  }
}

TEST(ScoreSubset, DataDrivenDominatesDenseGrid) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(1, 20);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = oracle::uniform_pvalues(1, len(rng), rng).values();
    for (auto f : {ScoreFunction::berk_jones, ScoreFunction::higher_criticism}) {
      const double data = score_subset(p, f, AlphaPolicy::data_driven(0.5)).score;
      const double grid = score_subset(p, f, AlphaPolicy::linear_grid(100000, 0.5)).score;
      EXPECT_GE(data, grid - 1e-9);
      EXPECT_LE(data - grid, 0.05 * std::max(1.0, data));
    }
  }
}

TEST(ScoreFunctionNames, RoundTrip) {
  EXPECT_EQ(parse_score_function(to_string(ScoreFunction::berk_jones)), ScoreFunction::berk_jones);
  EXPECT_EQ(parse_score_function("hc"), ScoreFunction::higher_criticism);
  EXPECT_THROW(parse_score_function("ks"), std::invalid_argument);
}
