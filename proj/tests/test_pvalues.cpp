#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "npss/pvalues.hpp"
#include "npss/rng.hpp"
#include "npss/synth.hpp"
#include "oracles.hpp"

using namespace npss;

namespace {

ActivationMatrix column(std::vector<double> v) {
  const auto n = v.size();
  return ActivationMatrix(n, 1, std::move(v));
}

ActivationMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool coarse) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> level(-4, 4);
  ActivationMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : m.row(r)) v = coarse ? 0.5 * level(rng) : normal(rng);
  }
  return m;
}

// sup |F_n(x) - x| for values on (0, 1]
double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max({d, static_cast<double>(i + 1) / n - p[i], p[i] - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST(PValues, HandExamples) {
  const auto bg = column({0.1, 0.2, 0.3, 0.4});
  const BackgroundModel model(bg);
  EXPECT_DOUBLE_EQ(model.pvalue(0, 0.5), 0.2);
  EXPECT_DOUBLE_EQ(model.pvalue(0, 0.05), 1.0);
  EXPECT_DOUBLE_EQ(model.pvalue(0, 0.25), 0.6);
  EXPECT_DOUBLE_EQ(model.pvalue(0, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(model.pvalue(0, 0.4), 0.4);
}

TEST(PValues, TiesCountAsAtLeast) {
  const auto bg = column({1.0, 1.0, 1.0, 2.0});
  const BackgroundModel model(bg);
  EXPECT_EQ(model.count_at_least(0, 1.0), 4u);
  EXPECT_EQ(model.count_at_least(0, 2.0), 1u);
  EXPECT_EQ(model.count_at_least(0, 2.5), 0u);
}

TEST(PValues, MatchesDirectCountExactly) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const bool coarse = trial % 2 == 0;
    const auto bg = random_matrix(50, 20, rng, coarse);
    const auto test = random_matrix(50, 20, rng, coarse);
    const auto p = compute_pvalues(bg, test);
    EXPECT_EQ(p.values(), oracle::pvalues(bg, test)) << "trial " << trial;
    EXPECT_EQ(p.background_size(), 50u);
  }
}

TEST(PValues, MatchesDirectCountOnAwkwardColumns) {
  // constant, heavy-tailed, single-sample and huge-range columns
  std::mt19937_64 rng(9);
  std::cauchy_distribution<double> cauchy;
  ActivationMatrix bg(40, 4);
  for (std::size_t z = 0; z < 40; ++z) {
    bg(z, 0) = 3.0;
    bg(z, 1) = cauchy(rng);
    bg(z, 2) = z % 2 ? 1.7e308 : -1.7e308;
    bg(z, 3) = static_cast<double>(z) * 1e-300;
  }
  ActivationMatrix test(200, 4);
  for (std::size_t r = 0; r < 200; ++r) {
    for (std::size_t c = 0; c < 4; ++c) test(r, c) = r % 7 == 0 ? bg(r % 40, c) : cauchy(rng) * (c == 3 ? 1e-298 : 1.0);
  }
  EXPECT_EQ(compute_pvalues(bg, test).values(), oracle::pvalues(bg, test));

  const auto single = column({0.7});
  EXPECT_EQ(compute_pvalues(single, column({0.6, 0.7, 0.8})).values(), (std::vector<double>{1.0, 1.0, 0.5}));
}

TEST(PValues, LatticeAndRange) {
  std::mt19937_64 rng(1);
  const auto bg = random_matrix(37, 5, rng, false);
  const auto p = compute_pvalues(bg, random_matrix(60, 5, rng, false));
  for (double v : p.values()) {
    EXPECT_GE(v, 1.0 / 38.0);
    EXPECT_LE(v, 1.0);
    EXPECT_LT(std::abs(v * 38.0 - std::round(v * 38.0)), 1e-9);
  }
}

TEST(PValues, MonotoneWithinColumn) {
  std::mt19937_64 rng(2);
  const BackgroundModel model(random_matrix(100, 3, rng, false));
  std::normal_distribution<double> normal;
  for (int i = 0; i < 1000; ++i) {
    double a = normal(rng), b = normal(rng);
    if (a > b) std::swap(a, b);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_LE(model.pvalue(c, b), model.pvalue(c, a));
  }
}

TEST(PValues, NullUniformity) {
  // fresh background per trial: the distance to uniform is a two-sample KS statistic
  const std::size_t m = 1000, z = 500;
  const double bound = 1.63 * std::sqrt(1.0 / static_cast<double>(m) + 1.0 / static_cast<double>(z)) +
                       1.0 / static_cast<double>(z + 1);
  int within = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    SynthSpec spec;
    spec.seed = 1000 + static_cast<std::uint64_t>(t);
    spec.z_background = z;
    spec.real_pool = m;
    spec.fake_pool = 1;
    spec.nodes = 3;
    spec.anomalous_nodes = 1;
    const auto data = generate(spec);
    const auto p = compute_pvalues(data.background, data.real_pool);
    std::vector<double> col;
    for (std::size_t r = 0; r < m; ++r) col.push_back(p(r, static_cast<std::size_t>(t) % 3));
    within += ks_uniform(col) <= bound;
  }
  EXPECT_GE(within, static_cast<int>(0.95 * trials));
}

TEST(PValues, ExpectedSignificantFractionUnderNull) {
  // mean of N_alpha / N over null test sets stays near alpha
  const std::size_t n = 50;
  SynthSpec spec;
  spec.z_background = 500;
  spec.real_pool = 1000 * n / 10;
  spec.fake_pool = 1;
  spec.nodes = 10;
  spec.anomalous_nodes = 1;
  const auto data = generate(spec);
  const auto p = compute_pvalues(data.background, data.real_pool);
  for (double a : {0.05, 0.1, 0.5}) {
    double sum = 0.0;
    for (std::size_t trial = 0; trial < 1000; ++trial) {
      std::size_t below = 0;
      for (std::size_t i = 0; i < n; ++i) below += p.values()[trial * n + i] < a;
      sum += static_cast<double>(below) / static_cast<double>(n);
    }
    EXPECT_NEAR(sum / 1000.0, a, 3.0 * std::sqrt(a * (1.0 - a) / static_cast<double>(n)));
  }
}

TEST(PValues, Errors) {
  const auto bg = ActivationMatrix(4, 2, 0.0);
  EXPECT_THROW(compute_pvalues(bg, ActivationMatrix(3, 3, 0.0)), ShapeError);
  EXPECT_THROW(BackgroundModel(ActivationMatrix(0, 2)), std::invalid_argument);
  EXPECT_THROW(PValueMatrix(1, 2, {0.5, 0.0}), DataError);
  EXPECT_THROW(PValueMatrix(1, 2, {0.5, 1.5}), DataError);
  EXPECT_THROW(PValueMatrix(2, 2, {0.5, 0.5}), ShapeError);
}

TEST(PValueMatrix, TransposeAndRestrict) {
  const auto p = PValueMatrix::from_rows({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}});
  const auto t = p.transposed();
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t(2, 1), 0.6);
  EXPECT_EQ(t.transposed(), p);
  const std::vector<std::size_t> rows{1}, cols{2, 0};
  const auto r = p.restrict(rows, cols);
  EXPECT_EQ(r.values(), (std::vector<double>{0.6, 0.4}));
}

TEST(NegateForLowerTail, Examples) {
  const auto m = ActivationMatrix::from_rows({{1.0, -2.0, 0.0}});
  const auto n = negate_for_lower_tail(m);
  EXPECT_EQ(n.values()[0], -1.0);
  EXPECT_EQ(n.values()[1], 2.0);
  EXPECT_FALSE(std::signbit(n.values()[2]));
  EXPECT_FALSE(std::signbit(negate_for_lower_tail(ActivationMatrix::from_rows({{-0.0}})).values()[0]));
  EXPECT_EQ(negate_for_lower_tail(n), m);
}

TEST(NegateForLowerTail, TurnsLowValuesSignificant) {
  const auto bg = column({0.1, 0.2, 0.3, 0.4});
  const auto p = compute_pvalues(negate_for_lower_tail(bg), negate_for_lower_tail(column({0.05})));
  EXPECT_DOUBLE_EQ(p(0, 0), 0.2);
}
