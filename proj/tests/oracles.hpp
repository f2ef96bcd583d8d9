#ifndef NPSS_TESTS_ORACLES_HPP_
#define NPSS_TESTS_ORACLES_HPP_

// Slow reference implementations, written from the definitions and kept
// free of the library's shortcuts (no sorting tricks, no log tables, no
// threshold ranking).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <set>
#include <vector>

#include "npss/npss.hpp"

namespace oracle {

// p = (1 + #{z : bg(z, j) >= a}) / (Z + 1), counted one background value at a time.
inline double pvalue(const npss::ActivationMatrix& bg, std::size_t col, double a) {
  std::size_t count = 0;
  for (std::size_t z = 0; z < bg.rows(); ++z) {
    if (bg(z, col) >= a) ++count;
  }
  return static_cast<double>(1 + count) / static_cast<double>(bg.rows() + 1);
}

inline std::vector<double> pvalues(const npss::ActivationMatrix& bg, const npss::ActivationMatrix& test) {
  std::vector<double> out;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    for (std::size_t c = 0; c < test.cols(); ++c) out.push_back(pvalue(bg, c, test(r, c)));
  }
  return out;
}

// n KL(m/n, a) written as m ln(m / (n a)) + (n - m) ln((n - m) / (n (1 - a))), in long double.
inline double phi_bj(double a, std::size_t m, std::size_t n) {
  const long double al = a, ml = m, nl = n;
  if (!(ml / nl > al)) return 0.0;
  long double v = 0.0L;
  if (m > 0) v += ml * std::log(ml / (nl * al));
  if (m < n) v += (nl - ml) * std::log((nl - ml) / (nl * (1.0L - al)));
  return static_cast<double>(v);
}

inline double phi_hc(double a, std::size_t m, std::size_t n) {
  const long double al = a, ml = m, nl = n;
  if (!(ml > al * nl)) return 0.0;
  return static_cast<double>((ml - al * nl) / std::sqrt(nl * al * (1.0L - al)));
}

inline double phi(npss::ScoreFunction f, double a, std::size_t m, std::size_t n) {
  return f == npss::ScoreFunction::berk_jones ? phi_bj(a, m, n) : phi_hc(a, m, n);
}

inline std::size_t count_below(const std::vector<double>& p, double t) {
  std::size_t m = 0;
  for (double v : p) m += v < t;
  return m;
}

// Candidate thresholds: each distinct p-value nudged up by a relative 1e-12,
// kept if it does not exceed alpha_max and stays below 1.
inline std::vector<double> data_thresholds(const std::vector<double>& p, double alpha_max) {
  std::set<double> distinct(p.begin(), p.end());
  std::vector<double> out;
  for (double v : distinct) {
    const double t = v * (1.0 + 1e-12);
    if (t <= alpha_max && t < 1.0) out.push_back(t);
  }
  return out;
}

// max over the data-driven thresholds of phi; 0 when there are none.
inline double score(const std::vector<double>& p, npss::ScoreFunction f, double alpha_max = 0.5) {
  double best = 0.0;
  for (double t : data_thresholds(p, alpha_max)) best = std::max(best, oracle::phi(f, t, count_below(p, t), p.size()));
  return best;
}

inline std::vector<double> cells(const npss::PValueMatrix& p, const std::vector<std::size_t>& rows,
                                 const std::vector<std::size_t>& cols) {
  std::vector<double> out;
  for (auto r : rows) {
    for (auto c : cols) out.push_back(p(r, c));
  }
  return out;
}

inline std::vector<std::size_t> members(unsigned mask, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask & (1u << i)) out.push_back(i);
  }
  return out;
}

// Best score over every non-empty row subset for the fixed columns.
inline double best_rows(const npss::PValueMatrix& p, const std::vector<std::size_t>& cols, npss::ScoreFunction f,
                        double alpha_max = 0.5) {
  double best = 0.0;
  for (unsigned mask = 1; mask < (1u << p.rows()); ++mask) {
    best = std::max(best, score(cells(p, members(mask, p.rows()), cols), f, alpha_max));
  }
  return best;
}

// Best score over every pair of non-empty row and column subsets.
inline double best_block(const npss::PValueMatrix& p, npss::ScoreFunction f, double alpha_max = 0.5) {
  double best = 0.0;
  for (unsigned cm = 1; cm < (1u << p.cols()); ++cm) {
    best = std::max(best, best_rows(p, members(cm, p.cols()), f, alpha_max));
  }
  return best;
}

inline std::vector<std::size_t> flip(std::vector<std::size_t> set, std::size_t i) {
  auto it = std::find(set.begin(), set.end(), i);
  if (it == set.end()) {
    set.insert(std::upper_bound(set.begin(), set.end(), i), i);
  } else {
    set.erase(it);
  }
  return set;
}

// Largest gain from adding or removing one row or one column of (rows, cols).
inline double best_single_flip_gain(const npss::PValueMatrix& p, const std::vector<std::size_t>& rows,
                                    const std::vector<std::size_t>& cols, npss::ScoreFunction f,
                                    double alpha_max = 0.5) {
  const double base = score(cells(p, rows, cols), f, alpha_max);
  double gain = -1e300;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const auto changed = flip(rows, r);
    if (!changed.empty()) gain = std::max(gain, score(cells(p, changed, cols), f, alpha_max) - base);
  }
  for (std::size_t c = 0; c < p.cols(); ++c) {
    const auto changed = flip(cols, c);
    if (!changed.empty()) gain = std::max(gain, score(cells(p, rows, changed), f, alpha_max) - base);
  }
  return gain;
}

// Fraction of (pos, neg) pairs with pos > neg, ties counted 1/2.
inline double auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  double wins = 0.0;
  for (double a : pos) {
    for (double b : neg) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Random p-value matrix on the lattice k / (z + 1), so ties are common.
inline npss::PValueMatrix lattice_pvalues(std::size_t rows, std::size_t cols, std::size_t z, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> k(1, z + 1);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = static_cast<double>(k(rng)) / static_cast<double>(z + 1);
  return npss::PValueMatrix(rows, cols, std::move(v), z);
}

// Random p-values in (0, 1] with no lattice structure.
inline npss::PValueMatrix uniform_pvalues(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = 1.0 - u(rng);
  return npss::PValueMatrix(rows, cols, std::move(v));
}

inline double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end()), un = sa;
  un.insert(sb.begin(), sb.end());
  std::size_t inter = 0;
  for (auto x : sa) inter += sb.count(x);
  return un.empty() ? 1.0 : static_cast<double>(inter) / static_cast<double>(un.size());
}

}  // namespace oracle

#endif  // NPSS_TESTS_ORACLES_HPP_
