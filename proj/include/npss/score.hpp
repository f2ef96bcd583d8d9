#ifndef NPSS_SCORE_HPP_
#define NPSS_SCORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace npss {

/// Non-parametric scan statistic used to score a set of p-values.
enum class ScoreFunction { berk_jones, higher_criticism };

inline std::string_view to_string(ScoreFunction f) noexcept {
  return f == ScoreFunction::berk_jones ? "bj" : "hc";
}

inline ScoreFunction parse_score_function(std::string_view s) {
  if (s == "bj" || s == "BJ" || s == "berk_jones") return ScoreFunction::berk_jones;
  if (s == "hc" || s == "HC" || s == "higher_criticism") return ScoreFunction::higher_criticism;
  throw std::invalid_argument("unknown score function '" + std::string(s) + "' (expected bj or hc)");
}

/// How the significance thresholds alpha are enumerated.
///
/// data_driven: every distinct p-value present, nudged up by a relative
/// 1e-12 so that a p-value equal to the threshold is counted as significant.
/// linear_grid: grid_size evenly spaced values alpha_max * i / grid_size.
/// Either way only thresholds in (0, alpha_max] and strictly below 1 are used.
struct AlphaPolicy {
  enum class Mode { data_driven, linear_grid };

  Mode mode = Mode::data_driven;
  std::size_t grid_size = 100;
  double alpha_max = 0.5;

  static AlphaPolicy data_driven(double alpha_max = 0.5) {
    return {Mode::data_driven, 100, alpha_max};
  }
  static AlphaPolicy linear_grid(std::size_t grid_size, double alpha_max = 0.5) {
    return {Mode::linear_grid, grid_size, alpha_max};
  }

  void validate() const {
    if (!(alpha_max > 0.0 && alpha_max <= 1.0)) {
      throw std::invalid_argument("alpha_max must lie in (0, 1], got " + std::to_string(alpha_max));
    }
    if (mode == Mode::linear_grid && grid_size < 2) {
      throw std::invalid_argument("alpha grid size must be >= 2");
    }
  }
};

inline constexpr double kThresholdNudge = 1e-12;

/// Result of maximizing phi over the thresholds for one set of p-values.
struct SubsetScore {
  double score = 0.0;
  double alpha_at_max = 0.0;
  std::size_t n = 0;
  std::size_t n_alpha = 0;
};

namespace detail {

// KL(x, y) between Bernoulli proportions, with 0 ln 0 = 0.
inline double bernoulli_kl(double x, double y) noexcept {
  double kl = 0.0;
  if (x > 0.0) kl += x * std::log(x / y);
  if (x < 1.0) kl += (1.0 - x) * std::log((1.0 - x) / (1.0 - y));
  return kl;
}

inline double phi_bj(double alpha, double n_alpha, double n) noexcept {
  const double x = n_alpha / n;
  if (!(x > alpha)) return 0.0;
  return n * bernoulli_kl(x, alpha);
}

inline double phi_hc(double alpha, double n_alpha, double n) noexcept {
  const double excess = n_alpha - alpha * n;
  if (!(excess > 0.0)) return 0.0;
  return excess / std::sqrt(n * alpha * (1.0 - alpha));
}

inline double phi(ScoreFunction f, double alpha, double n_alpha, double n) noexcept {
  return f == ScoreFunction::berk_jones ? phi_bj(alpha, n_alpha, n) : phi_hc(alpha, n_alpha, n);
}

/// Per-threshold constants for scoring integer counts.
struct ThresholdTerms {
  double alpha;
  double log_alpha;
  double log_complement;  // ln(1 - alpha)
  double hc_scale;        // sqrt(alpha (1 - alpha))

  explicit ThresholdTerms(double a) noexcept
      : alpha(a), log_alpha(std::log(a)), log_complement(std::log1p(-a)), hc_scale(std::sqrt(a * (1.0 - a))) {}
};

/// phi for integer counts m <= n, with ln(i) looked up in `log_of` (indexable
/// up to n). Same value as phi() up to round-off.
inline double phi_counts(ScoreFunction f, const ThresholdTerms& t, std::size_t m, std::size_t n,
                         const double* log_of) noexcept {
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double excess = md - t.alpha * nd;
  if (!(excess > 0.0)) return 0.0;
  if (f == ScoreFunction::higher_criticism) return excess / (std::sqrt(nd) * t.hc_scale);
  const double log_n = log_of[n];
  double v = md * (log_of[m] - log_n - t.log_alpha);
  if (m < n) v += (nd - md) * (log_of[n - m] - log_n - t.log_complement);
  return v > 0.0 ? v : 0.0;
}

/// ln(0..n), with ln(0) stored as 0 (never read).
inline std::vector<double> log_table(std::size_t n) {
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) out[i] = std::log(static_cast<double>(i));
  return out;
}

inline void check_phi_args(double alpha, std::size_t n_alpha, std::size_t n) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (n == 0) throw std::invalid_argument("phi requires n >= 1");
  if (n_alpha > n) throw std::invalid_argument("phi requires n_alpha <= n");
}

}  // namespace detail

/// Berk-Jones: n * KL(n_alpha / n, alpha) when n_alpha / n > alpha, else 0.
inline double phi_bj(double alpha, std::size_t n_alpha, std::size_t n) {
  detail::check_phi_args(alpha, n_alpha, n);
  return detail::phi_bj(alpha, static_cast<double>(n_alpha), static_cast<double>(n));
}

/// Higher Criticism, positive part: (n_alpha - alpha n) / sqrt(n alpha (1 - alpha)).
inline double phi_hc(double alpha, std::size_t n_alpha, std::size_t n) {
  detail::check_phi_args(alpha, n_alpha, n);
  return detail::phi_hc(alpha, static_cast<double>(n_alpha), static_cast<double>(n));
}

inline double phi(ScoreFunction f, double alpha, std::size_t n_alpha, std::size_t n) {
  detail::check_phi_args(alpha, n_alpha, n);
  return detail::phi(f, alpha, static_cast<double>(n_alpha), static_cast<double>(n));
}

/// Ascending candidate thresholds for the given p-values (which need not be sorted).
inline std::vector<double> candidate_thresholds(std::span<const double> pvals, const AlphaPolicy& policy) {
  policy.validate();
  std::vector<double> out;
  const auto admissible = [&](double t) { return t > 0.0 && t <= policy.alpha_max && t < 1.0; };
  if (policy.mode == AlphaPolicy::Mode::linear_grid) {
    out.reserve(policy.grid_size);
    for (std::size_t i = 1; i <= policy.grid_size; ++i) {
      const double t = policy.alpha_max * static_cast<double>(i) / static_cast<double>(policy.grid_size);
      if (admissible(t)) out.push_back(t);
    }
    return out;
  }
  std::vector<double> sorted(pvals.begin(), pvals.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (double p : sorted) {
    const double t = p * (1.0 + kThresholdNudge);
    if (!admissible(t)) break;
    out.push_back(t);
  }
  return out;
}

/// F(S) = max over thresholds alpha of phi(alpha, N_alpha(S), N(S)), where
/// N_alpha counts p-values strictly below alpha.
///
/// With no admissible threshold the score is 0 and alpha_at_max = alpha_max.
/// Ties go to the smaller threshold.
inline SubsetScore score_subset(std::span<const double> pvals, ScoreFunction f, const AlphaPolicy& policy) {
  if (pvals.empty()) throw std::invalid_argument("score_subset: empty p-value list");
  for (double p : pvals) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("score_subset: p-value outside (0,1]");
  }
  std::vector<double> sorted(pvals.begin(), pvals.end());
  std::sort(sorted.begin(), sorted.end());
  const auto thresholds = candidate_thresholds(sorted, policy);

  SubsetScore best;
  best.n = sorted.size();
  if (thresholds.empty()) {
    best.alpha_at_max = policy.alpha_max;
    return best;
  }
  const double n = static_cast<double>(sorted.size());
  bool first = true;
  for (double t : thresholds) {
    const auto n_alpha =
        static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    const double s = detail::phi(f, t, static_cast<double>(n_alpha), n);
    if (first || s > best.score) {
      best.score = s;
      best.alpha_at_max = t;
      best.n_alpha = n_alpha;
      first = false;
    }
  }
  return best;
}

}  // namespace npss

#endif  // NPSS_SCORE_HPP_
