#ifndef NPSS_SCAN_HPP_
#define NPSS_SCAN_HPP_

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "npss/ltss.hpp"
#include "npss/parallel.hpp"
#include "npss/pvalues.hpp"
#include "npss/rng.hpp"
#include "npss/score.hpp"

namespace npss {

enum class ScanMode { group, individual };

inline std::string_view to_string(ScanMode m) noexcept {
  return m == ScanMode::group ? "group" : "individual";
}

inline ScanMode parse_scan_mode(std::string_view s) {
  if (s == "group") return ScanMode::group;
  if (s == "individual") return ScanMode::individual;
  throw std::invalid_argument("unknown scan mode '" + std::string(s) + "' (expected group or individual)");
}

struct ScanConfig {
  ScoreFunction score_function = ScoreFunction::berk_jones;
  AlphaPolicy alpha_policy{};
  std::size_t restarts = 10;
  std::size_t max_iterations = 100;
  double convergence_epsilon = 1e-9;
  std::uint64_t seed = 0;
  ScanMode mode = ScanMode::group;
  std::size_t threads = 1;  // workers for restarts; results do not depend on it

  void validate() const {
    alpha_policy.validate();
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(convergence_epsilon > 0.0)) throw std::invalid_argument("convergence_epsilon must be > 0");
  }
};

struct RestartTrace {
  double score = 0.0;
  std::size_t iterations = 0;

  friend bool operator==(const RestartTrace&, const RestartTrace&) = default;
};

struct ScanResult {
  ScanMode mode = ScanMode::group;
  ScoreFunction score_function = ScoreFunction::berk_jones;
  double score = 0.0;
  std::vector<std::size_t> row_subset;
  std::vector<std::size_t> col_subset;
  double alpha_at_max = 0.0;
  std::vector<RestartTrace> restart_traces;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ScanResult&, const ScanResult&) = default;
};

/// Outcome of one iterative-ascent run.
struct RestartOutcome {
  double score = 0.0;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  double alpha_at_max = 0.0;
  std::size_t iterations = 0;
  std::vector<double> half_step_scores;  // after each rows / cols step
};

/// A p-value matrix ranked once for both scan directions.
class ScanProblem {
 public:
  ScanProblem(const PValueMatrix& pvals, const AlphaPolicy& policy)
      : by_row_(pvals, policy), by_col_(by_row_.transposed()) {
    if (pvals.rows() == 0 || pvals.cols() == 0) throw std::invalid_argument("scan: empty p-value matrix");
  }

  std::size_t rows() const noexcept { return by_row_.rows(); }
  std::size_t cols() const noexcept { return by_row_.cols(); }

  LtssResult best_rows(std::span<const std::size_t> cols, ScoreFunction f) const {
    return optimize_rows(by_row_, cols, f);
  }
  LtssResult best_cols(std::span<const std::size_t> rows, ScoreFunction f) const {
    return optimize_rows(by_col_, rows, f);
  }

 private:
  RankedPValues by_row_;
  RankedPValues by_col_;
};

/// Memo of LTSS passes shared by the restarts of one scan.
///
/// Each pass is a pure function of the subset it conditions on, so restarts
/// whose ascent paths meet reuse the earlier result instead of recomputing it.
class AscentCache {
 public:
  template <typename Compute>
  LtssResult rows_given_cols(const std::vector<std::size_t>& cols, Compute&& compute) {
    return lookup(by_cols_, cols, compute);
  }
  template <typename Compute>
  LtssResult cols_given_rows(const std::vector<std::size_t>& rows, Compute&& compute) {
    return lookup(by_rows_, rows, compute);
  }

 private:
  using Map = std::map<std::vector<std::size_t>, LtssResult>;

  template <typename Compute>
  LtssResult lookup(Map& map, const std::vector<std::size_t>& key, Compute& compute) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = map.find(key); it != map.end()) return it->second;
    }
    auto result = compute();
    std::lock_guard lock(mutex_);
    map.emplace(key, result);
    return result;
  }

  std::mutex mutex_;
  Map by_cols_;
  Map by_rows_;
};

/// Uniformly random non-empty subset of {0..n-1}: each index kept with
/// probability 1/2, redrawn while empty.
inline std::vector<std::size_t> random_nonempty_subset(std::size_t n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::size_t> out;
  while (out.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (coin(rng)) out.push_back(i);
    }
  }
  return out;
}

/// Alternates exact row and column optimization from a random column subset
/// until the score improves by no more than convergence_epsilon over a full
/// (rows, cols) round, or max_iterations rounds have run.
inline RestartOutcome single_restart(const ScanProblem& problem, const ScanConfig& config, Rng& rng,
                                     AscentCache* cache = nullptr) {
  const auto f = config.score_function;
  RestartOutcome out;
  out.cols = random_nonempty_subset(problem.cols(), rng);
  double previous = -1.0;
  while (out.iterations < config.max_iterations) {
    auto by_rows = cache ? cache->rows_given_cols(out.cols, [&] { return problem.best_rows(out.cols, f); })
                         : problem.best_rows(out.cols, f);
    auto by_cols = cache ? cache->cols_given_rows(by_rows.subset, [&] { return problem.best_cols(by_rows.subset, f); })
                         : problem.best_cols(by_rows.subset, f);
    ++out.iterations;

    const double last = out.half_step_scores.empty() ? 0.0 : out.half_step_scores.back();
    const auto drops = [](double from, double to) { return to < from - 1e-9 * std::max(1.0, from); };
    if (drops(last, by_rows.score) || drops(by_rows.score, by_cols.score)) {
      throw std::logic_error("iterative ascent decreased the score");
    }
    out.half_step_scores.push_back(by_rows.score);
    out.half_step_scores.push_back(by_cols.score);

    out.rows = std::move(by_rows.subset);
    out.cols = std::move(by_cols.subset);
    out.score = by_cols.score;
    out.alpha_at_max = by_cols.alpha_at_max;
    if (out.score - previous <= config.convergence_epsilon) break;
    previous = out.score;
  }
  return out;
}

/// Restart `index` of a scan seeded with `config.seed`.
inline RestartOutcome single_restart(const ScanProblem& problem, const ScanConfig& config, std::size_t index,
                                     AscentCache* cache = nullptr) {
  auto rng = make_rng(config.seed, {index});
  return single_restart(problem, config, rng, cache);
}

inline RestartOutcome single_restart(const PValueMatrix& pvals, const ScanConfig& config, std::size_t index = 0) {
  config.validate();
  return single_restart(ScanProblem(pvals, config.alpha_policy), config, index);
}

/// Group scan: best of config.restarts independent restarts. Ties go to the
/// lowest restart index.
inline ScanResult scan(const ScanProblem& problem, const ScanConfig& config) {
  config.validate();
  if (config.mode != ScanMode::group) throw std::invalid_argument("scan requires group mode");
  const auto start = std::chrono::steady_clock::now();

  std::vector<RestartOutcome> outcomes(config.restarts);
  AscentCache cache;
  parallel_for(config.restarts, config.threads,
               [&](std::size_t i) { outcomes[i] = single_restart(problem, config, i, &cache); });

  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].score > outcomes[best].score) best = i;
  }

  ScanResult result;
  result.mode = ScanMode::group;
  result.score_function = config.score_function;
  result.score = outcomes[best].score;
  result.row_subset = outcomes[best].rows;
  result.col_subset = outcomes[best].cols;
  result.alpha_at_max = outcomes[best].alpha_at_max;
  result.seed = config.seed;
  result.restart_traces.reserve(outcomes.size());
  for (const auto& o : outcomes) result.restart_traces.push_back({o.score, o.iterations});
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

inline ScanResult scan(const PValueMatrix& pvals, const ScanConfig& config) {
  config.validate();
  return scan(ScanProblem(pvals, config.alpha_policy), config);
}

struct IndividualScore {
  std::size_t row = 0;
  double score = 0.0;
  std::vector<std::size_t> col_subset;
  double alpha_at_max = 0.0;
};

/// Scores every test row on its own: best column subset for the 1 x J
/// restriction. One LTSS pass is exact here, so no restarts are needed.
inline std::vector<IndividualScore> individual_scan(const ScanProblem& problem, const ScanConfig& config) {
  config.validate();
  if (config.mode != ScanMode::individual) throw std::invalid_argument("individual_scan requires individual mode");
  std::vector<IndividualScore> out(problem.rows());
  parallel_for(problem.rows(), config.threads, [&](std::size_t r) {
    const std::size_t row[] = {r};
    auto best = problem.best_cols(row, config.score_function);
    out[r] = {r, best.score, std::move(best.subset), best.alpha_at_max};
  });
  return out;
}

inline std::vector<IndividualScore> individual_scan(const PValueMatrix& pvals, const ScanConfig& config) {
  config.validate();
  return individual_scan(ScanProblem(pvals, config.alpha_policy), config);
}

}  // namespace npss

#endif  // NPSS_SCAN_HPP_
