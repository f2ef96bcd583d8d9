#ifndef NPSS_LTSS_HPP_
#define NPSS_LTSS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "npss/pvalues.hpp"
#include "npss/score.hpp"

namespace npss {

/// A p-value matrix pre-processed for repeated LTSS passes.
///
/// Holds the ascending candidate thresholds of the policy (computed over the
/// whole matrix) and, for every cell, the index of the first threshold t with
/// p < t. A cell whose index equals thresholds().size() is never significant.
class RankedPValues {
 public:
  RankedPValues(const PValueMatrix& pvals, const AlphaPolicy& policy)
      : rows_(pvals.rows()),
        cols_(pvals.cols()),
        alpha_max_(policy.alpha_max),
        activation_(pvals.values().size()) {
    if (!rank_on_lattice(pvals, policy)) {
      thresholds_ = candidate_thresholds(pvals.values(), policy);
      for (std::size_t i = 0; i < activation_.size(); ++i) activation_[i] = first_exceeding(pvals.values()[i]);
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double alpha_max() const noexcept { return alpha_max_; }
  const std::vector<double>& thresholds() const noexcept { return thresholds_; }

  std::uint32_t activation(std::size_t r, std::size_t c) const noexcept {
    return activation_[r * cols_ + c];
  }

  RankedPValues transposed() const {
    RankedPValues t(*this);
    std::swap(t.rows_, t.cols_);
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) t.activation_[c * rows_ + r] = activation_[r * cols_ + c];
    }
    return t;
  }

 private:
  std::uint32_t first_exceeding(double p) const noexcept {
    return static_cast<std::uint32_t>(std::upper_bound(thresholds_.begin(), thresholds_.end(), p) -
                                      thresholds_.begin());
  }

  // p-values computed from a background of Z samples are k / (Z + 1); rank
  // them through the integer k instead of sorting every cell.
  bool rank_on_lattice(const PValueMatrix& pvals, const AlphaPolicy& policy) {
    const std::size_t z = pvals.background_size();
    if (z == 0 || policy.mode != AlphaPolicy::Mode::data_driven) return false;
    const double scale = static_cast<double>(z + 1);
    std::vector<double> value_of(z + 2, 0.0);
    std::vector<std::uint32_t> step(activation_.size());
    for (std::size_t i = 0; i < activation_.size(); ++i) {
      const double p = pvals.values()[i];
      const double k = std::round(p * scale);
      if (std::abs(p * scale - k) > 1e-9 || k < 1.0 || k > scale) return false;
      const auto ki = static_cast<std::size_t>(k);
      if (value_of[ki] != 0.0 && value_of[ki] != p) return false;
      value_of[ki] = p;
      step[i] = static_cast<std::uint32_t>(ki);
    }
    std::vector<double> present;
    for (double v : value_of) {
      if (v != 0.0) present.push_back(v);
    }
    thresholds_ = candidate_thresholds(present, policy);
    std::vector<std::uint32_t> index_of(z + 2);
    for (std::size_t k = 1; k < value_of.size(); ++k) {
      if (value_of[k] != 0.0) index_of[k] = first_exceeding(value_of[k]);
    }
    for (std::size_t i = 0; i < activation_.size(); ++i) activation_[i] = index_of[step[i]];
    return true;
  }

  std::size_t rows_;
  std::size_t cols_;
  double alpha_max_;
  std::vector<double> thresholds_;
  std::vector<std::uint32_t> activation_;
};

/// Best subset of elements (rows) found by one LTSS pass.
struct LtssResult {
  double score = 0.0;
  std::vector<std::size_t> subset;  // ascending
  double alpha_at_max = 0.0;
  std::size_t threshold_index = 0;
  std::size_t k = 0;  // prefix length, equal to subset.size()
};

namespace detail {

// Counting sort of rows by descending count, ascending row index within a count.
inline void order_by_count(std::span<const std::size_t> counts, std::size_t max_count,
                           std::vector<std::size_t>& start, std::vector<std::size_t>& order) {
  start.assign(max_count + 2, 0);
  for (auto n : counts) ++start[max_count - n + 1];
  std::partial_sum(start.begin(), start.end(), start.begin());
  order.resize(counts.size());
  for (std::size_t r = 0; r < counts.size(); ++r) order[start[max_count - counts[r]]++] = r;
}

struct LtssWorkspace {
  std::vector<std::uint32_t> gathered;
  std::vector<std::size_t> bucket_start;
  std::vector<std::size_t> fill;
  std::vector<std::uint32_t> cell_rows;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> hist;
  std::vector<std::size_t> above;
  std::vector<std::uint32_t> order;
  std::vector<std::uint32_t> position;
  std::vector<std::size_t> sort_start;
  std::vector<std::size_t> prefix;
};

}  // namespace detail

/// Rows ordered by descending count of significant cells (p < thresholds()[t])
/// over `cols`, ties broken by ascending row index.
inline std::vector<std::size_t> priority_order(const RankedPValues& p, std::span<const std::size_t> cols,
                                               std::size_t threshold_index) {
  std::vector<std::size_t> counts(p.rows(), 0);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    for (auto c : cols) counts[r] += (p.activation(r, c) <= threshold_index);
  }
  std::vector<std::size_t> start, order;
  detail::order_by_count(counts, cols.size(), start, order);
  return order;
}

/// Exact maximization of F(X x C) over non-empty row subsets X for fixed
/// columns C.
///
/// For each threshold the optimum is a prefix of priority_order() (the LTSS
/// property). Thresholds are swept in ascending order and each cell bumps its
/// row's count once, when it becomes significant. Inside a run of rows with
/// equal count phi is quasi-convex in the prefix length, so only the first
/// prefix and the end of every run need to be scored. Cost per call is
/// O(rows * |C| + T * min(rows, |C|)) with T the number of thresholds.
///
/// Ties in score go to the smaller prefix, then to the smaller threshold.
inline LtssResult optimize_rows(const RankedPValues& p, std::span<const std::size_t> cols, ScoreFunction f) {
  if (p.rows() == 0) throw std::invalid_argument("optimize_rows: no rows");
  if (cols.empty()) throw std::invalid_argument("optimize_rows: empty column set");
  for (auto c : cols) {
    if (c >= p.cols()) throw std::out_of_range("optimize_rows: column index out of range");
  }
  const auto& thresholds = p.thresholds();
  const std::size_t n_thresholds = thresholds.size();
  const std::size_t n_rows = p.rows();
  const std::size_t width = cols.size();
  thread_local detail::LtssWorkspace ws;

  LtssResult best;
  best.k = 1;
  best.alpha_at_max = n_thresholds > 0 ? thresholds.front() : p.alpha_max();
  std::size_t significant_cells = 0;  // cells with activation <= best threshold, once known

  if (n_thresholds > 0) {
    // bucket the significant cells (by row) on the threshold at which they
    // become significant
    ws.gathered.resize(n_rows * width);
    ws.bucket_start.assign(n_thresholds + 2, 0);
    for (std::size_t r = 0; r < n_rows; ++r) {
      std::uint32_t* out = ws.gathered.data() + r * width;
      for (std::size_t j = 0; j < width; ++j) {
        out[j] = p.activation(r, cols[j]);
        ++ws.bucket_start[out[j] + 1];
      }
    }
    std::partial_sum(ws.bucket_start.begin(), ws.bucket_start.end(), ws.bucket_start.begin());
    ws.cell_rows.resize(ws.bucket_start[n_thresholds]);
    ws.fill.assign(ws.bucket_start.begin(), ws.bucket_start.end() - 2);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::uint32_t* in = ws.gathered.data() + r * width;
      for (std::size_t j = 0; j < width; ++j) {
        if (in[j] < n_thresholds) ws.cell_rows[ws.fill[in[j]]++] = static_cast<std::uint32_t>(r);
      }
    }

    // `order` holds the rows sorted by descending count; rows with count > c
    // occupy order[0, above[c]). Incrementing a row swaps it to the front of
    // its block, so each update is O(1).
    auto& counts = ws.counts;
    auto& hist = ws.hist;
    auto& above = ws.above;
    auto& order = ws.order;
    auto& position = ws.position;
    counts.assign(n_rows, 0);
    hist.assign(width + 1, 0);
    above.assign(width + 1, 0);
    order.resize(n_rows);
    position.resize(n_rows);
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::iota(position.begin(), position.end(), std::uint32_t{0});
    hist[0] = n_rows;
    thread_local std::vector<double> log_table;
    if (log_table.size() <= n_rows * width) log_table = detail::log_table(2 * n_rows * width);
    const double* log_of = log_table.data();

    const auto consider = [&](double score, std::size_t k, std::size_t t) {
      if (score > best.score ||
          (score == best.score && (k < best.k || (k == best.k && t < best.threshold_index)))) {
        best.score = score;
        best.k = k;
        best.threshold_index = t;
      }
    };

    for (std::size_t t = 0; t < n_thresholds; ++t) {
      // thresholds adding no significant cell are dominated by the previous one
      if (ws.bucket_start[t] == ws.bucket_start[t + 1]) continue;
      for (std::size_t i = ws.bucket_start[t]; i < ws.bucket_start[t + 1]; ++i) {
        const std::uint32_t r = ws.cell_rows[i];
        const std::size_t c = counts[r]++;
        const std::uint32_t front = order[above[c]];
        std::swap(order[above[c]], order[position[r]]);
        std::swap(position[front], position[r]);
        ++above[c];
        --hist[c];
        ++hist[c + 1];
      }
      const detail::ThresholdTerms terms(thresholds[t]);
      std::size_t k = 0;
      std::size_t n_alpha = 0;
      while (k < n_rows) {
        const std::size_t c = counts[order[k]];
        // rows without significant cells only lower the score
        if (c == 0) break;
        const std::size_t run = hist[c];
        if (k == 0) consider(detail::phi_counts(f, terms, c, width, log_of), 1, t);
        k += run;
        n_alpha += run * c;
        consider(detail::phi_counts(f, terms, n_alpha, k * width, log_of), k, t);
      }
    }
    best.alpha_at_max = thresholds[best.threshold_index];
    significant_cells = ws.bucket_start[best.threshold_index + 1];
  }

  // rebuild the priority order at the winning threshold from its significant cells
  ws.counts.assign(n_rows, 0);
  for (std::size_t i = 0; i < significant_cells; ++i) ++ws.counts[ws.cell_rows[i]];
  detail::order_by_count(std::span<const std::size_t>(ws.counts.data(), n_rows), width, ws.sort_start, ws.prefix);
  best.subset.assign(ws.prefix.begin(), ws.prefix.begin() + static_cast<std::ptrdiff_t>(best.k));
  std::sort(best.subset.begin(), best.subset.end());
  return best;
}

/// Same as optimize_rows on the transposed matrix: best column subset given rows.
inline LtssResult optimize_cols(const RankedPValues& p, std::span<const std::size_t> rows, ScoreFunction f) {
  return optimize_rows(p.transposed(), rows, f);
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Convenience form: optimize over all rows of an already restricted matrix.
inline LtssResult optimize_rows(const PValueMatrix& restricted, ScoreFunction f, const AlphaPolicy& policy) {
  const RankedPValues ranked(restricted, policy);
  const auto cols = all_indices(restricted.cols());
  return optimize_rows(ranked, cols, f);
}

/// Convenience form: optimize over all columns of an already restricted matrix.
inline LtssResult optimize_cols(const PValueMatrix& restricted, ScoreFunction f, const AlphaPolicy& policy) {
  return optimize_rows(restricted.transposed(), f, policy);
}

}  // namespace npss

#endif  // NPSS_LTSS_HPP_
