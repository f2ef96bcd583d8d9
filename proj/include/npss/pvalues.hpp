#ifndef NPSS_PVALUES_HPP_
#define NPSS_PVALUES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "npss/matrix.hpp"

namespace npss {

/// M x J matrix of p-values in (0, 1].
///
/// When produced from a background of Z samples every entry is a multiple of
/// 1/(Z+1) and `background_size()` reports Z. Matrices built by hand (tests,
/// external tools) carry background_size 0.
class PValueMatrix {
 public:
  PValueMatrix() = default;

  PValueMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
               std::size_t background_size = 0)
      : rows_(rows), cols_(cols), background_size_(background_size), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("p-value matrix: expected " + std::to_string(rows_ * cols_) +
                       " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double p = values_[i];
      if (!(p > 0.0 && p <= 1.0)) {
        throw DataError("p-value out of (0,1] at (row " + std::to_string(i / cols_) + ", col " +
                        std::to_string(i % cols_) + ")");
      }
    }
  }

  static PValueMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const auto m = ActivationMatrix::from_rows(rows);
    return PValueMatrix(m.rows(), m.cols(), m.values());
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t background_size() const noexcept { return background_size_; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  const std::vector<double>& values() const noexcept { return values_; }

  PValueMatrix transposed() const {
    std::vector<double> t(values_.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) t[c * rows_ + r] = values_[r * cols_ + c];
    }
    return PValueMatrix(cols_, rows_, std::move(t), background_size_);
  }

  /// Sub-matrix on the given rows and columns, in the given order.
  PValueMatrix restrict(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    std::vector<double> out;
    out.reserve(rows.size() * cols.size());
    for (auto r : rows) {
      for (auto c : cols) out.push_back((*this)(r, c));
    }
    return PValueMatrix(rows.size(), cols.size(), std::move(out), background_size_);
  }

  /// Values of the cells in rows x cols, row-major.
  std::vector<double> gather(std::span<const std::size_t> rows,
                             std::span<const std::size_t> cols) const {
    std::vector<double> out;
    out.reserve(rows.size() * cols.size());
    for (auto r : rows) {
      for (auto c : cols) out.push_back((*this)(r, c));
    }
    return out;
  }

  /// Writes the p-values as an activation matrix (for CSV output).
  ActivationMatrix as_matrix() const { return ActivationMatrix(rows_, cols_, values_); }

  friend bool operator==(const PValueMatrix&, const PValueMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t background_size_ = 0;
  std::vector<double> values_;
};

/// Per-node null distributions built once from the background activations.
///
/// Each column is sorted ascending, so the count of background values >= a
/// is `Z - lower_bound(a)`. A uniform grid over each column's range narrows
/// the search to one grid cell. Immutable after construction and safe to
/// share between threads.
class BackgroundModel {
 public:
  explicit BackgroundModel(const ActivationMatrix& background)
      : size_(background.rows()),
        cols_(background.cols()),
        sorted_(background.rows() * background.cols()),
        columns_(background.cols()) {
    if (size_ == 0) throw std::invalid_argument("background must contain at least one sample (Z >= 1)");
    if (cols_ == 0) throw std::invalid_argument("background must contain at least one node");
    const std::size_t cells = std::max<std::size_t>(size_, 1);
    for (std::size_t c = 0; c < cols_; ++c) {
      auto col = column(c);
      for (std::size_t z = 0; z < size_; ++z) col[z] = background(z, c);
      std::sort(col.begin(), col.end());
      Grid& g = columns_[c];
      g.lo = col.front();
      g.step = (col.back() - col.front()) / static_cast<double>(cells);
      if (!(g.step > 0.0) || !std::isfinite(g.step)) continue;  // constant column: plain search
      g.edges.resize(cells + 1);
      g.start.resize(cells + 2);
      for (std::size_t b = 0; b <= cells; ++b) {
        g.edges[b] = g.lo + g.step * static_cast<double>(b);
        g.start[b] = lower_bound_index(col, 0, size_, g.edges[b]);
      }
      g.start[cells + 1] = size_;
    }
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t cols() const noexcept { return cols_; }

  /// Number of background values at node `col` that are >= `activation`.
  std::size_t count_at_least(std::size_t col, double activation) const noexcept {
    return size_ - below(col, activation);
  }

  double pvalue(std::size_t col, double activation) const noexcept {
    return static_cast<double>(1 + count_at_least(col, activation)) /
           static_cast<double>(size_ + 1);
  }

  PValueMatrix pvalues(const ActivationMatrix& test) const {
    if (test.cols() != cols_) {
      throw ShapeError("column count mismatch: background has " + std::to_string(cols_) +
                       " nodes, test has " + std::to_string(test.cols()));
    }
    std::vector<double> out(test.rows() * cols_);
    for (std::size_t r = 0; r < test.rows(); ++r) {
      for (std::size_t c = 0; c < cols_; ++c) out[r * cols_ + c] = pvalue(c, test(r, c));
    }
    return PValueMatrix(test.rows(), cols_, std::move(out), size_);
  }

 private:
  struct Grid {
    double lo = 0.0;
    double step = 0.0;
    std::vector<double> edges;       // edges[b] = lo + step * b
    std::vector<std::size_t> start;  // lower_bound(edges[b]); start.back() = Z
  };

  std::span<double> column(std::size_t c) noexcept { return {sorted_.data() + c * size_, size_}; }
  std::span<const double> column(std::size_t c) const noexcept {
    return {sorted_.data() + c * size_, size_};
  }

  static std::size_t lower_bound_index(std::span<const double> col, std::size_t first, std::size_t last,
                                       double a) noexcept {
    return static_cast<std::size_t>(std::lower_bound(col.begin() + static_cast<std::ptrdiff_t>(first),
                                                     col.begin() + static_cast<std::ptrdiff_t>(last), a) -
                                    col.begin());
  }

  // lower_bound(a) within the column: index of the first value >= a
  std::size_t below(std::size_t c, double a) const noexcept {
    const auto col = column(c);
    const Grid& g = columns_[c];
    if (g.edges.empty() || !(a > g.lo)) return lower_bound_index(col, 0, size_, a);
    const std::size_t cells = g.edges.size() - 1;
    const double pos = (a - g.lo) / g.step;
    std::size_t b = pos >= static_cast<double>(cells) ? cells : static_cast<std::size_t>(pos);
    // settle rounding so that edges[b] <= a < edges[b + 1]
    while (b > 0 && g.edges[b] > a) --b;
    while (b < cells && g.edges[b + 1] <= a) ++b;
    return lower_bound_index(col, g.start[b], g.start[b + 1], a);
  }

  std::size_t size_;
  std::size_t cols_;
  std::vector<double> sorted_;  // column-major
  std::vector<Grid> columns_;
};

/// p_ij = (1 + #{z : background(z, j) >= test(i, j)}) / (Z + 1).
inline PValueMatrix compute_pvalues(const ActivationMatrix& background, const ActivationMatrix& test) {
  if (background.cols() != test.cols()) {
    throw ShapeError("column count mismatch: background has " + std::to_string(background.cols()) +
                     " nodes, test has " + std::to_string(test.cols()));
  }
  return BackgroundModel(background).pvalues(test);
}

/// Flips the sign of every activation so that lower-tail deviations become
/// upper-tail ones. Zero maps to +0.
inline ActivationMatrix negate_for_lower_tail(const ActivationMatrix& m) {
  std::vector<double> out(m.values().size());
  std::transform(m.values().begin(), m.values().end(), out.begin(),
                 [](double v) { return v == 0.0 ? 0.0 : -v; });
  ActivationMatrix result(m.rows(), m.cols(), std::move(out));
  result.set_row_ids(m.row_ids());
  return result;
}

}  // namespace npss

#endif  // NPSS_PVALUES_HPP_
