#ifndef NPSS_MATRIX_HPP_
#define NPSS_MATRIX_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace npss {

/// Malformed input file (bad header, ragged rows, unparsable token, empty).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input whose contents violate a data invariant (NaN, Inf, bad label).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions between two matrices.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix of activations: rows are samples, columns are nodes.
///
/// Holds both the background sample (Z x J) and test batches (M x J). Values
/// are always finite; optional row identifiers are unique.
class ActivationMatrix {
 public:
  ActivationMatrix() = default;

  ActivationMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  ActivationMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("activation matrix: expected " + std::to_string(rows_ * cols_) +
                       " values, got " + std::to_string(values_.size()));
    }
  }

  /// Builds a matrix from nested rows; all rows must have the same length.
  static ActivationMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t cols = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        throw ShapeError("activation matrix: ragged row " + std::to_string(r));
      }
      values.insert(values.end(), rows[r].begin(), rows[r].end());
    }
    return ActivationMatrix(rows.size(), cols, std::move(values));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }

  const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }
  void set_row_ids(std::vector<std::string> ids) {
    if (!ids.empty() && ids.size() != rows_) {
      throw ShapeError("row identifiers: expected " + std::to_string(rows_) + ", got " +
                       std::to_string(ids.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw DataError("duplicate row identifier '" + id + "'");
    }
    row_ids_ = std::move(ids);
  }

  /// Copies the given rows (in the given order) into a new matrix.
  ActivationMatrix select_rows(std::span<const std::size_t> indices) const {
    ActivationMatrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto src = row(indices[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  /// Throws DataError naming the first non-finite cell.
  void check_finite() const {
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_; ++c) {
        if (!std::isfinite((*this)(r, c))) {
          throw DataError("non-finite value at (row " + std::to_string(r) + ", col " +
                          std::to_string(c) + ")");
        }
      }
    }
  }

  friend bool operator==(const ActivationMatrix& a, const ActivationMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_ &&
           a.row_ids_ == b.row_ids_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<std::string> row_ids_;
};

/// Per-row ground truth: 1 = synthesized/anomalous, 0 = real.
using LabelVector = std::vector<std::uint8_t>;

inline std::size_t count_positives(const LabelVector& labels) noexcept {
  std::size_t n = 0;
  for (auto l : labels) n += (l != 0);
  return n;
}

}  // namespace npss

#endif  // NPSS_MATRIX_HPP_
