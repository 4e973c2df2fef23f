#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nacart {

/// Thrown for malformed or inconsistent data (dimension mismatch, non-finite
/// values, singular covariance blocks, unreadable files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for invalid parameters or configuration (out-of-range rho, unknown
/// method name, malformed config line).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense n x d feature matrix with an explicit missingness mask.
///
/// The mask is the source of truth: a cell with mask == true is missing and
/// its stored value is a quiet NaN placeholder that no operation reads.
/// Storage is row-major.
class IncompleteMatrix {
 public:
  IncompleteMatrix() = default;

  /// Fully observed matrix of zeros.
  IncompleteMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool missing(std::size_t i, std::size_t j) const { return mask_[i * cols_ + j] != 0; }

  /// Observed value of cell (i, j). Must not be called on a missing cell.
  double value(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::optional<double> at(std::size_t i, std::size_t j) const {
    if (missing(i, j)) return std::nullopt;
    return value(i, j);
  }

  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const std::uint8_t> row_mask(std::size_t i) const {
    return {mask_.data() + i * cols_, cols_};
  }

  /// Sets an observed value (clears the mask bit). Throws on non-finite input.
  void set(std::size_t i, std::size_t j, double v);
  void set_missing(std::size_t i, std::size_t j);

  std::size_t missing_count() const;
  std::size_t missing_count(std::size_t j) const;
  bool complete() const { return missing_count() == 0; }

  /// Column j copied out; missing cells are NaN.
  std::vector<double> column(std::size_t j) const;

  friend bool operator==(const IncompleteMatrix& a, const IncompleteMatrix& b);

  static constexpr double kPlaceholder = std::numeric_limits<double>::quiet_NaN();

 private:
  friend IncompleteMatrix make_incomplete(std::vector<double>, std::vector<std::uint8_t>,
                                          std::size_t, std::size_t);
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Builds a validated matrix from row-major values and mask (nonzero = missing).
/// Masked cells are canonicalized to the placeholder whatever they held.
IncompleteMatrix make_incomplete(std::vector<double> values, std::vector<std::uint8_t> mask,
                                 std::size_t rows, std::size_t cols);

/// Nested-vector convenience overload; rows of `values` and `mask` must agree in shape.
IncompleteMatrix make_incomplete(const std::vector<std::vector<double>>& values,
                                 const std::vector<std::vector<bool>>& mask);

/// Throws DataError if any entry of y is non-finite.
void check_target(std::span<const double> y);

struct ColumnStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t observed_count = 0;
};

/// Statistics over the observed cells of column j; nullopt when the column is
/// fully missing.
std::optional<ColumnStats> observed_stats(const IncompleteMatrix& m, std::size_t j);

/// n x 2d matrix: the original columns followed by d fully observed 0/1
/// indicator columns (1 where the original cell is missing).
IncompleteMatrix append_mask(const IncompleteMatrix& m);

}  // namespace nacart
