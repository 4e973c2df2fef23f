#include "nacart/core.hpp"

#include <algorithm>
#include <cmath>

namespace nacart {

IncompleteMatrix::IncompleteMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0), mask_(rows * cols, 0) {}

void IncompleteMatrix::set(std::size_t i, std::size_t j, double v) {
  if (!std::isfinite(v)) throw DataError("non-finite value assigned to an observed cell");
  values_[i * cols_ + j] = v;
  mask_[i * cols_ + j] = 0;
}

void IncompleteMatrix::set_missing(std::size_t i, std::size_t j) {
  values_[i * cols_ + j] = kPlaceholder;
  mask_[i * cols_ + j] = 1;
}

std::size_t IncompleteMatrix::missing_count() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::size_t IncompleteMatrix::missing_count(std::size_t j) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < rows_; ++i) c += mask_[i * cols_ + j];
  return c;
}

std::vector<double> IncompleteMatrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = values_[i * cols_ + j];
  return out;
}

bool operator==(const IncompleteMatrix& a, const IncompleteMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.mask_ != b.mask_) return false;
  for (std::size_t k = 0; k < a.values_.size(); ++k) {
    if (a.mask_[k] == 0 && a.values_[k] != b.values_[k]) return false;
  }
  return true;
}

IncompleteMatrix make_incomplete(std::vector<double> values, std::vector<std::uint8_t> mask,
                                 std::size_t rows, std::size_t cols) {
  if (values.size() != rows * cols || mask.size() != rows * cols) {
    throw DataError("make_incomplete: values and mask must both be " + std::to_string(rows) +
                    "x" + std::to_string(cols));
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (mask[k] != 0) {
      mask[k] = 1;
      values[k] = IncompleteMatrix::kPlaceholder;
    } else if (!std::isfinite(values[k])) {
      throw DataError("make_incomplete: non-finite observed cell at row " +
                      std::to_string(k / cols) + ", column " + std::to_string(k % cols + 1));
    }
  }
  IncompleteMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.values_ = std::move(values);
  m.mask_ = std::move(mask);
  return m;
}

IncompleteMatrix make_incomplete(const std::vector<std::vector<double>>& values,
                                 const std::vector<std::vector<bool>>& mask) {
  if (values.size() != mask.size()) throw DataError("make_incomplete: row count mismatch");
  const std::size_t rows = values.size();
  const std::size_t cols = rows ? values[0].size() : 0;
  std::vector<double> flat;
  std::vector<std::uint8_t> flat_mask;
  flat.reserve(rows * cols);
  flat_mask.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (values[i].size() != cols || mask[i].size() != cols) {
      throw DataError("make_incomplete: ragged rows or mask/value column mismatch");
    }
    flat.insert(flat.end(), values[i].begin(), values[i].end());
    for (bool b : mask[i]) flat_mask.push_back(b ? 1 : 0);
  }
  return make_incomplete(std::move(flat), std::move(flat_mask), rows, cols);
}

void check_target(std::span<const double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw DataError("target has a non-finite entry at row " + std::to_string(i));
  }
}

std::optional<ColumnStats> observed_stats(const IncompleteMatrix& m, std::size_t j) {
  ColumnStats s;
  double sum = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m.missing(i, j)) continue;
    const double v = m.value(i, j);
    if (s.observed_count == 0) {
      s.min = s.max = v;
    } else {
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    sum += v;
    ++s.observed_count;
  }
  if (s.observed_count == 0) return std::nullopt;
  s.mean = sum / static_cast<double>(s.observed_count);
  // rounding can push the mean one ulp outside [min, max] on constant columns
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

IncompleteMatrix append_mask(const IncompleteMatrix& m) {
  const std::size_t d = m.cols();
  IncompleteMatrix out(m.rows(), 2 * d);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (m.missing(i, j)) {
        out.set_missing(i, j);
        out.set(i, d + j, 1.0);
      } else {
        out.set(i, j, m.value(i, j));
        out.set(i, d + j, 0.0);
      }
    }
  }
  return out;
}

}  // namespace nacart
