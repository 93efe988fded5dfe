#pragma once

#include <array>
#include <cstddef>

namespace flowmon {

/// Fixed-size row-major 2-D array.
template <typename T, std::size_t Rows, std::size_t Cols>
class Grid {
 public:
  static constexpr std::size_t kRows = Rows;
  static constexpr std::size_t kCols = Cols;
  static constexpr std::size_t kSize = Rows * Cols;

  Grid() { cells_.fill(T{}); }
  explicit Grid(const T& fill) { cells_.fill(fill); }

  T& operator()(std::size_t row, std::size_t col) { return cells_[row * Cols + col]; }
  const T& operator()(std::size_t row, std::size_t col) const { return cells_[row * Cols + col]; }

  T& operator[](std::size_t i) { return cells_[i]; }
  const T& operator[](std::size_t i) const { return cells_[i]; }

  auto begin() { return cells_.begin(); }
  auto end() { return cells_.end(); }
  auto begin() const { return cells_.begin(); }
  auto end() const { return cells_.end(); }

  std::array<T, kSize>& data() { return cells_; }
  const std::array<T, kSize>& data() const { return cells_; }

  bool operator==(const Grid&) const = default;

 private:
  std::array<T, kSize> cells_;
};

}  // namespace flowmon
