#pragma once

#include <cstddef>
#include <vector>

#include "flowmon/thermal/frame.hpp"

namespace flowmon::thermal {

inline constexpr std::size_t kMinClusterPixels = 4;

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct Point {
  double row = 0.0;
  double col = 0.0;
  bool operator==(const Point&) const = default;
};

struct BoundingBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;
  bool operator==(const BoundingBox&) const = default;

  bool contains(const Point& p) const {
    return p.row >= min_row && p.row <= max_row && p.col >= min_col && p.col <= max_col;
  }
};

/// An 8-connected warm region. `pixels` is in row-major order.
struct Cluster {
  std::vector<Cell> pixels;
  double mass = 0.0;
  Point centroid;
  BoundingBox bbox;
  bool operator==(const Cluster&) const = default;
};

/// Flood-fills the 8-connected components of `mask`, drops components
/// smaller than kMinClusterPixels and returns the rest ordered by the
/// top-left corner of their bounding box. Centroids are excess-weighted.
/// Throws InputError if some cell has positive excess but is not masked.
std::vector<Cluster> find_clusters(const Mask& mask, const UpscaledGrid& excess);

}  // namespace flowmon::thermal
