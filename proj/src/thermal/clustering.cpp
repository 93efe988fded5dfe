#include "flowmon/thermal/clustering.hpp"

#include <algorithm>
#include <array>
#include <tuple>

#include "flowmon/common/errors.hpp"

namespace flowmon::thermal {

namespace {

constexpr int kN = static_cast<int>(kUpscaledSize);

Cluster fill_from(const Mask& mask, const UpscaledGrid& excess, Grid<bool, kUpscaledSize, kUpscaledSize>& seen,
                  Cell seed) {
  Cluster cluster;
  cluster.bbox = {seed.row, seed.col, seed.row, seed.col};

  std::vector<Cell> stack{seed};
  seen(seed.row, seed.col) = true;
  double sum_r = 0.0;
  double sum_c = 0.0;

  while (!stack.empty()) {
    const Cell cell = stack.back();
    stack.pop_back();
    cluster.pixels.push_back(cell);

    const double w = excess(cell.row, cell.col);
    cluster.mass += w;
    sum_r += w * cell.row;
    sum_c += w * cell.col;
    cluster.bbox.min_row = std::min(cluster.bbox.min_row, cell.row);
    cluster.bbox.min_col = std::min(cluster.bbox.min_col, cell.col);
    cluster.bbox.max_row = std::max(cluster.bbox.max_row, cell.row);
    cluster.bbox.max_col = std::max(cluster.bbox.max_col, cell.col);

    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = cell.row + dr;
        const int c = cell.col + dc;
        if ((dr == 0 && dc == 0) || r < 0 || c < 0 || r >= kN || c >= kN) continue;
        if (!mask(r, c) || seen(r, c)) continue;
        seen(r, c) = true;
        stack.push_back({r, c});
      }
    }
  }

  std::sort(cluster.pixels.begin(), cluster.pixels.end());
  if (cluster.mass > 0.0) {
    cluster.centroid = {sum_r / cluster.mass, sum_c / cluster.mass};
  }
  return cluster;
}

}  // namespace

std::vector<Cluster> find_clusters(const Mask& mask, const UpscaledGrid& excess) {
  for (std::size_t i = 0; i < Mask::kSize; ++i) {
    if (excess[i] < 0.0 || (excess[i] > 0.0 && !mask[i])) {
      throw InputError("excess grid inconsistent with mask");
    }
  }

  Grid<bool, kUpscaledSize, kUpscaledSize> seen;
  std::vector<Cluster> clusters;
  for (int r = 0; r < kN; ++r) {
    for (int c = 0; c < kN; ++c) {
      if (!mask(r, c) || seen(r, c)) continue;
      Cluster cluster = fill_from(mask, excess, seen, {r, c});
      if (cluster.pixels.size() < kMinClusterPixels || !(cluster.mass > 0.0)) continue;
      clusters.push_back(std::move(cluster));
    }
  }

  // Raster discovery order already breaks ties between equal bbox corners.
  std::stable_sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    return std::tie(a.bbox.min_row, a.bbox.min_col) < std::tie(b.bbox.min_row, b.bbox.min_col);
  });
  return clusters;
}

}  // namespace flowmon::thermal
