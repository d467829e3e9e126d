#pragma once
// Planar scan grid. Cells are squares of side cell_m; cell (iy, ix) has linear index
// iy*cols + ix and its center at origin + (i + 0.5) * cell_m per axis. Ties between
// equal-amplitude cells are broken toward the smaller linear index everywhere.

#include <algorithm>
#include <cstddef>

#include "irsloc/scene.hpp"

namespace irsloc {

struct Grid {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_m = 0.5;
  int rows = 1;  // y direction
  int cols = 1;  // x direction
  int level = 1;

  std::size_t cell_count() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }

  Vec3 cell_center(std::size_t index) const {
    const int iy = static_cast<int>(index) / cols;
    const int ix = static_cast<int>(index) % cols;
    return {origin_x + (ix + 0.5) * cell_m, origin_y + (iy + 0.5) * cell_m, 0.0};
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.origin_x == b.origin_x && a.origin_y == b.origin_y && a.cell_m == b.cell_m &&
           a.rows == b.rows && a.cols == b.cols && a.level == b.level;
  }
};

// Grid covering the whole room floor at the given cell size.
inline Grid room_grid(const Scenario& s, double cell_m, int level = 1) {
  Grid g;
  g.cell_m = cell_m;
  g.cols = std::max(1, static_cast<int>(s.room.x / cell_m + 0.5));
  g.rows = std::max(1, static_cast<int>(s.room.y / cell_m + 0.5));
  g.level = level;
  return g;
}

// Square window of half-width half_span centered near (cx, cy), clamped into the room.
inline Grid window_grid(const Scenario& s, double cx, double cy, double half_span, double cell_m,
                        int level) {
  Grid g;
  g.cell_m = cell_m;
  const int n = std::max(1, static_cast<int>(2.0 * half_span / cell_m + 0.5));
  g.rows = n;
  g.cols = n;
  g.level = level;
  const double span = n * cell_m;
  g.origin_x = std::clamp(cx - 0.5 * span, 0.0, std::max(0.0, s.room.x - span));
  g.origin_y = std::clamp(cy - 0.5 * span, 0.0, std::max(0.0, s.room.y - span));
  return g;
}

}  // namespace irsloc
