#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace gatar {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell& a, const Cell& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const Cell& a, const Cell& b) { return !(a == b); }
  // Row-major order: y first, then x. Used wherever cell lists need a canonical order.
  friend bool operator<(const Cell& a, const Cell& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  }
};

inline int squared_distance(Cell a, Cell b) {
  const int dx = a.x - b.x;
  const int dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline double euclidean_distance(Cell a, Cell b) {
  return std::sqrt(static_cast<double>(squared_distance(a, b)));
}

// Integer midpoint line from a to b, endpoints included. The error term mixes
// both axes symmetrically, so reflecting the endpoints reflects the cell list.
inline std::vector<Cell> bresenham_line(Cell a, Cell b) {
  std::vector<Cell> cells;
  const int dx = std::abs(b.x - a.x);
  const int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  Cell c = a;
  for (;;) {
    cells.push_back(c);
    if (c == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      c.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      c.y += sy;
    }
  }
  return cells;
}

}  // namespace gatar

template <>
struct std::hash<gatar::Cell> {
  size_t operator()(const gatar::Cell& c) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t(std::uint32_t(c.x)) << 32) |
                                      std::uint32_t(c.y));
  }
};
