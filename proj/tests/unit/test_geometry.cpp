#include <doctest.h>

#include <algorithm>
#include <cstdlib>

#include "core/geometry.hpp"
#include "oracles.hpp"

using gatar::Cell;
using gatar::bresenham_line;

namespace {

std::vector<Cell> mirror_x(const std::vector<Cell>& cells, int w) {
  std::vector<Cell> out;
  for (const Cell c : cells) out.push_back({w - c.x, c.y});
  return out;
}

std::vector<Cell> mirror_y(const std::vector<Cell>& cells, int h) {
  std::vector<Cell> out;
  for (const Cell c : cells) out.push_back({c.x, h - c.y});
  return out;
}

std::vector<Cell> swap_xy(const std::vector<Cell>& cells) {
  std::vector<Cell> out;
  for (const Cell c : cells) out.push_back({c.y, c.x});
  return out;
}

}  // namespace

TEST_CASE("cell ordering is row-major") {
  CHECK(Cell{2, 1} < Cell{0, 2});
  CHECK(Cell{1, 1} < Cell{2, 1});
  CHECK_FALSE(Cell{2, 1} < Cell{2, 1});
  CHECK(Cell{3, 4} == Cell{3, 4});
  CHECK(Cell{3, 4} != Cell{4, 3});
}

TEST_CASE("distances") {
  CHECK(gatar::squared_distance({0, 0}, {3, 4}) == 25);
  CHECK(gatar::euclidean_distance({0, 0}, {3, 4}) == doctest::Approx(5.0));
  CHECK(gatar::squared_distance({-2, 1}, {1, -3}) == 25);
}

TEST_CASE("line fixtures traced by hand") {
  // Axis-aligned and diagonal.
  CHECK(bresenham_line({2, 3}, {2, 3}) == std::vector<Cell>{{2, 3}});
  CHECK(bresenham_line({0, 0}, {3, 0}) == std::vector<Cell>{{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  CHECK(bresenham_line({0, 0}, {0, 2}) == std::vector<Cell>{{0, 0}, {0, 1}, {0, 2}});
  CHECK(bresenham_line({0, 0}, {3, 3}) == std::vector<Cell>{{0, 0}, {1, 1}, {2, 2}, {3, 3}});

  // Shallow slope 1/3: y advances at x=2 where the line sits at 2/3.
  CHECK(bresenham_line({0, 0}, {3, 1}) == std::vector<Cell>{{0, 0}, {1, 0}, {2, 1}, {3, 1}});

  // Exact half-cell tie at x=1 resolves to the diagonal step.
  CHECK(bresenham_line({0, 0}, {2, 1}) == std::vector<Cell>{{0, 0}, {1, 1}, {2, 1}});

  // Steep mirror of the above.
  CHECK(bresenham_line({0, 0}, {1, 2}) == std::vector<Cell>{{0, 0}, {1, 1}, {1, 2}});

  // Negative direction.
  CHECK(bresenham_line({3, 1}, {0, 0}) == std::vector<Cell>{{3, 1}, {2, 1}, {1, 0}, {0, 0}});

  // Used by the occlusion fixture: obstacle column passes beside the ray.
  CHECK(bresenham_line({3, 3}, {2, 0}) == std::vector<Cell>{{3, 3}, {3, 2}, {2, 1}, {2, 0}});
  CHECK(bresenham_line({3, 3}, {3, 0}) == std::vector<Cell>{{3, 3}, {3, 2}, {3, 1}, {3, 0}});
}

TEST_CASE("line structural properties over all pairs in a 9x9 box") {
  for (int ax = 0; ax < 9; ++ax) {
    for (int ay = 0; ay < 9; ++ay) {
      for (int bx = 0; bx < 9; ++bx) {
        for (int by = 0; by < 9; ++by) {
          const Cell a{ax, ay};
          const Cell b{bx, by};
          const std::vector<Cell> cells = bresenham_line(a, b);

          REQUIRE(!cells.empty());
          CHECK(cells.front() == a);
          CHECK(cells.back() == b);
          // One step along the dominant axis per cell.
          CHECK(static_cast<int>(cells.size()) ==
                std::max(std::abs(bx - ax), std::abs(by - ay)) + 1);
          for (std::size_t i = 1; i < cells.size(); ++i) {
            const int dx = cells[i].x - cells[i - 1].x;
            const int dy = cells[i].y - cells[i - 1].y;
            CHECK(std::abs(dx) <= 1);
            CHECK(std::abs(dy) <= 1);
            CHECK((dx != 0 || dy != 0));
            // Monotone along both axes.
            if (bx >= ax) CHECK(dx >= 0);
            if (bx <= ax) CHECK(dx <= 0);
            if (by >= ay) CHECK(dy >= 0);
            if (by <= ay) CHECK(dy <= 0);
          }
          // Every cell is within half a cell of the ideal segment: for the
          // dominant-axis coordinate of each cell, the exact line ordinate
          // differs from the rasterized one by at most 0.5.
          const int ddx = bx - ax;
          const int ddy = by - ay;
          if (std::abs(ddx) >= std::abs(ddy)) {
            for (const Cell c : cells) {
              if (ddx == 0) continue;
              const double t = static_cast<double>(c.x - ax) / ddx;
              CHECK(std::abs(ay + t * ddy - c.y) <= 0.5 + 1e-9);
            }
          } else {
            for (const Cell c : cells) {
              const double t = static_cast<double>(c.y - ay) / ddy;
              CHECK(std::abs(ax + t * ddx - c.x) <= 0.5 + 1e-9);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("line is symmetric under reflection and transposition") {
  oracle::TestRand rnd(99);
  for (int trial = 0; trial < 500; ++trial) {
    const Cell a{rnd.below(21) - 10, rnd.below(21) - 10};
    const Cell b{rnd.below(21) - 10, rnd.below(21) - 10};
    const std::vector<Cell> base = bresenham_line(a, b);
    CHECK(mirror_x(base, 0) == bresenham_line({-a.x, a.y}, {-b.x, b.y}));
    CHECK(mirror_y(base, 0) == bresenham_line({a.x, -a.y}, {b.x, -b.y}));
    CHECK(swap_xy(base) == bresenham_line({a.y, a.x}, {b.y, b.x}));
  }
}
