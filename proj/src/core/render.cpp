#include "core/render.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

#include "core/errors.hpp"

namespace gatar {

namespace {

using Color = std::array<std::uint8_t, 3>;

constexpr Color kBackground{255, 255, 255};
constexpr Color kObstacle{128, 128, 128};
constexpr Color kTarget{255, 0, 0};
constexpr Color kGround{0, 0, 255};
constexpr Color kFlyer{0, 255, 0};

struct Raster {
  int width;
  int height;
  std::vector<std::uint8_t> rgb;

  Raster(int cells_w, int cells_h)
      : width(cells_w * kCellPixels), height(cells_h * kCellPixels) {
    rgb.assign(static_cast<std::size_t>(width) * height * 3, 255);
  }

  void fill_cell(Cell c, Color color) {
    for (int py = c.y * kCellPixels; py < (c.y + 1) * kCellPixels; ++py) {
      for (int px = c.x * kCellPixels; px < (c.x + 1) * kCellPixels; ++px) {
        const std::size_t at = (static_cast<std::size_t>(py) * width + px) * 3;
        rgb[at] = color[0];
        rgb[at + 1] = color[1];
        rgb[at + 2] = color[2];
      }
    }
  }
};

void write_ppm(const Raster& raster, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw IoError("render_frames: cannot open " + path);
  out << "P6\n" << raster.width << " " << raster.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(raster.rgb.data()),
            static_cast<std::streamsize>(raster.rgb.size()));
  if (!out.good()) throw IoError("render_frames: write failed for " + path);
}

}  // namespace

void render_frames(const Episode& episode, const std::string& out_dir) {
  if (episode.log.empty()) throw ContractError("render_frames: empty episode log");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("render_frames: cannot create " + out_dir + ": " + ec.message());

  const GridWorld& world = episode.world;
  for (std::size_t s = 0; s < episode.log.size(); ++s) {
    const StepRecord& rec = episode.log[s];
    Raster frame(world.width(), world.height());
    for (const Cell c : world.obstacles()) frame.fill_cell(c, kObstacle);
    for (const Cell c : rec.remaining) frame.fill_cell(c, kTarget);
    for (std::size_t i = 0; i < rec.positions.size(); ++i) {
      const bool flies = episode.team[i].spec.traversal == Traversal::FliesOverObstacles;
      frame.fill_cell(rec.positions[i], flies ? kFlyer : kGround);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", s + 1);
    write_ppm(frame, out_dir + "/" + name);
  }

  const std::string csv_path = out_dir + "/coverage.csv";
  std::ofstream csv(csv_path);
  if (!csv.good()) throw IoError("render_frames: cannot open " + csv_path);
  csv << "step,agent_id,targets_localized_cumulative\n";
  for (std::size_t s = 0; s < episode.log.size(); ++s) {
    const int step = static_cast<int>(s) + 1;
    for (std::size_t i = 0; i < episode.team.size(); ++i) {
      int count = 0;
      for (const LocalizationEvent& ev : episode.events) {
        if (ev.agent == static_cast<int>(i) && ev.step <= step) ++count;
      }
      csv << step << "," << i << "," << count << "\n";
    }
  }
  if (!csv.good()) throw IoError("render_frames: write failed for " + csv_path);
}

}  // namespace gatar
