#pragma once

#include <string>

#include "core/rollout.hpp"

namespace gatar {

// Pixels per world cell in rendered frames.
inline constexpr int kCellPixels = 8;

// Writes one binary pixmap per executed step (frame_0001.ppm, ...) plus
// coverage.csv with cumulative localized-target counts per agent and step.
// White background, grey obstacles, red targets, blue ground agents, green
// flyers; agents draw over targets. The directory is created if needed.
void render_frames(const Episode& episode, const std::string& out_dir);

}  // namespace gatar
