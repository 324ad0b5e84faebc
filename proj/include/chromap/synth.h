#pragma once

#include <cstdint>
#include <string>

#include "chromap/image.h"

namespace chromap {

// Procedural photo stand-in: a smooth four-corner color gradient overlaid with
// a handful of soft-edged rectangles and ellipses plus mild per-pixel noise.
// Deterministic in (height, width, seed).
Image synth_image(int height, int width, std::uint64_t seed);

// Writes `count` synthetic PNGs named img_0000.png, img_0001.png, ... into
// `dir` (created if needed). Image i uses seed (seed, i).
void write_synthetic_dataset(const std::string& dir, int count, int size, std::uint64_t seed);

}  // namespace chromap
