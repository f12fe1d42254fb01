#pragma once

#include <cstdint>
#include <vector>

#include "dgcrf/image.hpp"

namespace dgcrf {

// Procedural piecewise-smooth grayscale scenes (shaded background, overlapping
// anti-aliased ellipses/rectangles/half-planes, occasional stripe texture).
// Deterministic in (seed, index). Used for demo datasets and desk-scale tests.
Image synthetic_scene(int height, int width, std::uint64_t seed);
std::vector<Image> synthetic_scenes(int count, int height, int width, std::uint64_t seed);

}  // namespace dgcrf
