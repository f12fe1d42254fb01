#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgcrf/image.hpp"

namespace dgcrf {

// Reads binary PGM (P5, maxval 255) or 8-bit grayscale PNG, scaled by 1/255.
// Throws IoError naming the offending field on malformed input.
Image load_image(const std::filesystem::path& path);
Image decode_pgm(const std::vector<std::uint8_t>& bytes);

// Clips to [0, 1], scales by 255, rounds half away from zero, writes P5.
void save_image(const Image& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const Image& img);

bool png_supported();

// Sorted list of *.pgm / *.png files in a directory (non-recursive).
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace dgcrf
