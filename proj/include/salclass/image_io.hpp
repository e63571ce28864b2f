#pragma once

#include "salclass/image.hpp"

#include <filesystem>
#include <stdexcept>

namespace salclass {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary PGM (P5). Values in [0,1] are scaled to maxval (255 or 65535) and rounded.
void write_pgm(const std::filesystem::path& path, const Plane& values, int bit_depth = 8);
Plane read_pgm(const std::filesystem::path& path);

/// PNG with 1 (gray) or 3 (RGB) channels at 8 or 16 bits. Values in [0,1].
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);
Image read_png(const std::filesystem::path& path);

/// Dispatches on extension (.png, .pgm). Gray PGM input yields one channel.
Image read_image(const std::filesystem::path& path);

/// Writes normalize_map(map): .pgm as 8-bit, .png as 16-bit gray.
void export_map(const std::filesystem::path& path, const SaliencyMap& map);

}  // namespace salclass
