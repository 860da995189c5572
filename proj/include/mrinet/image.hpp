#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mrinet/tensor.hpp"

namespace mrinet {

/// 8-bit grayscale raster, row-major.
struct GrayImage8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage8() = default;
  GrayImage8(std::size_t w, std::size_t h, std::uint8_t fill = 0);
  /// Throws ShapeMismatch unless px.size() == w * h and both are >= 1.
  GrayImage8(std::size_t w, std::size_t h, std::vector<std::uint8_t> px);

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return pixels[row * width + col];
  }
  std::uint8_t& at(std::size_t row, std::size_t col) {
    return pixels[row * width + col];
  }

  bool operator==(const GrayImage8&) const = default;
};

/// Parses binary (P5) or ASCII (P2) PGM. Only maxval 255 is accepted.
GrayImage8 read_pgm(std::span<const std::uint8_t> bytes);

/// Emits binary P5: "P5\n<w> <h>\n255\n" followed by the raw pixels.
std::vector<std::uint8_t> write_pgm(const GrayImage8& img);

GrayImage8 load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage8& img, const std::filesystem::path& path);

/// Shape [1, height, width], values are the raw intensities (no scaling).
Tensor image_to_tensor(const GrayImage8& img);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace mrinet
