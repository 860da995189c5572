#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mrinet/image.hpp"
#include "mrinet/tensor.hpp"

namespace mrinet {

struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  BinaryMask() = default;
  BinaryMask(std::size_t w, std::size_t h, bool fill = false)
      : width(w), height(h), bits(w * h, fill ? 1 : 0) {}

  bool at(std::size_t row, std::size_t col) const {
    return bits[row * width + col] != 0;
  }
  void set(std::size_t row, std::size_t col, bool value = true) {
    bits[row * width + col] = value ? 1 : 0;
  }
  std::size_t count() const;

  bool operator==(const BinaryMask&) const = default;
};

/// Inclusive pixel bounds.
struct CropBox {
  std::size_t top = 0;
  std::size_t bottom = 0;
  std::size_t left = 0;
  std::size_t right = 0;

  std::size_t width() const { return right - left + 1; }
  std::size_t height() const { return bottom - top + 1; }

  bool operator==(const CropBox&) const = default;
};

enum class MorphMode { Erode, Dilate };

inline constexpr std::uint8_t kDefaultThreshold = 45;
inline constexpr std::size_t kDefaultMorphIterations = 2;
inline constexpr std::size_t kDefaultInputSize = 224;

/// Foreground iff pixel > t.
BinaryMask threshold(const GrayImage8& img, std::uint8_t t = kDefaultThreshold);

/// 3x3 square structuring element; pixels outside the image are background.
BinaryMask morphology(const BinaryMask& mask, MorphMode mode,
                      std::size_t iterations);

/// Largest 8-connected component. Ties go to the component whose first
/// pixel comes earliest in row-major order. Throws NoForeground.
BinaryMask largest_component(const BinaryMask& mask);

/// Every component of `mask` (8-connected) that intersects `marker`.
BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask);

/// Throws NoForeground on an empty mask.
CropBox bounding_box(const BinaryMask& mask);

GrayImage8 crop(const GrayImage8& img, const CropBox& box);
GrayImage8 crop_to_extremes(const GrayImage8& img, const BinaryMask& mask);

/// Half-pixel-centre bilinear resampling, clamped and rounded half up.
GrayImage8 resize_bilinear(const GrayImage8& img, std::size_t out_w,
                           std::size_t out_h);

struct NormalizedTensor {
  Tensor tensor;
  bool degenerate = false;  // sigma < 1e-8, output forced to zero
};

/// Per-image (x - mean) / population_std.
NormalizedTensor normalize_zscore(const Tensor& t);

struct PreprocessOptions {
  std::uint8_t threshold = kDefaultThreshold;
  std::size_t morph_iterations = kDefaultMorphIterations;
  std::size_t out_size = kDefaultInputSize;
  // Grow the selected component back inside the thresholded mask so the
  // crop is not shrunk by the opening.
  bool reconstruct = true;
};

struct PreparedImage {
  GrayImage8 image;  // cropped and resized, still 8-bit
  CropBox box;       // crop in source coordinates
};

/// Everything up to and including the resize.
PreparedImage prepare_image(const GrayImage8& img,
                            const PreprocessOptions& options = {});

/// prepare_image followed by z-score normalization.
NormalizedTensor preprocess_image(const GrayImage8& img,
                                  const PreprocessOptions& options = {});

}  // namespace mrinet
