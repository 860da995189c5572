#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mrinet/image.hpp"
#include "mrinet/metrics.hpp"
#include "mrinet/rng.hpp"

namespace mrinet {

/// Toy "scan": a dark noisy background, a mid-gray elliptical head at a
/// jittered position, and for positives a bright disc inside the head.
struct SyntheticConfig {
  std::size_t size = 96;
  double head_rx = 34.0;
  double head_ry = 40.0;
  int head_level = 90;
  int background_max = 20;
  int noise = 12;
  int tumor_level = 230;
  double tumor_radius_lo = 5.0;
  double tumor_radius_hi = 8.0;
  int max_offset = 6;
};

struct LabeledImage {
  GrayImage8 image;
  Label label = Label::No;
};

GrayImage8 synth_scan(bool tumor, Rng& rng, const SyntheticConfig& cfg = {});

/// `yes` positives then `no` negatives; image i uses derive_seed(seed, i).
std::vector<LabeledImage> synth_dataset(std::size_t yes, std::size_t no,
                                        std::uint64_t seed,
                                        const SyntheticConfig& cfg = {});

/// Writes root/yes/yes_NNNN.pgm and root/no/no_NNNN.pgm.
void write_synthetic_dataset(const std::filesystem::path& root, std::size_t yes,
                             std::size_t no, std::uint64_t seed,
                             const SyntheticConfig& cfg = {});

std::uint64_t pixel_sum(const GrayImage8& img);

}  // namespace mrinet
