#include "mrinet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace mrinet {

namespace fs = std::filesystem;

namespace {

std::uint8_t jitter(int level, int noise, Rng& rng) {
  const int v = level + static_cast<int>(rng.below(static_cast<std::size_t>(2 * noise + 1))) - noise;
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace

GrayImage8 synth_scan(bool tumor, Rng& rng, const SyntheticConfig& cfg) {
  GrayImage8 img(cfg.size, cfg.size);
  const double span = 2.0 * cfg.max_offset + 1.0;
  const double cx = (static_cast<double>(cfg.size) - 1.0) / 2.0 +
                    std::floor(rng.uniform() * span) - cfg.max_offset;
  const double cy = (static_cast<double>(cfg.size) - 1.0) / 2.0 +
                    std::floor(rng.uniform() * span) - cfg.max_offset;
  // Tumor centre within half the head radii, so the disc stays inside.
  const double angle = rng.uniform() * 2.0 * 3.14159265358979323846;
  const double reach = 0.5 * std::sqrt(rng.uniform());
  const double tx = cx + reach * cfg.head_rx * std::cos(angle);
  const double ty = cy + reach * cfg.head_ry * std::sin(angle);
  const double tr = rng.uniform(cfg.tumor_radius_lo, cfg.tumor_radius_hi);

  for (std::size_t r = 0; r < cfg.size; ++r) {
    for (std::size_t c = 0; c < cfg.size; ++c) {
      const double dx = (static_cast<double>(c) - cx) / cfg.head_rx;
      const double dy = (static_cast<double>(r) - cy) / cfg.head_ry;
      const bool in_head = dx * dx + dy * dy <= 1.0;
      const double ex = static_cast<double>(c) - tx;
      const double ey = static_cast<double>(r) - ty;
      const bool in_tumor = tumor && in_head && ex * ex + ey * ey <= tr * tr;
      if (in_tumor) {
        img.at(r, c) = jitter(cfg.tumor_level, cfg.noise, rng);
      } else if (in_head) {
        img.at(r, c) = jitter(cfg.head_level, cfg.noise, rng);
      } else {
        img.at(r, c) = static_cast<std::uint8_t>(
            rng.below(static_cast<std::size_t>(cfg.background_max + 1)));
      }
    }
  }
  return img;
}

std::vector<LabeledImage> synth_dataset(std::size_t yes, std::size_t no,
                                        std::uint64_t seed,
                                        const SyntheticConfig& cfg) {
  std::vector<LabeledImage> out;
  out.reserve(yes + no);
  for (std::size_t i = 0; i < yes + no; ++i) {
    Rng rng(derive_seed(seed, i));
    const bool tumor = i < yes;
    out.push_back({synth_scan(tumor, rng, cfg), tumor ? Label::Yes : Label::No});
  }
  return out;
}

void write_synthetic_dataset(const fs::path& root, std::size_t yes,
                             std::size_t no, std::uint64_t seed,
                             const SyntheticConfig& cfg) {
  fs::create_directories(root / "yes");
  fs::create_directories(root / "no");
  const auto data = synth_dataset(yes, no, seed, cfg);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool positive = data[i].label == Label::Yes;
    const std::size_t index = positive ? i : i - yes;
    char name[32];
    std::snprintf(name, sizeof(name), "%s_%04zu.pgm", positive ? "yes" : "no", index);
    save_pgm(data[i].image, root / (positive ? "yes" : "no") / name);
  }
}

std::uint64_t pixel_sum(const GrayImage8& img) {
  return std::accumulate(img.pixels.begin(), img.pixels.end(), std::uint64_t{0});
}

}  // namespace mrinet
