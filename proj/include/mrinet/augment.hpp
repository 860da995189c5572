#pragma once

#include <array>
#include <cstddef>

#include "mrinet/image.hpp"
#include "mrinet/rng.hpp"

namespace mrinet {

struct AugmentConfig {
  double max_rotation_deg = 15.0;
  double shift_fraction = 0.10;
  double brightness_lo = 0.5;
  double brightness_hi = 1.5;
  double shear_rad = 0.1;
  bool allow_hflip = true;
  bool allow_vflip = true;
  // Sample rotation from [-max, max] instead of clockwise-only [0, max].
  bool symmetric_rotation = false;

  /// Throws InvalidConfig when a bound is violated.
  void validate() const;
};

/// One concrete draw of the augmentation recipe.
struct AugmentParams {
  double rotation_deg = 0.0;
  double dx_px = 0.0;
  double dy_px = 0.0;
  double brightness_factor = 1.0;
  double shear_rad_applied = 0.0;
  bool hflip = false;
  bool vflip = false;

  bool operator==(const AugmentParams&) const = default;
};

/// Row-major 2x3 affine matrix [a b c; d e f]:
/// (x, y) -> (a*x + b*y + c, d*x + e*y + f).
using Affine2x3 = std::array<double, 6>;

inline constexpr Affine2x3 kIdentityAffine{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

Point2 apply(const Affine2x3& m, Point2 p);

/// Inverse-warp matrix (output coords -> input coords) for the forward
/// transform p' = Shear * Rotate * (p - center) + center + (dx, dy).
/// Image coordinates have y pointing down; positive rotation is clockwise on
/// screen, positive shear is counter-clockwise.
Affine2x3 build_affine(double rotation_deg, double shear_rad, double dx_px,
                       double dy_px, Point2 center);

/// Nearest-neighbour resampling with replicate fill. Output size = input size.
GrayImage8 apply_affine(const GrayImage8& img, const Affine2x3& m);

/// pixel -> clamp(floor(pixel * factor + 0.5), 0, 255); factor > 0.
GrayImage8 adjust_brightness(const GrayImage8& img, double factor);

enum class FlipAxis { Horizontal, Vertical };

GrayImage8 flip(const GrayImage8& img, FlipAxis axis);

/// Number of uniform draws consumed by sample_params, regardless of config.
inline constexpr int kDrawsPerSample = 7;

/// Draw order: rotation, dx, dy, brightness, shear coin, hflip coin,
/// vflip coin.
AugmentParams sample_params(const AugmentConfig& cfg, std::size_t width,
                            std::size_t height, Rng& rng);

/// affine (rotation, shear, shift) -> brightness -> flips.
GrayImage8 augment_image(const GrayImage8& img, const AugmentParams& p);

}  // namespace mrinet
