#include "mrinet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mrinet {

void AugmentConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "augment: " + what);
  };
  if (!(max_rotation_deg >= 0.0)) fail("max_rotation_deg must be >= 0");
  if (!(shift_fraction >= 0.0 && shift_fraction < 1.0)) {
    fail("shift_fraction must be in [0, 1)");
  }
  if (!(brightness_lo > 0.0 && brightness_lo <= brightness_hi)) {
    fail("brightness bounds must satisfy 0 < lo <= hi");
  }
  if (!(shear_rad >= 0.0)) fail("shear_rad must be >= 0");
}

Point2 apply(const Affine2x3& m, Point2 p) {
  return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
}

Affine2x3 build_affine(double rotation_deg, double shear_rad, double dx_px,
                       double dy_px, Point2 center) {
  const double theta = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // Inverse rotation [c s; -s c] times inverse shear [1 tan; 0 sec].
  const double tan_sh = std::tan(shear_rad);
  const double sec_sh = 1.0 / std::cos(shear_rad);
  const double a = c;
  const double b = c * tan_sh + s * sec_sh;
  const double d = -s;
  const double e = -s * tan_sh + c * sec_sh;
  // p = M * (p' - center - t) + center
  const double tx = center.x + dx_px;
  const double ty = center.y + dy_px;
  return {a, b, center.x - (a * tx + b * ty),
          d, e, center.y - (d * tx + e * ty)};
}

GrayImage8 apply_affine(const GrayImage8& img, const Affine2x3& m) {
  for (double v : m) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::InvalidConfig, "affine matrix is not finite");
    }
  }
  GrayImage8 out(img.width, img.height);
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const Point2 src =
          apply(m, {static_cast<double>(c), static_cast<double>(r)});
      const double sx = std::clamp(std::floor(src.x + 0.5), 0.0, max_x);
      const double sy = std::clamp(std::floor(src.y + 0.5), 0.0, max_y);
      out.at(r, c) = img.at(static_cast<std::size_t>(sy),
                            static_cast<std::size_t>(sx));
    }
  }
  return out;
}

GrayImage8 adjust_brightness(const GrayImage8& img, double factor) {
  if (!(factor > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "brightness factor must be > 0");
  }
  GrayImage8 out = img;
  for (auto& px : out.pixels) {
    px = static_cast<std::uint8_t>(
        std::clamp(std::floor(px * factor + 0.5), 0.0, 255.0));
  }
  return out;
}

GrayImage8 flip(const GrayImage8& img, FlipAxis axis) {
  GrayImage8 out(img.width, img.height);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const std::size_t sr = axis == FlipAxis::Vertical ? img.height - 1 - r : r;
      const std::size_t sc = axis == FlipAxis::Horizontal ? img.width - 1 - c : c;
      out.at(r, c) = img.at(sr, sc);
    }
  }
  return out;
}

AugmentParams sample_params(const AugmentConfig& cfg, std::size_t width,
                            std::size_t height, Rng& rng) {
  std::array<double, kDrawsPerSample> u{};
  for (auto& v : u) v = rng.uniform();

  AugmentParams p;
  p.rotation_deg = cfg.symmetric_rotation
                       ? (2.0 * u[0] - 1.0) * cfg.max_rotation_deg
                       : u[0] * cfg.max_rotation_deg;
  p.dx_px = (2.0 * u[1] - 1.0) * cfg.shift_fraction * static_cast<double>(width);
  p.dy_px = (2.0 * u[2] - 1.0) * cfg.shift_fraction * static_cast<double>(height);
  p.brightness_factor =
      cfg.brightness_lo + (cfg.brightness_hi - cfg.brightness_lo) * u[3];
  p.shear_rad_applied = u[4] < 0.5 ? cfg.shear_rad : 0.0;
  p.hflip = cfg.allow_hflip && u[5] < 0.5;
  p.vflip = cfg.allow_vflip && u[6] < 0.5;
  return p;
}

GrayImage8 augment_image(const GrayImage8& img, const AugmentParams& p) {
  const Point2 center{(static_cast<double>(img.width) - 1.0) / 2.0,
                      (static_cast<double>(img.height) - 1.0) / 2.0};
  GrayImage8 out = apply_affine(
      img, build_affine(p.rotation_deg, p.shear_rad_applied, p.dx_px, p.dy_px,
                        center));
  if (p.brightness_factor != 1.0) out = adjust_brightness(out, p.brightness_factor);
  if (p.hflip) out = flip(out, FlipAxis::Horizontal);
  if (p.vflip) out = flip(out, FlipAxis::Vertical);
  return out;
}

}  // namespace mrinet
