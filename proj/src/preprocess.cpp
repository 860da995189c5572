#include "mrinet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mrinet {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

BinaryMask threshold(const GrayImage8& img, std::uint8_t t) {
  BinaryMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    mask.bits[i] = img.pixels[i] > t ? 1 : 0;
  }
  return mask;
}

namespace {

// One 3x3 pass, done separably: rows then columns. Out-of-image neighbours
// are background, so erosion clears the border and dilation ignores it.
BinaryMask morph_once(const BinaryMask& in, MorphMode mode) {
  const std::size_t w = in.width;
  const std::size_t h = in.height;
  const bool erode = mode == MorphMode::Erode;
  auto combine = [erode](std::uint8_t a, std::uint8_t b) -> std::uint8_t {
    return erode ? (a & b) : (a | b);
  };

  BinaryMask horizontal(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::uint8_t* row = &in.bits[r * w];
    std::uint8_t* out = &horizontal.bits[r * w];
    for (std::size_t c = 0; c < w; ++c) {
      std::uint8_t v = row[c];
      v = combine(v, c > 0 ? row[c - 1] : 0);
      v = combine(v, c + 1 < w ? row[c + 1] : 0);
      out[c] = v;
    }
  }
  BinaryMask out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::uint8_t v = horizontal.bits[r * w + c];
      v = combine(v, r > 0 ? horizontal.bits[(r - 1) * w + c] : 0);
      v = combine(v, r + 1 < h ? horizontal.bits[(r + 1) * w + c] : 0);
      out.bits[r * w + c] = v;
    }
  }
  return out;
}

// Labels 8-connected components; returns per-pixel label (-1 background) and
// component sizes indexed by label. Labels are assigned in row-major order of
// each component's first pixel.
std::vector<std::size_t> label_components(const BinaryMask& mask,
                                          std::vector<int>& labels) {
  const std::size_t w = mask.width;
  const std::size_t h = mask.height;
  labels.assign(w * h, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (!mask.bits[start] || labels[start] >= 0) continue;
    const int label = static_cast<int>(sizes.size());
    std::size_t size = 0;
    labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      ++size;
      const std::size_t r = idx / w;
      const std::size_t c = idx % w;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if ((dr < 0 && r == 0) || (dr > 0 && r + 1 >= h)) continue;
          if ((dc < 0 && c == 0) || (dc > 0 && c + 1 >= w)) continue;
          const std::size_t n = (r + dr) * w + (c + dc);
          if (mask.bits[n] && labels[n] < 0) {
            labels[n] = label;
            stack.push_back(n);
          }
        }
      }
    }
    sizes.push_back(size);
  }
  return sizes;
}

}  // namespace

BinaryMask morphology(const BinaryMask& mask, MorphMode mode,
                      std::size_t iterations) {
  BinaryMask out = mask;
  for (std::size_t i = 0; i < iterations; ++i) out = morph_once(out, mode);
  return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
  std::vector<int> labels;
  const auto sizes = label_components(mask, labels);
  if (sizes.empty()) {
    throw Error(ErrorKind::NoForeground, "mask has no foreground pixels");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] > sizes[best]) best = i;
  }
  BinaryMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.bits[i] = labels[i] == static_cast<int>(best) ? 1 : 0;
  }
  return out;
}

BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask) {
  if (marker.width != mask.width || marker.height != mask.height) {
    throw Error(ErrorKind::ShapeMismatch, "marker and mask sizes differ");
  }
  std::vector<int> labels;
  const auto sizes = label_components(mask, labels);
  std::vector<std::uint8_t> keep(sizes.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (marker.bits[i] && labels[i] >= 0) keep[labels[i]] = 1;
  }
  BinaryMask out(mask.width, mask.height);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.bits[i] = labels[i] >= 0 && keep[labels[i]] ? 1 : 0;
  }
  return out;
}

CropBox bounding_box(const BinaryMask& mask) {
  CropBox box{std::numeric_limits<std::size_t>::max(), 0,
              std::numeric_limits<std::size_t>::max(), 0};
  bool any = false;
  for (std::size_t r = 0; r < mask.height; ++r) {
    for (std::size_t c = 0; c < mask.width; ++c) {
      if (!mask.at(r, c)) continue;
      any = true;
      box.top = std::min(box.top, r);
      box.bottom = std::max(box.bottom, r);
      box.left = std::min(box.left, c);
      box.right = std::max(box.right, c);
    }
  }
  if (!any) throw Error(ErrorKind::NoForeground, "mask has no foreground pixels");
  return box;
}

GrayImage8 crop(const GrayImage8& img, const CropBox& box) {
  if (box.bottom >= img.height || box.right >= img.width ||
      box.top > box.bottom || box.left > box.right) {
    throw Error(ErrorKind::ShapeMismatch, "crop box outside image");
  }
  GrayImage8 out(box.width(), box.height());
  for (std::size_t r = 0; r < out.height; ++r) {
    const auto* src = &img.pixels[(box.top + r) * img.width + box.left];
    std::copy(src, src + out.width, &out.pixels[r * out.width]);
  }
  return out;
}

GrayImage8 crop_to_extremes(const GrayImage8& img, const BinaryMask& mask) {
  if (img.width != mask.width || img.height != mask.height) {
    throw Error(ErrorKind::ShapeMismatch, "image and mask sizes differ");
  }
  return crop(img, bounding_box(mask));
}

GrayImage8 resize_bilinear(const GrayImage8& img, std::size_t out_w,
                           std::size_t out_h) {
  if (out_w == 0 || out_h == 0) {
    throw Error(ErrorKind::ShapeMismatch, "resize target must be >= 1");
  }
  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double hi = static_cast<double>(in - 1);
    for (std::size_t d = 0; d < out; ++d) {
      const double src =
          std::clamp((static_cast<double>(d) + 0.5) * scale - 0.5, 0.0, hi);
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      t[d] = {i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto xs = taps(img.width, out_w);
  const auto ys = taps(img.height, out_h);

  GrayImage8 out(out_w, out_h);
  for (std::size_t r = 0; r < out_h; ++r) {
    const Tap& ty = ys[r];
    for (std::size_t c = 0; c < out_w; ++c) {
      const Tap& tx = xs[c];
      const double top = (1.0 - tx.frac) * img.at(ty.i0, tx.i0) +
                         tx.frac * img.at(ty.i0, tx.i1);
      const double bottom = (1.0 - tx.frac) * img.at(ty.i1, tx.i0) +
                            tx.frac * img.at(ty.i1, tx.i1);
      const double v = (1.0 - ty.frac) * top + ty.frac * bottom;
      out.at(r, c) =
          static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

NormalizedTensor normalize_zscore(const Tensor& t) {
  if (t.empty()) throw Error(ErrorKind::Empty, "cannot normalize an empty tensor");
  const auto n = static_cast<double>(t.size());
  double mean = 0.0;
  for (float v : t.values()) mean += v;
  mean /= n;
  double var = 0.0;
  for (float v : t.values()) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / n);

  NormalizedTensor out{Tensor(t.shape()), false};
  if (sigma < 1e-8) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.tensor[i] = static_cast<float>((t[i] - mean) / sigma);
  }
  return out;
}

PreparedImage prepare_image(const GrayImage8& img,
                            const PreprocessOptions& options) {
  const BinaryMask raw = threshold(img, options.threshold);
  BinaryMask opened =
      morphology(raw, MorphMode::Erode, options.morph_iterations);
  opened = morphology(opened, MorphMode::Dilate, options.morph_iterations);
  if (opened.count() == 0) {
    throw Error(ErrorKind::NoForeground,
                "no foreground left after thresholding and opening");
  }
  BinaryMask object = largest_component(opened);
  if (options.reconstruct) object = reconstruct(object, raw);
  const CropBox box = bounding_box(object);
  return {resize_bilinear(crop(img, box), options.out_size, options.out_size),
          box};
}

NormalizedTensor preprocess_image(const GrayImage8& img,
                                  const PreprocessOptions& options) {
  return normalize_zscore(image_to_tensor(prepare_image(img, options).image));
}

}  // namespace mrinet
