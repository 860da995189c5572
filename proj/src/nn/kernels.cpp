#include "mrinet/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace mrinet::nn {

namespace {

using Index = std::int64_t;

void expect(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ShapeMismatch, what);
}

struct ConvDims {
  Index n, c, h, w, o;
};

template <typename T>
ConvDims conv_dims(const BasicTensor<T>& x, const BasicTensor<T>& weight) {
  expect(x.rank() == 4, "conv2d: input must be [N,C,H,W], got " +
                            shape_string(x.shape()));
  expect(weight.rank() == 4 && weight.dim(2) == 3 && weight.dim(3) == 3,
         "conv2d: weight must be [O,C,3,3], got " + shape_string(weight.shape()));
  expect(weight.dim(1) == x.dim(1),
         "conv2d: input has " + std::to_string(x.dim(1)) +
             " channels, weight expects " + std::to_string(weight.dim(1)));
  return {static_cast<Index>(x.dim(0)), static_cast<Index>(x.dim(1)),
          static_cast<Index>(x.dim(2)), static_cast<Index>(x.dim(3)),
          static_cast<Index>(weight.dim(0))};
}

// Adds k * src shifted by (dy, dx) into dst over the valid region, where
// dst(r, c) += k * src(r + dy, c + dx).
template <typename D, typename S>
inline void accumulate_shifted(D* dst, const S* src, D k, Index h, Index w,
                               Index dy, Index dx) {
  const Index r0 = std::max<Index>(0, -dy);
  const Index r1 = std::min<Index>(h, h - dy);
  const Index c0 = std::max<Index>(0, -dx);
  const Index c1 = std::min<Index>(w, w - dx);
  for (Index r = r0; r < r1; ++r) {
    D* out = dst + r * w;
    const S* in = src + (r + dy) * w + dx;
    for (Index c = c0; c < c1; ++c) out[c] += k * static_cast<D>(in[c]);
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x,
                              const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias) {
  const ConvDims d = conv_dims(x, weight);
  expect(bias.rank() == 1 && static_cast<Index>(bias.dim(0)) == d.o,
         "conv2d: bias must be [" + std::to_string(d.o) + "]");
  BasicTensor<T> y({x.dim(0), weight.dim(0), x.dim(2), x.dim(3)});
  const Index plane = d.h * d.w;
  const T* xp = x.data();
  const T* wp = weight.data();
  T* yp = y.data();

  // Sums run in double and round once on store.
#pragma omp parallel
  {
    std::vector<double> acc(static_cast<std::size_t>(plane));
#pragma omp for collapse(2) schedule(static)
    for (Index n = 0; n < d.n; ++n) {
      for (Index o = 0; o < d.o; ++o) {
        std::fill(acc.begin(), acc.end(), static_cast<double>(bias[o]));
        for (Index c = 0; c < d.c; ++c) {
          const T* in = xp + (n * d.c + c) * plane;
          const T* k = wp + (o * d.c + c) * 9;
          for (Index ky = 0; ky < 3; ++ky) {
            for (Index kx = 0; kx < 3; ++kx) {
              accumulate_shifted(acc.data(), in, static_cast<double>(k[ky * 3 + kx]), d.h, d.w,
                                 ky - 1, kx - 1);
            }
          }
        }
        T* out = yp + (n * d.o + o) * plane;
        for (Index i = 0; i < plane; ++i) out[i] = static_cast<T>(acc[static_cast<std::size_t>(i)]);
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy, bool need_dx) {
  const ConvDims d = conv_dims(x, weight);
  expect(dy.shape() == Shape{x.dim(0), weight.dim(0), x.dim(2), x.dim(3)},
         "conv2d_backward: dy shape " + shape_string(dy.shape()) +
             " does not match forward output");
  const Index plane = d.h * d.w;
  const T* xp = x.data();
  const T* wp = weight.data();
  const T* gp = dy.data();

  ConvGrads<T> g;
  g.dweight = BasicTensor<T>(weight.shape());
  g.dbias = BasicTensor<T>({weight.dim(0)});
  T* dwp = g.dweight.data();
  T* dbp = g.dbias.data();

#pragma omp parallel for schedule(static)
  for (Index o = 0; o < d.o; ++o) {
    T bias_sum{};
    for (Index n = 0; n < d.n; ++n) {
      const T* grad = gp + (n * d.o + o) * plane;
      for (Index i = 0; i < plane; ++i) bias_sum += grad[i];
    }
    dbp[o] = bias_sum;
    for (Index c = 0; c < d.c; ++c) {
      for (Index ky = 0; ky < 3; ++ky) {
        for (Index kx = 0; kx < 3; ++kx) {
          const Index sy = ky - 1;
          const Index sx = kx - 1;
          const Index r0 = std::max<Index>(0, -sy);
          const Index r1 = std::min<Index>(d.h, d.h - sy);
          const Index c0 = std::max<Index>(0, -sx);
          const Index c1 = std::min<Index>(d.w, d.w - sx);
          T acc{};
          for (Index n = 0; n < d.n; ++n) {
            const T* grad = gp + (n * d.o + o) * plane;
            const T* in = xp + (n * d.c + c) * plane;
            for (Index r = r0; r < r1; ++r) {
              const T* grow = grad + r * d.w;
              const T* irow = in + (r + sy) * d.w + sx;
              for (Index col = c0; col < c1; ++col) acc += grow[col] * irow[col];
            }
          }
          dwp[((o * d.c + c) * 3 + ky) * 3 + kx] = acc;
        }
      }
    }
  }

  if (need_dx) {
    g.dx = BasicTensor<T>(x.shape());
    T* dxp = g.dx.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (Index n = 0; n < d.n; ++n) {
      for (Index c = 0; c < d.c; ++c) {
        T* out = dxp + (n * d.c + c) * plane;
        for (Index o = 0; o < d.o; ++o) {
          const T* grad = gp + (n * d.o + o) * plane;
          const T* k = wp + (o * d.c + c) * 9;
          // Taps descend so each dx element sums in the reference order.
          for (Index ky = 2; ky >= 0; --ky) {
            for (Index kx = 2; kx >= 0; --kx) {
              // dx(r + sy, c + sx) += k * dy(r, c)
              accumulate_shifted(out, grad, k[ky * 3 + kx], d.h, d.w,
                                 1 - ky, 1 - kx);
            }
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T>& x) {
  expect(x.rank() == 4, "maxpool2: input must be [N,C,H,W]");
  const Index h = static_cast<Index>(x.dim(2));
  const Index w = static_cast<Index>(x.dim(3));
  if (h % 2 != 0 || w % 2 != 0) {
    throw Error(ErrorKind::OddSpatialDim,
                "maxpool2: spatial size " + std::to_string(h) + "x" +
                    std::to_string(w) + " is not even");
  }
  const Index oh = h / 2;
  const Index ow = w / 2;
  const Index planes = static_cast<Index>(x.dim(0) * x.dim(1));
  PoolResult<T> res{BasicTensor<T>({x.dim(0), x.dim(1), x.dim(2) / 2, x.dim(3) / 2}),
                    std::vector<std::uint32_t>(static_cast<std::size_t>(planes * oh * ow))};
  const T* xp = x.data();
  T* yp = res.output.data();
  std::uint32_t* ap = res.argmax.data();

#pragma omp parallel for schedule(static)
  for (Index p = 0; p < planes; ++p) {
    const Index in_base = p * h * w;
    const Index out_base = p * oh * ow;
    for (Index r = 0; r < oh; ++r) {
      for (Index c = 0; c < ow; ++c) {
        Index best = in_base + (2 * r) * w + 2 * c;
        const Index candidates[3] = {best + 1, best + w, best + w + 1};
        for (Index cand : candidates) {
          if (xp[cand] > xp[best]) best = cand;
        }
        yp[out_base + r * ow + c] = xp[best];
        ap[out_base + r * ow + c] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return res;
}

template <typename T>
BasicTensor<T> maxpool2_backward(std::span<const std::uint32_t> argmax,
                                 const Shape& input_shape,
                                 const BasicTensor<T>& dy) {
  expect(argmax.size() == dy.size(), "maxpool2_backward: routing size mismatch");
  BasicTensor<T> dx(input_shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax[i]] += dy[i];
  return dx;
}

template <typename T>
BasicTensor<T> gap_forward(const BasicTensor<T>& x) {
  expect(x.rank() == 4, "gap: input must be [N,C,H,W]");
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  expect(area > 0, "gap: empty spatial extent");
  BasicTensor<T> y({x.dim(0), x.dim(1)});
  for (std::size_t p = 0; p < planes; ++p) {
    T sum{};
    const T* in = x.data() + p * area;
    for (std::size_t i = 0; i < area; ++i) sum += in[i];
    y[p] = sum / static_cast<T>(area);
  }
  return y;
}

template <typename T>
BasicTensor<T> gap_backward(const Shape& input_shape, const BasicTensor<T>& dy) {
  expect(input_shape.size() == 4 && dy.shape() == Shape{input_shape[0], input_shape[1]},
         "gap_backward: dy must be [N,C]");
  const std::size_t area = input_shape[2] * input_shape[3];
  BasicTensor<T> dx(input_shape);
  for (std::size_t p = 0; p < dy.size(); ++p) {
    const T v = dy[p] / static_cast<T>(area);
    std::fill(dx.data() + p * area, dx.data() + (p + 1) * area, v);
  }
  return dx;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy) {
  expect(x.shape() == dy.shape(), "relu_backward: shape mismatch");
  BasicTensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
  return dx;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias) {
  expect(x.rank() == 2 && weight.rank() == 2 && x.dim(1) == weight.dim(1),
         "dense: input " + shape_string(x.shape()) + " incompatible with weight " +
             shape_string(weight.shape()));
  expect(bias.rank() == 1 && bias.dim(0) == weight.dim(0), "dense: bias shape");
  const Index n = static_cast<Index>(x.dim(0));
  const Index in = static_cast<Index>(x.dim(1));
  const Index out = static_cast<Index>(weight.dim(0));
  BasicTensor<T> y({x.dim(0), weight.dim(0)});
  const T* xp = x.data();
  const T* wp = weight.data();
  T* yp = y.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (Index o = 0; o < out; ++o) {
      const T* xr = xp + i * in;
      const T* wr = wp + o * in;
      T acc = bias[o];
      for (Index k = 0; k < in; ++k) acc += xr[k] * wr[k];
      yp[i * out + o] = acc;
    }
  }
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy) {
  expect(x.rank() == 2 && weight.rank() == 2 && x.dim(1) == weight.dim(1),
         "dense_backward: input/weight mismatch");
  expect(dy.shape() == Shape{x.dim(0), weight.dim(0)},
         "dense_backward: dy shape " + shape_string(dy.shape()));
  const Index n = static_cast<Index>(x.dim(0));
  const Index in = static_cast<Index>(x.dim(1));
  const Index out = static_cast<Index>(weight.dim(0));
  DenseGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()),
                  BasicTensor<T>({weight.dim(0)})};
  const T* xp = x.data();
  const T* wp = weight.data();
  const T* gp = dy.data();

#pragma omp parallel for schedule(static)
  for (Index o = 0; o < out; ++o) {
    T* dw = g.dweight.data() + o * in;
    T db{};
    for (Index i = 0; i < n; ++i) {
      const T go = gp[i * out + o];
      db += go;
      const T* xr = xp + i * in;
      for (Index k = 0; k < in; ++k) dw[k] += go * xr[k];
    }
    g.dbias[o] = db;
  }

#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    T* dx = g.dx.data() + i * in;
    for (Index o = 0; o < out; ++o) {
      const T go = gp[i * out + o];
      const T* wr = wp + o * in;
      for (Index k = 0; k < in; ++k) dx[k] += go * wr[k];
    }
  }
  return g;
}

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& x, double p, Mode mode,
                                 Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorKind::InvalidProbability,
                "dropout probability must be in [0, 1), got " + std::to_string(p));
  }
  DropoutResult<T> r{x, std::vector<std::uint8_t>(x.size(), 1), T{1}};
  if (mode == Mode::Eval || p == 0.0) return r;
  r.scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (rng.uniform() < p) {
      r.keep[i] = 0;
      r.output[i] = T{0};
    } else {
      r.output[i] = x[i] * r.scale;
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> dropout_backward(std::span<const std::uint8_t> keep, T scale,
                                const BasicTensor<T>& dy) {
  expect(keep.size() == dy.size(), "dropout_backward: mask size mismatch");
  BasicTensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = keep[i] ? dy[i] * scale : T{0};
  return dx;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& z) {
  expect(z.rank() >= 1 && z.shape().back() >= 1, "softmax: empty last axis");
  const std::size_t k = z.shape().back();
  const std::size_t rows = z.size() / k;
  BasicTensor<T> y(z.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = z.data() + r * k;
    T* out = y.data() + r * k;
    const T mx = *std::max_element(in, in + k);
    T sum{};
    for (std::size_t i = 0; i < k; ++i) {
      out[i] = std::exp(in[i] - mx);
      sum += out[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
  }
  return y;
}

template <typename T>
LossResult<T> softmax_ce_loss(const BasicTensor<T>& logits,
                              const BasicTensor<T>& targets) {
  expect(logits.rank() == 2 && logits.shape() == targets.shape(),
         "softmax_ce_loss: logits " + shape_string(logits.shape()) +
             " vs targets " + shape_string(targets.shape()));
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.dim(1);
  for (std::size_t r = 0; r < n; ++r) {
    int ones = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const T t = targets[r * k + i];
      if (t == T{1}) {
        ++ones;
      } else if (t != T{0}) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw Error(ErrorKind::BadTargets,
                  "target row " + std::to_string(r) + " is not one-hot");
    }
  }
  LossResult<T> res{T{}, softmax(logits)};
  const T inv_n = T{1} / static_cast<T>(n);
  T total{};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (targets[i] == T{1}) {
      total -= std::log(std::max(res.dlogits[i], static_cast<T>(1e-12)));
    }
    res.dlogits[i] = (res.dlogits[i] - targets[i]) * inv_n;
  }
  res.loss = total * inv_n;
  return res;
}

#define MRINET_INSTANTIATE_KERNELS(T)                                          \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&,                \
                                         const BasicTensor<T>&,                \
                                         const BasicTensor<T>&);               \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&, bool);          \
  template PoolResult<T> maxpool2_forward(const BasicTensor<T>&);              \
  template BasicTensor<T> maxpool2_backward(std::span<const std::uint32_t>,    \
                                            const Shape&,                      \
                                            const BasicTensor<T>&);            \
  template BasicTensor<T> gap_forward(const BasicTensor<T>&);                  \
  template BasicTensor<T> gap_backward(const Shape&, const BasicTensor<T>&);   \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                 \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&);                \
  template BasicTensor<T> dense_forward(const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&);                \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&);                \
  template DropoutResult<T> dropout_forward(const BasicTensor<T>&, double,     \
                                            Mode, Rng&);                       \
  template BasicTensor<T> dropout_backward(std::span<const std::uint8_t>, T,   \
                                           const BasicTensor<T>&);             \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                      \
  template LossResult<T> softmax_ce_loss(const BasicTensor<T>&,                \
                                         const BasicTensor<T>&);

MRINET_INSTANTIATE_KERNELS(float)
MRINET_INSTANTIATE_KERNELS(double)

#undef MRINET_INSTANTIATE_KERNELS

}  // namespace mrinet::nn
