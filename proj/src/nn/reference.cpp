#include "mrinet/nn/reference.hpp"

#include <cstddef>

namespace mrinet::nn::reference {

namespace {

template <typename T>
std::size_t idx4(const BasicTensor<T>& t, std::size_t a, std::size_t b,
                 std::size_t c, std::size_t d) {
  return ((a * t.dim(1) + b) * t.dim(2) + c) * t.dim(3) + d;
}

// Padded read: zero outside the image.
template <typename T>
T at_padded(const BasicTensor<T>& x, std::size_t n, std::size_t c, long r,
            long col) {
  if (r < 0 || col < 0 || r >= static_cast<long>(x.dim(2)) ||
      col >= static_cast<long>(x.dim(3))) {
    return T{0};
  }
  return x[idx4(x, n, c, static_cast<std::size_t>(r), static_cast<std::size_t>(col))];
}

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::ShapeMismatch, what);
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x,
                              const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias) {
  check(x.rank() == 4 && weight.rank() == 4 && weight.dim(1) == x.dim(1),
        "reference conv2d: shape mismatch");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = weight.dim(0);
  BasicTensor<T> y({N, O, H, W});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t r = 0; r < H; ++r)
        for (std::size_t col = 0; col < W; ++col) {
          double acc = bias[o];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < 3; ++ky)
              for (std::size_t kx = 0; kx < 3; ++kx)
                acc += static_cast<double>(weight[idx4(weight, o, c, ky, kx)]) *
                       static_cast<double>(at_padded(x, n, c, static_cast<long>(r + ky) - 1,
                                                     static_cast<long>(col + kx) - 1));
          y[idx4(y, n, o, r, col)] = static_cast<T>(acc);
        }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = weight.dim(0);
  check(dy.shape() == Shape{N, O, H, W}, "reference conv2d_backward: dy shape");
  ConvGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()),
                 BasicTensor<T>({O})};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t r = 0; r < H; ++r)
        for (std::size_t col = 0; col < W; ++col) {
          const T grad = dy[idx4(dy, n, o, r, col)];
          g.dbias[o] += grad;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < 3; ++ky)
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const long sr = static_cast<long>(r + ky) - 1;
                const long sc = static_cast<long>(col + kx) - 1;
                if (sr < 0 || sc < 0 || sr >= static_cast<long>(H) ||
                    sc >= static_cast<long>(W)) {
                  continue;
                }
                const auto xi = idx4(x, n, c, static_cast<std::size_t>(sr),
                                     static_cast<std::size_t>(sc));
                g.dweight[idx4(weight, o, c, ky, kx)] += grad * x[xi];
                g.dx[xi] += grad * weight[idx4(weight, o, c, ky, kx)];
              }
        }
  return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T>& x) {
  check(x.rank() == 4, "reference maxpool2: rank");
  if (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0) {
    throw Error(ErrorKind::OddSpatialDim, "reference maxpool2: odd spatial size");
  }
  const std::size_t N = x.dim(0), C = x.dim(1), OH = x.dim(2) / 2, OW = x.dim(3) / 2;
  PoolResult<T> res{BasicTensor<T>({N, C, OH, OW}), {}};
  res.argmax.resize(res.output.size());
  std::size_t out = 0;
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t r = 0; r < OH; ++r)
        for (std::size_t col = 0; col < OW; ++col, ++out) {
          std::size_t best = idx4(x, n, c, 2 * r, 2 * col);
          for (std::size_t wy = 0; wy < 2; ++wy)
            for (std::size_t wx = 0; wx < 2; ++wx) {
              const std::size_t i = idx4(x, n, c, 2 * r + wy, 2 * col + wx);
              if (x[i] > x[best]) best = i;
            }
          res.output[out] = x[best];
          res.argmax[out] = static_cast<std::uint32_t>(best);
        }
  return res;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias) {
  check(x.rank() == 2 && weight.rank() == 2 && x.dim(1) == weight.dim(1),
        "reference dense: shape mismatch");
  const std::size_t N = x.dim(0), I = x.dim(1), O = weight.dim(0);
  BasicTensor<T> y({N, O});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      T acc = bias[o];
      for (std::size_t i = 0; i < I; ++i) acc += x[n * I + i] * weight[o * I + i];
      y[n * O + o] = acc;
    }
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy) {
  const std::size_t N = x.dim(0), I = x.dim(1), O = weight.dim(0);
  check(dy.shape() == Shape{N, O}, "reference dense_backward: dy shape");
  DenseGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weight.shape()),
                  BasicTensor<T>({O})};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      const T go = dy[n * O + o];
      g.dbias[o] += go;
      for (std::size_t i = 0; i < I; ++i) {
        g.dweight[o * I + i] += go * x[n * I + i];
        g.dx[n * I + i] += go * weight[o * I + i];
      }
    }
  return g;
}

template BasicTensor<float> conv2d_forward(const Tensor&, const Tensor&, const Tensor&);
template BasicTensor<double> conv2d_forward(const TensorD&, const TensorD&, const TensorD&);
template ConvGrads<float> conv2d_backward(const Tensor&, const Tensor&, const Tensor&);
template ConvGrads<double> conv2d_backward(const TensorD&, const TensorD&, const TensorD&);
template PoolResult<float> maxpool2_forward(const Tensor&);
template PoolResult<double> maxpool2_forward(const TensorD&);
template BasicTensor<float> dense_forward(const Tensor&, const Tensor&, const Tensor&);
template BasicTensor<double> dense_forward(const TensorD&, const TensorD&, const TensorD&);
template DenseGrads<float> dense_backward(const Tensor&, const Tensor&, const Tensor&);
template DenseGrads<double> dense_backward(const TensorD&, const TensorD&, const TensorD&);

}  // namespace mrinet::nn::reference
