#pragma once

// Layer kernels with forward and backward passes. Loops over independent
// output planes are OpenMP-parallel; every output element is accumulated in
// a fixed order, so results are bit-identical for any thread count.
// Serial reference versions live in nn/reference.hpp.

#include <cstdint>
#include <span>
#include <vector>

#include "mrinet/rng.hpp"
#include "mrinet/tensor.hpp"

namespace mrinet::nn {

enum class Mode { Train, Eval };

// --- 3x3 convolution, stride 1, zero padding 1 (cross-correlation) ---

/// x [N,C,H,W], weight [O,C,3,3], bias [O] -> [N,O,H,W]. Throws ShapeMismatch.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x,
                              const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias);

template <typename T>
struct ConvGrads {
  BasicTensor<T> dx;  // empty when not requested
  BasicTensor<T> dweight;
  BasicTensor<T> dbias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy, bool need_dx = true);

// --- 2x2 max pooling, stride 2 ---

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// Ties route to the first element of the window in row-major order.
/// Throws OddSpatialDim when H or W is odd.
template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> maxpool2_backward(std::span<const std::uint32_t> argmax,
                                 const Shape& input_shape,
                                 const BasicTensor<T>& dy);

// --- global average pooling ---

/// [N,C,H,W] -> [N,C]
template <typename T>
BasicTensor<T> gap_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> gap_backward(const Shape& input_shape, const BasicTensor<T>& dy);

// --- ReLU: max(0, x); subgradient at 0 is 0 ---

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& dy);

// --- fully connected: y = x W^T + b ---

/// x [N,in], weight [out,in], bias [out] -> [N,out]
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias);

template <typename T>
struct DenseGrads {
  BasicTensor<T> dx;
  BasicTensor<T> dweight;
  BasicTensor<T> dbias;
};

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy);

// --- inverted dropout ---

template <typename T>
struct DropoutResult {
  BasicTensor<T> output;
  std::vector<std::uint8_t> keep;  // 1 = survived
  T scale = T{1};
};

/// Train mode drops each element with probability p (one uniform draw per
/// element, row-major; no draws when p == 0) and scales survivors by
/// 1/(1-p). Eval mode is the identity. Throws InvalidProbability.
template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& x, double p, Mode mode,
                                 Rng& rng);

template <typename T>
BasicTensor<T> dropout_backward(std::span<const std::uint8_t> keep, T scale,
                                const BasicTensor<T>& dy);

// --- softmax and categorical cross-entropy ---

/// Softmax along the last axis, max-subtracted.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& z);

template <typename T>
struct LossResult {
  T loss{};
  BasicTensor<T> dlogits;
};

/// loss = -(1/N) sum(targets * log(max(softmax(logits), 1e-12)));
/// dlogits = (softmax(logits) - targets) / N. Throws BadTargets unless every
/// target row is one-hot.
template <typename T>
LossResult<T> softmax_ce_loss(const BasicTensor<T>& logits,
                              const BasicTensor<T>& targets);

}  // namespace mrinet::nn
