#pragma once

// Serial reference kernels: one output element at a time, no OpenMP, no
// shifted-plane tricks. Kept for cross-checking the parallel kernels and as
// the baseline in kernels_bench.

#include "mrinet/nn/kernels.hpp"

namespace mrinet::nn::reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x,
                              const BasicTensor<T>& weight,
                              const BasicTensor<T>& bias);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy);

template <typename T>
PoolResult<T> maxpool2_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x,
                             const BasicTensor<T>& weight,
                             const BasicTensor<T>& dy);

}  // namespace mrinet::nn::reference
