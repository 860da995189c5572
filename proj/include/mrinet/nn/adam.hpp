#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrinet/tensor.hpp"

namespace mrinet::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// A trainable tensor with its gradient. Frozen parameters are skipped by the
/// optimizer entirely: no moment update and no write to the value.
struct ParameterRef {
  std::string name;
  Tensor* value = nullptr;
  const Tensor* grad = nullptr;
  bool frozen = false;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// t <- t+1, then per unfrozen parameter:
  ///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
  ///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
  /// The parameter list must keep the same order and shapes across calls.
  void step(std::span<const ParameterRef> params);

  std::int64_t step_count() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

  /// First/second moments of parameter `index` (empty until first update).
  const std::vector<float>& first_moment(std::size_t index) const {
    return moments_.at(index).m;
  }
  const std::vector<float>& second_moment(std::size_t index) const {
    return moments_.at(index).v;
  }

 private:
  struct Moments {
    std::vector<float> m;
    std::vector<float> v;
  };

  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Moments> moments_;
};

}  // namespace mrinet::nn
