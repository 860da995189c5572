#include "mrinet/nn/adam.hpp"

#include <cmath>

namespace mrinet::nn {

void Adam::step(std::span<const ParameterRef> params) {
  if (moments_.empty()) {
    moments_.resize(params.size());
  } else if (moments_.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "adam: parameter count changed between steps");
  }
  for (const auto& p : params) {
    if (p.value == nullptr || p.grad == nullptr ||
        p.value->shape() != p.grad->shape()) {
      throw Error(ErrorKind::ShapeMismatch,
                  "adam: gradient shape does not match parameter " + p.name);
    }
  }

  ++t_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParameterRef& p = params[i];
    if (p.frozen) continue;
    Moments& mom = moments_[i];
    if (mom.m.empty()) {
      mom.m.assign(p.value->size(), 0.0f);
      mom.v.assign(p.value->size(), 0.0f);
    } else if (mom.m.size() != p.value->size()) {
      throw Error(ErrorKind::ShapeMismatch,
                  "adam: moment shape does not match parameter " + p.name);
    }
    float* theta = p.value->data();
    const float* g = p.grad->data();
    for (std::size_t k = 0; k < mom.m.size(); ++k) {
      const double gk = g[k];
      const double m = b1 * mom.m[k] + (1.0 - b1) * gk;
      const double v = b2 * mom.v[k] + (1.0 - b2) * gk * gk;
      mom.m[k] = static_cast<float>(m);
      mom.v[k] = static_cast<float>(v);
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      theta[k] = static_cast<float>(
          theta[k] - cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon));
    }
  }
}

}  // namespace mrinet::nn
