#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mrinet/nn/adam.hpp"
#include "mrinet/nn/kernels.hpp"
#include "mrinet/rng.hpp"
#include "mrinet/tensor.hpp"

namespace mrinet {

enum class LayerKind { Conv, Relu, MaxPool, Gap, Dense, Dropout, Softmax };

struct LayerSpec {
  LayerKind kind;
  std::size_t units = 0;  // conv output channels / dense output features
  double p = 0.0;         // dropout probability

  static LayerSpec conv(std::size_t channels) { return {LayerKind::Conv, channels}; }
  static LayerSpec relu() { return {LayerKind::Relu}; }
  static LayerSpec maxpool() { return {LayerKind::MaxPool}; }
  static LayerSpec gap() { return {LayerKind::Gap}; }
  static LayerSpec dense(std::size_t features) { return {LayerKind::Dense, features}; }
  static LayerSpec dropout(double prob) { return {LayerKind::Dropout, 0, prob}; }
  static LayerSpec softmax() { return {LayerKind::Softmax}; }
};

// Runtime layers. Each caches what its backward pass needs from the last
// train-mode forward.

struct ConvLayer {
  Tensor weight;  // [out, in, 3, 3]
  Tensor bias;    // [out]
  Tensor grad_weight;
  Tensor grad_bias;
  bool frozen = false;
  Tensor input;
};

struct ReluLayer {
  Tensor input;
};

struct MaxPoolLayer {
  Shape input_shape;
  std::vector<std::uint32_t> argmax;
};

struct GapLayer {
  Shape input_shape;
};

struct DenseLayer {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
  Tensor grad_weight;
  Tensor grad_bias;
  bool frozen = false;
  Tensor input;
};

struct DropoutLayer {
  double p = 0.0;
  std::vector<std::uint8_t> keep;
  float scale = 1.0f;
};

struct SoftmaxLayer {};

using Layer = std::variant<ConvLayer, ReluLayer, MaxPoolLayer, GapLayer,
                           DenseLayer, DropoutLayer, SoftmaxLayer>;

enum class FreezePolicy { None, FreezeFeatures };

class Model {
 public:
  /// Instantiates the specs for [N, input_channels, input_size, input_size]
  /// inputs. Weights start at zero; call init_weights. Throws InvalidConfig
  /// or OddSpatialDim if the stack is not shape-compatible.
  Model(std::vector<LayerSpec> specs, std::size_t input_channels,
        std::size_t input_size);

  /// Class probabilities [N, num_classes]. Train mode engages dropout and
  /// caches activations for backward.
  Tensor forward(const Tensor& batch, nn::Mode mode);

  /// Everything except the final softmax.
  Tensor forward_logits(const Tensor& batch, nn::Mode mode);

  /// Eval-mode logits without touching any cached state.
  Tensor predict_logits(const Tensor& batch) const;

  /// Backpropagates d(loss)/d(logits) from the last train-mode forward and
  /// fills every layer's grad_weight / grad_bias, frozen layers included.
  void backward(const Tensor& grad_logits);

  /// Parameters in layer order: weight then bias.
  std::vector<nn::ParameterRef> parameters();

  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
  std::vector<std::pair<std::string, Tensor*>> named_tensors();

  void apply_freeze_policy(FreezePolicy policy);

  /// He-normal weights (std = sqrt(2 / fan_in)), zero biases. Layers are
  /// filled in order, weights row-major, two draws per value.
  void init_weights(Rng& rng);

  void set_dropout_seed(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

  std::size_t parameter_count() const;
  std::size_t trainable_parameter_count() const;
  std::size_t count(LayerKind kind) const;

  /// Output shape of every layer for a batch of `batch` images.
  std::vector<Shape> shape_trace(std::size_t batch = 1) const;

  std::size_t input_channels() const noexcept { return input_channels_; }
  std::size_t input_size() const noexcept { return input_size_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

 private:
  void check_input(const Tensor& batch) const;

  std::vector<LayerSpec> specs_;
  std::vector<Layer> layers_;
  std::vector<std::string> names_;  // parameter prefix per layer, "" if none
  std::size_t input_channels_;
  std::size_t input_size_;
  std::size_t num_classes_ = 0;
  Rng dropout_rng_{0};
};

/// Conv blocks [64,64] [128,128] [256x3] [512x3] [512x3] with max-pooling
/// after the first four, GAP in place of the fifth pool, then
/// Dropout(0.3) Dense256 ReLU Dropout(0.3) Dense256 ReLU Dense(num_classes)
/// Softmax.
Model build_vgg16(std::size_t num_classes = 2, std::size_t input_channels = 1,
                  std::size_t input_size = 224);

/// Conv [8] pool [16] pool [32] pool, GAP, Dropout(0.3) Dense32 ReLU
/// Dropout(0.3) Dense(num_classes) Softmax. input_size must be a multiple of 8.
Model build_vgg_tiny(std::size_t input_size = 64, std::size_t num_classes = 2,
                     std::size_t input_channels = 1);

}  // namespace mrinet
