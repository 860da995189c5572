#include "mrinet/model.hpp"

#include <cmath>
#include <type_traits>

namespace mrinet {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

[[noreturn]] void bad_stack(const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, "model: " + what);
}

}  // namespace

Model::Model(std::vector<LayerSpec> specs, std::size_t input_channels,
             std::size_t input_size)
    : specs_(std::move(specs)),
      input_channels_(input_channels),
      input_size_(input_size) {
  if (input_channels == 0 || input_size == 0) bad_stack("empty input");
  // Walk the stack with a symbolic [C, H, W] or [F] shape.
  Shape shape{input_channels, input_size, input_size};
  std::size_t conv_index = 0;
  std::size_t dense_index = 0;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& spec = specs_[i];
    std::string name;
    switch (spec.kind) {
      case LayerKind::Conv: {
        if (shape.size() != 3) bad_stack("conv after flattening layer");
        if (spec.units == 0) bad_stack("conv with zero channels");
        ConvLayer conv;
        conv.weight = Tensor({spec.units, shape[0], 3, 3});
        conv.bias = Tensor({spec.units});
        layers_.emplace_back(std::move(conv));
        name = "conv" + std::to_string(++conv_index);
        shape[0] = spec.units;
        break;
      }
      case LayerKind::Relu:
        layers_.emplace_back(ReluLayer{});
        break;
      case LayerKind::MaxPool:
        if (shape.size() != 3) bad_stack("maxpool after flattening layer");
        if (shape[1] % 2 != 0 || shape[2] % 2 != 0) {
          throw Error(ErrorKind::OddSpatialDim,
                      "model: maxpool input " + std::to_string(shape[1]) + "x" +
                          std::to_string(shape[2]) + " is not even");
        }
        shape[1] /= 2;
        shape[2] /= 2;
        layers_.emplace_back(MaxPoolLayer{});
        break;
      case LayerKind::Gap:
        if (shape.size() != 3) bad_stack("gap after flattening layer");
        shape = {shape[0]};
        layers_.emplace_back(GapLayer{});
        break;
      case LayerKind::Dense: {
        if (shape.size() != 1) bad_stack("dense layer needs a GAP before it");
        if (spec.units == 0) bad_stack("dense with zero features");
        DenseLayer dense;
        dense.weight = Tensor({spec.units, shape[0]});
        dense.bias = Tensor({spec.units});
        layers_.emplace_back(std::move(dense));
        name = "fc" + std::to_string(++dense_index);
        shape = {spec.units};
        break;
      }
      case LayerKind::Dropout:
        if (!(spec.p >= 0.0 && spec.p < 1.0)) {
          throw Error(ErrorKind::InvalidProbability, "model: dropout p out of range");
        }
        layers_.emplace_back(DropoutLayer{spec.p, {}, 1.0f});
        break;
      case LayerKind::Softmax:
        if (i + 1 != specs_.size()) bad_stack("softmax must be the last layer");
        layers_.emplace_back(SoftmaxLayer{});
        break;
    }
    names_.push_back(std::move(name));
  }
  if (shape.size() != 1) bad_stack("stack must end in a flat [N, classes] output");
  num_classes_ = shape[0];
}

void Model::check_input(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.dim(1) != input_channels_ ||
      batch.dim(2) != input_size_ || batch.dim(3) != input_size_ ||
      batch.dim(0) == 0) {
    throw Error(ErrorKind::ShapeMismatch,
                "model expects [N," + std::to_string(input_channels_) + "," +
                    std::to_string(input_size_) + "," +
                    std::to_string(input_size_) + "], got " +
                    shape_string(batch.shape()));
  }
}

Tensor Model::forward(const Tensor& batch, nn::Mode mode) {
  const Tensor logits = mode == nn::Mode::Train ? forward_logits(batch, mode)
                                                : predict_logits(batch);
  return nn::softmax(logits);
}

Tensor Model::forward_logits(const Tensor& batch, nn::Mode mode) {
  if (mode == nn::Mode::Eval) return predict_logits(batch);
  check_input(batch);
  Tensor x = batch;
  for (Layer& layer : layers_) {
    if (std::holds_alternative<SoftmaxLayer>(layer)) break;
    x = std::visit(
        Overloaded{
            [&](ConvLayer& l) {
              l.input = std::move(x);
              return nn::conv2d_forward(l.input, l.weight, l.bias);
            },
            [&](ReluLayer& l) {
              l.input = std::move(x);
              return nn::relu_forward(l.input);
            },
            [&](MaxPoolLayer& l) {
              l.input_shape = x.shape();
              auto r = nn::maxpool2_forward(x);
              l.argmax = std::move(r.argmax);
              return std::move(r.output);
            },
            [&](GapLayer& l) {
              l.input_shape = x.shape();
              return nn::gap_forward(x);
            },
            [&](DenseLayer& l) {
              l.input = std::move(x);
              return nn::dense_forward(l.input, l.weight, l.bias);
            },
            [&](DropoutLayer& l) {
              auto r = nn::dropout_forward(x, l.p, mode, dropout_rng_);
              l.keep = std::move(r.keep);
              l.scale = r.scale;
              return std::move(r.output);
            },
            [&](SoftmaxLayer&) { return x; },
        },
        layer);
  }
  return x;
}

Tensor Model::predict_logits(const Tensor& batch) const {
  check_input(batch);
  Tensor x = batch;
  for (const Layer& layer : layers_) {
    if (std::holds_alternative<SoftmaxLayer>(layer)) break;
    x = std::visit(
        Overloaded{
            [&](const ConvLayer& l) { return nn::conv2d_forward(x, l.weight, l.bias); },
            [&](const ReluLayer&) { return nn::relu_forward(x); },
            [&](const MaxPoolLayer&) { return nn::maxpool2_forward(x).output; },
            [&](const GapLayer&) { return nn::gap_forward(x); },
            [&](const DenseLayer& l) { return nn::dense_forward(x, l.weight, l.bias); },
            [&](const DropoutLayer&) { return x; },
            [&](const SoftmaxLayer&) { return x; },
        },
        layer);
  }
  return x;
}

void Model::backward(const Tensor& grad_logits) {
  Tensor g = grad_logits;
  std::size_t end = layers_.size();
  if (end > 0 && std::holds_alternative<SoftmaxLayer>(layers_[end - 1])) --end;
  for (std::size_t i = end; i-- > 0;) {
    const bool first = i == 0;
    g = std::visit(
        Overloaded{
            [&](ConvLayer& l) {
              if (l.input.empty()) {
                throw Error(ErrorKind::ShapeMismatch,
                            "backward called without a train-mode forward");
              }
              auto grads = nn::conv2d_backward(l.input, l.weight, g, !first);
              l.grad_weight = std::move(grads.dweight);
              l.grad_bias = std::move(grads.dbias);
              return std::move(grads.dx);
            },
            [&](ReluLayer& l) { return nn::relu_backward(l.input, g); },
            [&](MaxPoolLayer& l) {
              return nn::maxpool2_backward<float>(l.argmax, l.input_shape, g);
            },
            [&](GapLayer& l) { return nn::gap_backward(l.input_shape, g); },
            [&](DenseLayer& l) {
              if (l.input.empty()) {
                throw Error(ErrorKind::ShapeMismatch,
                            "backward called without a train-mode forward");
              }
              auto grads = nn::dense_backward(l.input, l.weight, g);
              l.grad_weight = std::move(grads.dweight);
              l.grad_bias = std::move(grads.dbias);
              return std::move(grads.dx);
            },
            [&](DropoutLayer& l) {
              return nn::dropout_backward<float>(l.keep, l.scale, g);
            },
            [&](SoftmaxLayer&) { return g; },
        },
        layers_[i]);
  }
}

std::vector<nn::ParameterRef> Model::parameters() {
  std::vector<nn::ParameterRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto add = [&](auto& l) {
      if (l.grad_weight.shape() != l.weight.shape()) {
        l.grad_weight = Tensor(l.weight.shape());
        l.grad_bias = Tensor(l.bias.shape());
      }
      out.push_back({names_[i] + ".weight", &l.weight, &l.grad_weight, l.frozen});
      out.push_back({names_[i] + ".bias", &l.bias, &l.grad_bias, l.frozen});
    };
    if (auto* c = std::get_if<ConvLayer>(&layers_[i])) add(*c);
    if (auto* d = std::get_if<DenseLayer>(&layers_[i])) add(*d);
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Model::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto add = [&](const auto& l) {
      out.emplace_back(names_[i] + ".weight", &l.weight);
      out.emplace_back(names_[i] + ".bias", &l.bias);
    };
    if (const auto* c = std::get_if<ConvLayer>(&layers_[i])) add(*c);
    if (const auto* d = std::get_if<DenseLayer>(&layers_[i])) add(*d);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor*>> Model::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto add = [&](auto& l) {
      out.emplace_back(names_[i] + ".weight", &l.weight);
      out.emplace_back(names_[i] + ".bias", &l.bias);
    };
    if (auto* c = std::get_if<ConvLayer>(&layers_[i])) add(*c);
    if (auto* d = std::get_if<DenseLayer>(&layers_[i])) add(*d);
  }
  return out;
}

void Model::apply_freeze_policy(FreezePolicy policy) {
  const bool freeze = policy == FreezePolicy::FreezeFeatures;
  for (Layer& layer : layers_) {
    if (auto* c = std::get_if<ConvLayer>(&layer)) c->frozen = freeze;
    if (auto* d = std::get_if<DenseLayer>(&layer)) d->frozen = false;
  }
}

void Model::init_weights(Rng& rng) {
  auto he_fill = [&rng](Tensor& w, std::size_t fan_in) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : w.values()) v = static_cast<float>(stddev * rng.normal());
  };
  for (Layer& layer : layers_) {
    if (auto* c = std::get_if<ConvLayer>(&layer)) {
      he_fill(c->weight, c->weight.dim(1) * 9);
      c->bias.fill(0.0f);
    } else if (auto* d = std::get_if<DenseLayer>(&layer)) {
      he_fill(d->weight, d->weight.dim(1));
      d->bias.fill(0.0f);
    }
  }
}

std::size_t Model::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : named_tensors()) total += t->size();
  return total;
}

std::size_t Model::trainable_parameter_count() const {
  std::size_t total = 0;
  for (const Layer& layer : layers_) {
    if (const auto* c = std::get_if<ConvLayer>(&layer); c && !c->frozen) {
      total += c->weight.size() + c->bias.size();
    }
    if (const auto* d = std::get_if<DenseLayer>(&layer); d && !d->frozen) {
      total += d->weight.size() + d->bias.size();
    }
  }
  return total;
}

std::size_t Model::count(LayerKind kind) const {
  std::size_t n = 0;
  for (const LayerSpec& s : specs_) n += s.kind == kind ? 1 : 0;
  return n;
}

std::vector<Shape> Model::shape_trace(std::size_t batch) const {
  std::vector<Shape> out;
  Shape shape{batch, input_channels_, input_size_, input_size_};
  for (const LayerSpec& spec : specs_) {
    switch (spec.kind) {
      case LayerKind::Conv: shape[1] = spec.units; break;
      case LayerKind::MaxPool: shape[2] /= 2; shape[3] /= 2; break;
      case LayerKind::Gap: shape = {batch, shape[1]}; break;
      case LayerKind::Dense: shape = {batch, spec.units}; break;
      default: break;
    }
    out.push_back(shape);
  }
  return out;
}

namespace {

void append_conv_block(std::vector<LayerSpec>& specs, std::size_t channels,
                       std::size_t convs) {
  for (std::size_t i = 0; i < convs; ++i) {
    specs.push_back(LayerSpec::conv(channels));
    specs.push_back(LayerSpec::relu());
  }
}

}  // namespace

Model build_vgg16(std::size_t num_classes, std::size_t input_channels,
                  std::size_t input_size) {
  std::vector<LayerSpec> specs;
  const std::size_t widths[] = {64, 128, 256, 512, 512};
  const std::size_t depths[] = {2, 2, 3, 3, 3};
  for (std::size_t b = 0; b < 5; ++b) {
    append_conv_block(specs, widths[b], depths[b]);
    specs.push_back(b < 4 ? LayerSpec::maxpool() : LayerSpec::gap());
  }
  specs.push_back(LayerSpec::dropout(0.3));
  specs.push_back(LayerSpec::dense(256));
  specs.push_back(LayerSpec::relu());
  specs.push_back(LayerSpec::dropout(0.3));
  specs.push_back(LayerSpec::dense(256));
  specs.push_back(LayerSpec::relu());
  specs.push_back(LayerSpec::dense(num_classes));
  specs.push_back(LayerSpec::softmax());
  return Model(std::move(specs), input_channels, input_size);
}

Model build_vgg_tiny(std::size_t input_size, std::size_t num_classes,
                     std::size_t input_channels) {
  if (input_size == 0 || input_size % 8 != 0) {
    throw Error(ErrorKind::InvalidConfig,
                "vgg_tiny input size must be a positive multiple of 8");
  }
  std::vector<LayerSpec> specs;
  for (std::size_t width : {8u, 16u, 32u}) {
    append_conv_block(specs, width, 1);
    specs.push_back(LayerSpec::maxpool());
  }
  specs.push_back(LayerSpec::gap());
  specs.push_back(LayerSpec::dropout(0.3));
  specs.push_back(LayerSpec::dense(32));
  specs.push_back(LayerSpec::relu());
  specs.push_back(LayerSpec::dropout(0.3));
  specs.push_back(LayerSpec::dense(num_classes));
  specs.push_back(LayerSpec::softmax());
  return Model(std::move(specs), input_channels, input_size);
}

}  // namespace mrinet
