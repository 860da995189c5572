#include "mrinet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>

#include "mrinet/augment.hpp"
#include "mrinet/preprocess.hpp"
#include "mrinet/report.hpp"
#include "mrinet/rng.hpp"

namespace mrinet {

namespace fs = std::filesystem;

namespace {

// Seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kOrderStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kAugmentStream = 3;

}  // namespace

std::vector<Sample> prepare_samples(const DatasetManifest& manifest,
                                    const PreprocessOptions& options,
                                    bool parallel) {
  const auto n = static_cast<std::int64_t>(manifest.entries.size());
  std::vector<Sample> samples(manifest.entries.size());
  std::vector<std::exception_ptr> errors(manifest.entries.size());

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const ManifestEntry& e = manifest.entries[static_cast<std::size_t>(i)];
    try {
      const GrayImage8 raw = load_pgm(e.path);
      samples[i] = {e.path.string(), prepare_image(raw, options).image, e.label};
    } catch (const Error& err) {
      errors[i] = std::make_exception_ptr(
          Error(err.kind(), e.path.string() + ": " + err.what()));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return samples;
}

Tensor make_batch(std::span<const GrayImage8* const> images, std::size_t channels) {
  if (images.empty()) throw Error(ErrorKind::Empty, "empty batch");
  const std::size_t h = images.front()->height;
  const std::size_t w = images.front()->width;
  Tensor batch({images.size(), channels, h, w});
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i]->height != h || images[i]->width != w) {
      throw Error(ErrorKind::ShapeMismatch, "batch images differ in size");
    }
    const NormalizedTensor norm = normalize_zscore(image_to_tensor(*images[i]));
    for (std::size_t c = 0; c < channels; ++c) {
      std::copy(norm.tensor.data(), norm.tensor.data() + plane,
                batch.data() + (i * channels + c) * plane);
    }
  }
  return batch;
}

Tensor one_hot(std::span<const Label> labels) {
  Tensor t({labels.size(), 2});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t[i * 2 + static_cast<std::size_t>(labels[i])] = 1.0f;
  }
  return t;
}

std::vector<std::size_t> argmax_rows(const Tensor& scores) {
  const std::size_t k = scores.dim(1);
  std::vector<std::size_t> out(scores.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const float* row = scores.data() + r * k;
    out[r] = static_cast<std::size_t>(std::max_element(row, row + k) - row);
  }
  return out;
}

namespace {

struct BatchView {
  std::vector<const GrayImage8*> images;
  std::vector<Label> labels;
};

BatchView view_of(std::span<const Sample> samples, std::size_t begin, std::size_t end) {
  BatchView v;
  for (std::size_t i = begin; i < end; ++i) {
    v.images.push_back(&samples[i].image);
    v.labels.push_back(samples[i].label);
  }
  return v;
}

std::size_t count_correct(const Tensor& logits, std::span<const Label> labels) {
  const auto pred = argmax_rows(logits);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    correct += pred[i] == static_cast<std::size_t>(labels[i]) ? 1 : 0;
  }
  return correct;
}

}  // namespace

LossAccuracy evaluate_samples(const Model& model, std::span<const Sample> samples,
                              std::size_t batch_size) {
  if (samples.empty()) return {std::nan(""), std::nan("")};
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    const BatchView v = view_of(samples, begin, end);
    const Tensor logits =
        model.predict_logits(make_batch(v.images, model.input_channels()));
    const auto loss = nn::softmax_ce_loss(logits, one_hot(v.labels));
    loss_sum += static_cast<double>(loss.loss) * static_cast<double>(end - begin);
    correct += count_correct(logits, v.labels);
  }
  const auto n = static_cast<double>(samples.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainResult train_model(Model& model, std::span<const Sample> train,
                        std::span<const Sample> val, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorKind::Empty, "training set is empty");
  for (const Sample& s : train) {
    if (s.image.width != model.input_size() || s.image.height != model.input_size()) {
      throw Error(ErrorKind::ShapeMismatch,
                  s.id + ": prepared image is not " + std::to_string(model.input_size()) +
                      " pixels square");
    }
  }

  nn::Adam adam(nn::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  Rng order_rng(derive_seed(cfg.seed, kOrderStream));
  model.set_dropout_seed(derive_seed(cfg.seed, kDropoutStream));

  TrainResult result;
  result.best_val_accuracy = -1.0;
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), order_rng);
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, kAugmentStream + epoch);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<GrayImage8> augmented;
      std::vector<Label> labels;
      augmented.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const Sample& s = train[order[k]];
        labels.push_back(s.label);
        if (cfg.augment_enabled) {
          Rng rng(derive_seed(epoch_seed, order[k]));
          const AugmentParams p =
              sample_params(cfg.augment, s.image.width, s.image.height, rng);
          augmented.push_back(augment_image(s.image, p));
        } else {
          augmented.push_back(s.image);
        }
      }
      std::vector<const GrayImage8*> ptrs;
      for (const auto& img : augmented) ptrs.push_back(&img);

      const Tensor batch = make_batch(ptrs, model.input_channels());
      const Tensor logits = model.forward_logits(batch, nn::Mode::Train);
      const auto loss = nn::softmax_ce_loss(logits, one_hot(labels));
      if (!std::isfinite(loss.loss)) {
        throw Error(ErrorKind::NonFiniteLoss,
                    "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(batch_index));
      }
      model.backward(loss.dlogits);
      const auto params = model.parameters();
      adam.step(params);

      loss_sum += static_cast<double>(loss.loss) * static_cast<double>(end - begin);
      correct += count_correct(logits, labels);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    const LossAccuracy v = evaluate_samples(model, val, cfg.batch_size);
    rec.val_loss = v.loss;
    rec.val_accuracy = v.accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.epochs.push_back(rec);

    const double score = std::isnan(rec.val_accuracy) ? rec.train_accuracy : rec.val_accuracy;
    if (score > result.best_val_accuracy) {
      result.best_val_accuracy = score;
      result.best_epoch = epoch;
      result.best = export_weights(model);
    }
    if (on_epoch) on_epoch(rec);
  }
  result.final_weights = export_weights(model);
  return result;
}

Model initialize_model(const TrainConfig& cfg,
                       const std::optional<fs::path>& init_weights) {
  Model model = make_model(cfg);
  Rng rng(derive_seed(cfg.seed, kInitStream));
  model.init_weights(rng);
  if (init_weights) import_weights(model, load_checkpoint(*init_weights));
  model.apply_freeze_policy(cfg.freeze_policy);
  return model;
}

TrainResult run_training(const PipelineConfig& cfg, const DatasetSplits& splits,
                         const fs::path& out_dir,
                         const std::optional<fs::path>& init_weights,
                         const EpochCallback& on_epoch, bool parallel) {
  fs::create_directories(out_dir);
  const auto train = prepare_samples(splits.train, cfg.preprocess, parallel);
  const auto val = prepare_samples(splits.val, cfg.preprocess, parallel);

  Model model = initialize_model(cfg.train, init_weights);
  TrainResult result = train_model(model, train, val, cfg.train, on_epoch);

  save_checkpoint(result.best, out_dir / "best.nnck");
  save_checkpoint(result.final_weights, out_dir / "final.nnck");
  write_history(result.history, out_dir / "history.csv");
  std::ofstream(out_dir / "config.json") << dump_config(cfg);
  return result;
}

}  // namespace mrinet
