#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrinet/checkpoint.hpp"
#include "mrinet/config.hpp"
#include "mrinet/dataset.hpp"
#include "mrinet/image.hpp"
#include "mrinet/model.hpp"

namespace mrinet {

/// A preprocessed (cropped, resized, still 8-bit) image with its label.
struct Sample {
  std::string id;
  GrayImage8 image;
  Label label = Label::No;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  RunHistory history;
  WeightTable best;  // highest validation accuracy, earliest epoch on ties
  WeightTable final_weights;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Loads and preprocesses every manifest entry. With `parallel`, images are
/// processed concurrently; output order and error reporting follow the
/// manifest order either way. Errors carry the offending path.
std::vector<Sample> prepare_samples(const DatasetManifest& manifest,
                                    const PreprocessOptions& options,
                                    bool parallel = false);

/// [N, channels, S, S]: each image z-scored, replicated across channels.
Tensor make_batch(std::span<const GrayImage8* const> images, std::size_t channels);

/// [N, 2] one-hot rows indexed by Label.
Tensor one_hot(std::span<const Label> labels);

/// Index of the largest value per row; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const Tensor& scores);

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Eval-mode loss and accuracy, no augmentation.
LossAccuracy evaluate_samples(const Model& model, std::span<const Sample> samples,
                              std::size_t batch_size);

/// Runs the training loop on an initialized model. Per epoch: seeded shuffle,
/// batches of batch_size (short final batch kept), per-image augmentation,
/// train-mode forward, softmax cross-entropy, backward, Adam (frozen layers
/// skipped), then eval-mode validation. Throws NonFiniteLoss.
TrainResult train_model(Model& model, std::span<const Sample> train,
                        std::span<const Sample> val, const TrainConfig& cfg,
                        const EpochCallback& on_epoch = {});

/// Model for `cfg` with He-initialized weights (seeded from cfg.seed), the
/// optional weight file loaded on top, and the freeze policy applied.
Model initialize_model(const TrainConfig& cfg,
                       const std::optional<std::filesystem::path>& init_weights = {});

/// End to end: preprocess the splits, train, and write best.nnck, final.nnck,
/// history.csv and config.json into out_dir.
TrainResult run_training(const PipelineConfig& cfg, const DatasetSplits& splits,
                         const std::filesystem::path& out_dir,
                         const std::optional<std::filesystem::path>& init_weights = {},
                         const EpochCallback& on_epoch = {}, bool parallel = false);

}  // namespace mrinet
