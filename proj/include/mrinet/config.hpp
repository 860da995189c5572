#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mrinet/augment.hpp"
#include "mrinet/dataset.hpp"
#include "mrinet/model.hpp"
#include "mrinet/preprocess.hpp"

namespace mrinet {

enum class Architecture { Vgg16, VggTiny };

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t epochs = 80;
  std::size_t batch_size = 16;
  std::uint64_t seed = 42;
  bool augment_enabled = true;
  AugmentConfig augment;
  FreezePolicy freeze_policy = FreezePolicy::FreezeFeatures;
  Architecture architecture = Architecture::Vgg16;
  std::size_t input_size = kDefaultInputSize;
  // 3 replicates the grayscale plane, for weights trained on RGB input.
  std::size_t input_channels = 1;

  void validate() const;
};

/// The JSON config document:
///   { "split": {...SplitConfig}, "preprocess": {threshold, morph_iters,
///     reconstruct}, "train": {...TrainConfig, "augment": {...}} }
/// Every section and key is optional; unknown keys are rejected.
struct PipelineConfig {
  SplitConfig split;
  PreprocessOptions preprocess;  // out_size mirrors train.input_size
  TrainConfig train;

  /// Validates all sections and syncs preprocess.out_size.
  void finalize();
};

PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string dump_config(const PipelineConfig& cfg);

std::string_view architecture_name(Architecture a) noexcept;
std::string_view freeze_policy_name(FreezePolicy p) noexcept;

/// Builds the configured architecture (weights still zero).
Model make_model(const TrainConfig& cfg);

}  // namespace mrinet
