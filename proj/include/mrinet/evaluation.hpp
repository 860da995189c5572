#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrinet/config.hpp"
#include "mrinet/dataset.hpp"
#include "mrinet/metrics.hpp"
#include "mrinet/model.hpp"
#include "mrinet/training.hpp"

namespace mrinet {

struct ScoreRow {
  std::string id;
  Label truth = Label::No;
  double prob_yes = 0.0;
  Label predicted = Label::No;
};

/// Eval-mode scores in sample order. With `parallel`, batches run
/// concurrently; the result is identical to the serial run.
std::vector<ScoreRow> score_samples(const Model& model, std::span<const Sample> samples,
                                    std::size_t batch_size = 16, bool parallel = false);

/// Report from a score table: hard labels from `predicted`, curves from prob_yes.
MetricsReport report_from_scores(std::span<const ScoreRow> rows);

void write_scores(std::span<const ScoreRow> rows, const std::filesystem::path& path);
std::vector<ScoreRow> read_scores(const std::filesystem::path& path);

struct Prediction {
  Label label = Label::No;
  double prob_yes = 0.0;
  double prob_no = 0.0;
};

/// Full preprocessing then an eval-mode forward. Label is the argmax with
/// ties going to NO.
Prediction predict_image(const Model& model, const GrayImage8& raw,
                         const PreprocessOptions& options);

/// Builds the configured model and loads weights from `checkpoint`.
Model load_model(const std::filesystem::path& checkpoint, const TrainConfig& cfg);

Prediction predict_single(const std::filesystem::path& checkpoint,
                          const std::filesystem::path& image, const PipelineConfig& cfg);

struct EvaluationResult {
  MetricsReport report;
  std::vector<ScoreRow> scores;
};

EvaluationResult run_evaluation(const std::filesystem::path& checkpoint,
                                const DatasetManifest& manifest, const PipelineConfig& cfg,
                                bool parallel = false);

}  // namespace mrinet
