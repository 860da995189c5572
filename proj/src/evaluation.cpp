#include "mrinet/evaluation.hpp"

#include <algorithm>
#include <cstdint>

#include "mrinet/checkpoint.hpp"
#include "mrinet/csv.hpp"
#include "mrinet/nn/kernels.hpp"
#include "mrinet/preprocess.hpp"

namespace mrinet {

namespace fs = std::filesystem;

namespace {

Label label_of(float no, float yes) { return yes > no ? Label::Yes : Label::No; }

}  // namespace

std::vector<ScoreRow> score_samples(const Model& model, std::span<const Sample> samples,
                                    std::size_t batch_size, bool parallel) {
  if (batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  std::vector<ScoreRow> rows(samples.size());
  const auto batches = static_cast<std::int64_t>((samples.size() + batch_size - 1) / batch_size);

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t b = 0; b < batches; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * batch_size;
    const std::size_t end = std::min(samples.size(), begin + batch_size);
    std::vector<const GrayImage8*> images;
    for (std::size_t i = begin; i < end; ++i) images.push_back(&samples[i].image);
    const Tensor probs =
        nn::softmax(model.predict_logits(make_batch(images, model.input_channels())));
    for (std::size_t i = begin; i < end; ++i) {
      const float no = probs[(i - begin) * 2];
      const float yes = probs[(i - begin) * 2 + 1];
      rows[i] = {samples[i].id, samples[i].label, static_cast<double>(yes), label_of(no, yes)};
    }
  }
  return rows;
}

MetricsReport report_from_scores(std::span<const ScoreRow> rows) {
  std::vector<ScoredSample> samples;
  std::vector<Label> predictions;
  for (const auto& r : rows) {
    samples.push_back({r.truth, r.prob_yes});
    predictions.push_back(r.predicted);
  }
  return build_report(samples, predictions);
}

void write_scores(std::span<const ScoreRow> rows, const fs::path& path) {
  std::vector<csv::Row> out{{"path", "label", "prob_yes", "predicted"}};
  for (const auto& r : rows) {
    out.push_back({r.id, std::string(label_name(r.truth)), csv::format_double(r.prob_yes),
                   std::string(label_name(r.predicted))});
  }
  csv::write_file(path, out);
}

std::vector<ScoreRow> read_scores(const fs::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows.front() != csv::Row{"path", "label", "prob_yes", "predicted"}) {
    throw Error(ErrorKind::HeaderParse, path.string() + ": bad scores header");
  }
  std::vector<ScoreRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw Error(ErrorKind::HeaderParse, path.string() + ": bad scores row");
    out.push_back({r[0], parse_label(r[1]), csv::parse_double(r[2]), parse_label(r[3])});
  }
  return out;
}

Prediction predict_image(const Model& model, const GrayImage8& raw,
                         const PreprocessOptions& options) {
  const GrayImage8 prepared = prepare_image(raw, options).image;
  const GrayImage8* ptr = &prepared;
  const Tensor probs = nn::softmax(
      model.predict_logits(make_batch(std::span(&ptr, 1), model.input_channels())));
  return {label_of(probs[0], probs[1]), static_cast<double>(probs[1]),
          static_cast<double>(probs[0])};
}

Model load_model(const fs::path& checkpoint, const TrainConfig& cfg) {
  Model model = make_model(cfg);
  import_weights(model, load_checkpoint(checkpoint));
  return model;
}

Prediction predict_single(const fs::path& checkpoint, const fs::path& image,
                          const PipelineConfig& cfg) {
  const Model model = load_model(checkpoint, cfg.train);
  const GrayImage8 raw = load_pgm(image);
  try {
    return predict_image(model, raw, cfg.preprocess);
  } catch (const Error& e) {
    throw Error(e.kind(), image.string() + ": " + e.what());
  }
}

EvaluationResult run_evaluation(const fs::path& checkpoint, const DatasetManifest& manifest,
                                const PipelineConfig& cfg, bool parallel) {
  const Model model = load_model(checkpoint, cfg.train);
  const auto samples = prepare_samples(manifest, cfg.preprocess, parallel);
  EvaluationResult result;
  result.scores = score_samples(model, samples, cfg.train.batch_size, parallel);
  result.report = report_from_scores(result.scores);
  return result;
}

}  // namespace mrinet
