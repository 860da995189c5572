#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mrinet/config.hpp"
#include "mrinet/dataset.hpp"
#include "mrinet/error.hpp"
#include "mrinet/evaluation.hpp"
#include "mrinet/preprocess.hpp"
#include "mrinet/report.hpp"
#include "mrinet/synthetic.hpp"
#include "mrinet/training.hpp"

namespace fs = std::filesystem;
using namespace mrinet;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "Overrides split and train seeds");
  cmd->add_option("--data-dir", c.data_dir, "Input directory");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--threads", c.threads, "Worker threads (1 = serial)")
      ->check(CLI::PositiveNumber);
}

PipelineConfig resolve(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
  if (c.seed) {
    cfg.split.seed = *c.seed;
    cfg.train.seed = *c.seed;
  }
  cfg.finalize();
  omp_set_num_threads(c.threads);
  return cfg;
}

fs::path require(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw Error(ErrorKind::InvalidConfig, std::string(flag) + " is required");
  }
  return value;
}

// A directory holding train.csv/val.csv/test.csv, or a yes/no dataset root
// that is split on the fly.
DatasetSplits load_splits(const fs::path& dir, const SplitConfig& cfg) {
  if (fs::exists(dir / "train.csv")) {
    return {read_manifest(dir / "train.csv"), read_manifest(dir / "val.csv"),
            read_manifest(dir / "test.csv")};
  }
  return stratified_split(scan_dataset(dir), cfg);
}

void print_report(const MetricsReport& r) {
  auto show = [](const char* name, const std::optional<double>& v) {
    if (v) std::printf("%-18s %.4f\n", name, *v);
    else std::printf("%-18s %s\n", name, kUndefined);
  };
  const auto& cm = r.confusion;
  std::printf("tp=%llu fn=%llu fp=%llu tn=%llu\n", static_cast<unsigned long long>(cm.tp),
              static_cast<unsigned long long>(cm.fn), static_cast<unsigned long long>(cm.fp),
              static_cast<unsigned long long>(cm.tn));
  show("accuracy", r.basic.accuracy);
  show("precision", r.basic.precision);
  show("recall", r.basic.recall);
  show("f1", r.basic.f1);
  show("kappa", r.kappa.kappa);
  show("auc", r.auc);
  show("average_precision", r.average_precision);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRI tumor classifier pipeline"};
  app.require_subcommand(1);

  Common common;
  std::size_t n_yes = 155, n_no = 98, synth_size = 96;
  std::string init, checkpoint, manifest, image, scores, history;
  std::optional<std::size_t> epochs;

  auto* synth = app.add_subcommand("synth", "Write a synthetic yes/no PGM dataset");
  add_common(synth, common);
  synth->add_option("--yes", n_yes, "Positive images");
  synth->add_option("--no", n_no, "Negative images");
  synth->add_option("--size", synth_size, "Image side in pixels");

  auto* split = app.add_subcommand("split", "Stratified train/val/test manifests");
  add_common(split, common);

  auto* prep = app.add_subcommand("preprocess", "Crop and resize a yes/no dataset");
  add_common(prep, common);

  auto* train = app.add_subcommand("train", "Train and write checkpoints");
  add_common(train, common);
  train->add_option("--init", init, "Initial weights (.nnck)");
  train->add_option("--epochs", epochs, "Overrides train.epochs");

  auto* eval = app.add_subcommand("eval", "Score a manifest and write scores.csv");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "Weights (.nnck)")->required();
  eval->add_option("--manifest", manifest, "Manifest CSV (default: <data-dir>/test.csv)");

  auto* predict = app.add_subcommand("predict", "Classify one image");
  add_common(predict, common);
  predict->add_option("--checkpoint", checkpoint, "Weights (.nnck)")->required();
  predict->add_option("--image", image, "PGM image")->required();

  auto* report = app.add_subcommand("report", "Metrics, curves and SVG from scores.csv");
  add_common(report, common);
  report->add_option("--scores", scores, "Scores CSV (default: <data-dir>/scores.csv)");
  report->add_option("--history", history, "Training history CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = resolve(common);
    const bool parallel = common.threads > 1;

    if (synth->parsed()) {
      SyntheticConfig sc;
      const double scale = static_cast<double>(synth_size) / static_cast<double>(sc.size);
      sc.size = synth_size;
      sc.head_rx *= scale;
      sc.head_ry *= scale;
      write_synthetic_dataset(require(common.out, "--out"), n_yes, n_no,
                              common.seed.value_or(42), sc);
      std::printf("wrote %zu yes, %zu no to %s\n", n_yes, n_no, common.out.c_str());
    } else if (split->parsed()) {
      const fs::path out = require(common.out, "--out");
      const auto splits =
          stratified_split(scan_dataset(require(common.data_dir, "--data-dir")), cfg.split);
      fs::create_directories(out);
      write_manifest(splits.train, out / "train.csv");
      write_manifest(splits.val, out / "val.csv");
      write_manifest(splits.test, out / "test.csv");
      std::printf("train %zu, val %zu, test %zu\n", splits.train.size(), splits.val.size(),
                  splits.test.size());
    } else if (prep->parsed()) {
      const fs::path out = require(common.out, "--out");
      const auto samples =
          prepare_samples(scan_dataset(require(common.data_dir, "--data-dir")), cfg.preprocess,
                          parallel);
      for (const auto& s : samples) {
        const fs::path src(s.id);
        const fs::path dst = out / src.parent_path().filename() / src.filename();
        fs::create_directories(dst.parent_path());
        save_pgm(s.image, dst);
      }
      std::printf("preprocessed %zu images\n", samples.size());
    } else if (train->parsed()) {
      PipelineConfig tc = cfg;
      if (epochs) tc.train.epochs = *epochs;
      tc.finalize();
      const auto splits = load_splits(require(common.data_dir, "--data-dir"), tc.split);
      std::optional<fs::path> init_path;
      if (!init.empty()) init_path = init;
      const auto result = run_training(
          tc, splits, require(common.out, "--out"), init_path,
          [](const EpochRecord& e) {
            std::printf("epoch %zu  loss %.4f  acc %.4f  val_loss %.4f  val_acc %.4f  (%.1fs)\n",
                        e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy,
                        e.seconds);
            std::fflush(stdout);
          },
          parallel);
      std::printf("best epoch %zu, val accuracy %.4f\n", result.best_epoch,
                  result.best_val_accuracy);
    } else if (eval->parsed()) {
      const fs::path out = require(common.out, "--out");
      const fs::path m =
          manifest.empty() ? require(common.data_dir, "--data-dir") / "test.csv" : fs::path(manifest);
      const auto result = run_evaluation(checkpoint, read_manifest(m), cfg, parallel);
      fs::create_directories(out);
      write_scores(result.scores, out / "scores.csv");
      print_report(result.report);
    } else if (predict->parsed()) {
      const Prediction p = predict_single(checkpoint, image, cfg);
      std::printf("%s,%s\n", std::string(label_name(p.label)).c_str(),
                  csv::format_double(p.prob_yes).c_str());
    } else if (report->parsed()) {
      const fs::path s =
          scores.empty() ? require(common.data_dir, "--data-dir") / "scores.csv" : fs::path(scores);
      const MetricsReport r = report_from_scores(read_scores(s));
      std::optional<RunHistory> h;
      if (!history.empty()) h = read_history(history);
      emit_report(r, h ? &*h : nullptr, require(common.out, "--out"));
      print_report(r);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(error_kind_name(e.kind())).c_str(),
                 e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: Io: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
