#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "mrinet/checkpoint.hpp"
#include "mrinet/config.hpp"
#include "mrinet/csv.hpp"
#include "mrinet/dataset.hpp"
#include "mrinet/evaluation.hpp"
#include "mrinet/report.hpp"
#include "mrinet/synthetic.hpp"
#include "mrinet/training.hpp"
#include "test_util.hpp"

using namespace mrinet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void touch_pgm(const fs::path& p) { save_pgm(GrayImage8(2, 2, std::uint8_t{100}), p); }

DatasetManifest fake_manifest(std::size_t yes, std::size_t no) {
  DatasetManifest m;
  for (std::size_t i = 0; i < yes; ++i) m.entries.push_back({"yes/" + std::to_string(1000 + i), Label::Yes});
  for (std::size_t i = 0; i < no; ++i) m.entries.push_back({"no/" + std::to_string(1000 + i), Label::No});
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PipelineConfig tiny_config(std::size_t epochs) {
  PipelineConfig cfg;
  cfg.train.architecture = Architecture::VggTiny;
  cfg.train.input_size = 32;
  cfg.train.epochs = epochs;
  cfg.train.freeze_policy = FreezePolicy::None;
  cfg.finalize();
  return cfg;
}

std::vector<Sample> synth_samples(std::size_t yes, std::size_t no, std::uint64_t seed, std::size_t size) {
  std::vector<Sample> out;
  PreprocessOptions opt;
  opt.out_size = size;
  SyntheticConfig sc;
  sc.size = 48;
  sc.head_rx = 17;
  sc.head_ry = 20;
  sc.max_offset = 3;
  sc.tumor_radius_lo = 3;
  sc.tumor_radius_hi = 4;
  std::size_t i = 0;
  for (const auto& li : synth_dataset(yes, no, seed, sc))
    out.push_back({"img" + std::to_string(i++), prepare_image(li.image, opt).image, li.label});
  return out;
}

}  // namespace

TEST_CASE("scan_dataset") {
  TempDir dir("mrinet_scan_test");
  fs::create_directories(dir.path / "yes");
  fs::create_directories(dir.path / "no");
  for (int i = 0; i < 155; ++i) touch_pgm(dir.path / "yes" / ("y" + std::to_string(i) + ".pgm"));
  std::ofstream(dir.path / "yes" / "notes.txt") << "ignored";
  CHECK(kind_of([&] { scan_dataset(dir.path); }) == ErrorKind::EmptyClass);
  for (int i = 0; i < 98; ++i) touch_pgm(dir.path / "no" / ("n" + std::to_string(i) + ".pgm"));
  const DatasetManifest m = scan_dataset(dir.path);
  CHECK(m.count(Label::Yes) == 155);
  CHECK(m.count(Label::No) == 98);
  CHECK(scan_dataset(dir.path) == m);
  CHECK(std::is_sorted(m.entries.begin(), m.entries.end(),
                       [](const auto& a, const auto& b) { return a.path < b.path; }));
  CHECK(kind_of([&] { scan_dataset(dir.path / "nothing"); }) == ErrorKind::MissingDir);
}

TEST_CASE("stratified_split sizes and partition") {
  const DatasetManifest m = fake_manifest(155, 98);
  const DatasetSplits s = stratified_split(m, SplitConfig{});
  CHECK(s.train.size() == 205);
  CHECK(s.val.size() == 24);
  CHECK(s.test.size() == 24);
  CHECK(s.train.count(Label::Yes) == 125);
  CHECK(s.val.count(Label::Yes) == 15);
  CHECK(s.test.count(Label::Yes) == 15);
  CHECK(s.train.count(Label::No) == 80);
  CHECK(s.val.count(Label::No) == 9);
  CHECK(s.test.count(Label::No) == 9);

  std::set<fs::path> seen;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (const auto& e : part->entries) CHECK(seen.insert(e.path).second);
  CHECK(seen.size() == 253);

  CHECK(stratified_split(m, SplitConfig{}) == s);
  SplitConfig other;
  other.seed = 43;
  const DatasetSplits t = stratified_split(m, other);
  CHECK(t.val.size() == 24);
  CHECK_FALSE(t.val == s.val);

  SplitConfig flat;
  flat.stratified = false;
  const DatasetSplits f = stratified_split(fake_manifest(5, 5), flat);
  CHECK(f.train.size() == 8);
  CHECK(f.val.size() == 1);
  CHECK(f.test.size() == 1);

  CHECK(kind_of([] { stratified_split(fake_manifest(10, 2), SplitConfig{}); }) == ErrorKind::ClassTooSmall);
  SplitConfig bad;
  bad.train = 0.7;
  CHECK(kind_of([&] { stratified_split(m, bad); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("manifest csv round trip") {
  TempDir dir("mrinet_manifest_test");
  DatasetManifest m = fake_manifest(3, 2);
  m.entries[0].path = "yes/with,comma \"quoted\".pgm";
  write_manifest(m, dir.path / "m.csv");
  CHECK(read_manifest(dir.path / "m.csv") == m);
}

TEST_CASE("csv parsing") {
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::format_row({"a", "b c"}) == "a,b c\r\n");
  const auto rows = csv::parse("h1,h2\r\n\"x,1\",\"multi\nline\"\r\n,\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == csv::Row{"x,1", "multi\nline"});
  CHECK(rows[2] == csv::Row{"", ""});
  CHECK(kind_of([] { csv::parse("\"open"); }) == ErrorKind::HeaderParse);
  for (double v : {0.1, 1.0 / 3.0, 0.9583333333333334, 1e-300, 123456.789}) {
    CHECK(csv::parse_double(csv::format_double(v)) == v);
  }
  CHECK(csv::format_double(HUGE_VAL) == "inf");
  CHECK(std::isinf(csv::parse_double("inf")));
}

TEST_CASE("config parsing") {
  const PipelineConfig d = parse_config("{}");
  CHECK(d.train.learning_rate == 1e-4);
  CHECK(d.train.epochs == 80);
  CHECK(d.train.batch_size == 16);
  CHECK(d.train.freeze_policy == FreezePolicy::FreezeFeatures);
  CHECK(d.preprocess.out_size == 224);

  const PipelineConfig c = parse_config(R"({"split": {"seed": 7},
      "preprocess": {"threshold": 50, "morph_iters": 1},
      "train": {"architecture": "vgg_tiny", "input_size": 64, "epochs": 3,
                "augment": {"max_rotation_deg": 5, "allow_vflip": false}}})");
  CHECK(c.split.seed == 7);
  CHECK(c.preprocess.threshold == 50);
  CHECK(c.preprocess.morph_iterations == 1);
  CHECK(c.preprocess.out_size == 64);
  CHECK(c.train.architecture == Architecture::VggTiny);
  CHECK(c.train.augment.max_rotation_deg == 5);
  CHECK_FALSE(c.train.augment.allow_vflip);
  CHECK(parse_config(dump_config(c)).train.epochs == 3);
  CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));

  CHECK(kind_of([] { parse_config(R"({"train": {"lr": 1}})"); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] { parse_config(R"({"train": {"batch_size": 0}})"); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] { parse_config(R"({"train": {"epochs": "x"}})"); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] { parse_config("{nope"); }) == ErrorKind::InvalidConfig);
  CHECK(kind_of([] { parse_config(R"({"train": {"architecture": "vgg_tiny", "input_size": 60}})"); }) ==
        ErrorKind::InvalidConfig);
}

TEST_CASE("training is deterministic and keeps frozen layers fixed") {
  const auto train = synth_samples(12, 12, 1, 32);
  const auto val = synth_samples(3, 3, 2, 32);
  PipelineConfig cfg = tiny_config(2);
  cfg.train.batch_size = 5;  // short final batch

  Model a = initialize_model(cfg.train);
  Model b = initialize_model(cfg.train);
  const TrainResult ra = train_model(a, train, val, cfg.train);
  const TrainResult rb = train_model(b, train, val, cfg.train);
  REQUIRE(ra.history.epochs.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(ra.history.epochs[e].train_loss == rb.history.epochs[e].train_loss);
    CHECK(ra.history.epochs[e].val_loss == rb.history.epochs[e].val_loss);
  }
  CHECK(ra.final_weights == rb.final_weights);
  CHECK(encode_checkpoint(ra.best) == encode_checkpoint(rb.best));

  cfg.train.freeze_policy = FreezePolicy::FreezeFeatures;
  Model f = initialize_model(cfg.train);
  const WeightTable init = export_weights(f);
  const TrainResult rf = train_model(f, train, val, cfg.train);
  for (std::size_t i = 0; i < init.size(); ++i) {
    if (init[i].name.rfind("conv", 0) == 0) {
      CHECK(init[i].tensor == rf.final_weights[i].tensor);
      CHECK(init[i].tensor == rf.best[i].tensor);
    }
  }
}

TEST_CASE("non-finite loss aborts with the batch position") {
  const auto train = synth_samples(4, 4, 3, 32);
  PipelineConfig cfg = tiny_config(1);
  Model m = initialize_model(cfg.train);
  for (auto& [name, t] : m.named_tensors())
    if (name == "fc2.bias") (*t)[0] = NAN;
  try {
    train_model(m, train, {}, cfg.train);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteLoss);
    CHECK(std::string(e.what()).find("epoch 1, batch 0") != std::string::npos);
  }
}

TEST_CASE("evaluation, prediction and reports") {
  TempDir dir("mrinet_eval_test");
  const auto samples = synth_samples(6, 5, 4, 32);
  const PipelineConfig cfg = tiny_config(1);
  const Model model = initialize_model(cfg.train);

  const auto rows = score_samples(model, samples, 4);
  const auto par = score_samples(model, samples, 4, true);
  REQUIRE(rows.size() == samples.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].prob_yes == par[i].prob_yes);
    CHECK(rows[i].predicted == (rows[i].prob_yes > 0.5 ? Label::Yes : Label::No));
  }
  write_scores(rows, dir.path / "scores.csv");
  const auto back = read_scores(dir.path / "scores.csv");
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i].prob_yes == rows[i].prob_yes);

  const MetricsReport r = report_from_scores(rows);
  RunHistory h;
  h.epochs.push_back({1, 0.5, 0.75, 0.25, 1.0, 3.0});
  emit_report(r, &h, dir.path / "a");
  emit_report(r, &h, dir.path / "b");
  for (const char* f : {"metrics.csv", "roc.csv", "pr.csv", "confusion.csv", "history.csv", "roc.svg"}) {
    CHECK(fs::exists(dir.path / "a" / f));
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  for (const char* f : {"metrics.csv", "roc.csv", "pr.csv", "confusion.csv", "history.csv"}) {
    const auto parsed = csv::read_file(dir.path / "a" / f);
    REQUIRE_FALSE(parsed.empty());
    for (const auto& row : parsed) CHECK(row.size() == parsed.front().size());
  }
  CHECK(csv::read_file(dir.path / "a" / "history.csv").front() ==
        csv::Row{"epoch", "train_loss", "train_acc", "val_loss", "val_acc"});
  CHECK(read_history(dir.path / "a" / "history.csv").epochs[0].val_accuracy == 1.0);

  // Prediction: probabilities sum to 1, repeated calls agree.
  GrayImage8 raw = synth_dataset(1, 0, 9, {}).front().image;
  const Prediction p = predict_image(model, raw, cfg.preprocess);
  CHECK(std::abs(p.prob_yes + p.prob_no - 1.0) <= 1e-6);
  CHECK(p.label == (p.prob_yes > p.prob_no ? Label::Yes : Label::No));
  const Prediction q = predict_image(model, raw, cfg.preprocess);
  CHECK(q.prob_yes == p.prob_yes);
  CHECK(kind_of([&] { predict_image(model, GrayImage8(20, 20, std::uint8_t{0}), cfg.preprocess); }) ==
        ErrorKind::NoForeground);
}

TEST_CASE("report for a perfect classifier and a 15-0-1-8 matrix") {
  TempDir dir("mrinet_report_test");
  std::vector<ScoreRow> perfect;
  for (int i = 0; i < 4; ++i) perfect.push_back({"y" + std::to_string(i), Label::Yes, 0.9, Label::Yes});
  for (int i = 0; i < 3; ++i) perfect.push_back({"n" + std::to_string(i), Label::No, 0.1, Label::No});
  emit_report(report_from_scores(perfect), nullptr, dir.path);
  bool corner = false;
  for (const auto& row : csv::read_file(dir.path / "roc.csv"))
    corner = corner || (row[1] == "0" && row[2] == "1");
  CHECK(corner);
  CHECK(slurp(dir.path / "roc.svg").find("40.00,40.00") != std::string::npos);
  CHECK(csv::read_file(dir.path / "history.csv").size() == 1);

  std::vector<ScoreRow> derived;
  for (int i = 0; i < 15; ++i) derived.push_back({"y", Label::Yes, 0.8, Label::Yes});
  derived.push_back({"n", Label::No, 0.7, Label::Yes});
  for (int i = 0; i < 8; ++i) derived.push_back({"n", Label::No, 0.2, Label::No});
  emit_report(report_from_scores(derived), nullptr, dir.path);
  const auto metrics = csv::read_file(dir.path / "metrics.csv");
  CHECK(metrics[0] == csv::Row{"metric", "value"});
  CHECK(metrics[1][0] == "accuracy");
  CHECK(metrics[1][1].rfind("0.9583", 0) == 0);

  std::vector<ScoreRow> one_class{{"y", Label::Yes, 0.8, Label::Yes}, {"y", Label::Yes, 0.3, Label::No}};
  emit_report(report_from_scores(one_class), nullptr, dir.path);
  bool auc_undefined = false;
  for (const auto& row : csv::read_file(dir.path / "metrics.csv"))
    auc_undefined = auc_undefined || (row[0] == "auc" && row[1] == kUndefined);
  CHECK(auc_undefined);
}

TEST_CASE("run_training and run_evaluation through files") {
  TempDir dir("mrinet_run_test");
  SyntheticConfig sc;
  sc.size = 48;
  sc.head_rx = 17;
  sc.head_ry = 20;
  sc.max_offset = 3;
  write_synthetic_dataset(dir.path / "data", 8, 8, 5, sc);
  const PipelineConfig cfg = tiny_config(1);
  const auto splits = stratified_split(scan_dataset(dir.path / "data"), cfg.split);
  const TrainResult r = run_training(cfg, splits, dir.path / "run");
  for (const char* f : {"best.nnck", "final.nnck", "history.csv", "config.json"})
    CHECK(fs::exists(dir.path / "run" / f));
  CHECK(r.history.epochs.size() == 1);

  const auto before = read_file_bytes(dir.path / "run" / "best.nnck");
  const auto e1 = run_evaluation(dir.path / "run" / "best.nnck", splits.test, cfg);
  const auto e2 = run_evaluation(dir.path / "run" / "best.nnck", splits.test, cfg, true);
  CHECK(read_file_bytes(dir.path / "run" / "best.nnck") == before);
  REQUIRE(e1.scores.size() == e2.scores.size());
  for (std::size_t i = 0; i < e1.scores.size(); ++i) CHECK(e1.scores[i].prob_yes == e2.scores[i].prob_yes);
  CHECK(e1.report.confusion == e2.report.confusion);

  // Preprocessing errors name the file.
  save_pgm(GrayImage8(10, 10, std::uint8_t{0}), dir.path / "data" / "yes" / "zz_black.pgm");
  try {
    prepare_samples(scan_dataset(dir.path / "data"), cfg.preprocess);
    FAIL("expected NoForeground");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoForeground);
    CHECK(std::string(e.what()).find("zz_black.pgm") != std::string::npos);
  }

  PipelineConfig big = cfg;
  big.train.architecture = Architecture::Vgg16;
  big.finalize();
  CHECK(kind_of([&] { run_evaluation(dir.path / "run" / "best.nnck", splits.test, big); }) ==
        ErrorKind::ShapeMismatch);
}

TEST_CASE("synthetic generator is deterministic and labelled") {
  const auto a = synth_dataset(3, 2, 11);
  const auto b = synth_dataset(3, 2, 11);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].label == (i < 3 ? Label::Yes : Label::No));
  }
}
