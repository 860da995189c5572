#include "mrinet/config.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include "json.hpp"

namespace mrinet {

using nlohmann::json;

std::string_view architecture_name(Architecture a) noexcept {
  return a == Architecture::Vgg16 ? "vgg16" : "vgg_tiny";
}

std::string_view freeze_policy_name(FreezePolicy p) noexcept {
  return p == FreezePolicy::FreezeFeatures ? "freeze_features" : "none";
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, "train: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (epochs == 0) fail("epochs must be >= 1");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (input_size == 0) fail("input_size must be >= 1");
  if (input_channels != 1 && input_channels != 3) fail("input_channels must be 1 or 3");
  if (architecture == Architecture::Vgg16 && input_size % 16 != 0) {
    fail("vgg16 input_size must be a multiple of 16");
  }
  if (architecture == Architecture::VggTiny && input_size % 8 != 0) {
    fail("vgg_tiny input_size must be a multiple of 8");
  }
  augment.validate();
}

void PipelineConfig::finalize() {
  split.validate();
  train.validate();
  preprocess.out_size = train.input_size;
}

namespace {

// Reads known keys from `obj`, rejecting anything else.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) {
      throw Error(ErrorKind::InvalidConfig, name_ + " must be a JSON object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    known_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidConfig,
                  name_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    known_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!known_.count(key)) {
        throw Error(ErrorKind::InvalidConfig, "unknown key " + name_ + "." + key);
      }
    }
  }

 private:
  const json& obj_;
  std::string name_;
  std::set<std::string> known_;
};

}  // namespace

PipelineConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  Section top(root, "config");

  if (const json* s = top.child("split")) {
    Section sec(*s, "split");
    sec.read("train", cfg.split.train);
    sec.read("val", cfg.split.val);
    sec.read("test", cfg.split.test);
    sec.read("seed", cfg.split.seed);
    sec.read("stratified", cfg.split.stratified);
    sec.finish();
  }
  if (const json* s = top.child("preprocess")) {
    Section sec(*s, "preprocess");
    int threshold = cfg.preprocess.threshold;
    sec.read("threshold", threshold);
    if (threshold < 0 || threshold > 255) {
      throw Error(ErrorKind::InvalidConfig, "preprocess.threshold must be in [0, 255]");
    }
    cfg.preprocess.threshold = static_cast<std::uint8_t>(threshold);
    sec.read("morph_iters", cfg.preprocess.morph_iterations);
    sec.read("reconstruct", cfg.preprocess.reconstruct);
    sec.finish();
  }
  if (const json* s = top.child("train")) {
    Section sec(*s, "train");
    TrainConfig& t = cfg.train;
    sec.read("learning_rate", t.learning_rate);
    sec.read("epochs", t.epochs);
    sec.read("batch_size", t.batch_size);
    sec.read("seed", t.seed);
    sec.read("augment_enabled", t.augment_enabled);
    sec.read("input_size", t.input_size);
    sec.read("input_channels", t.input_channels);
    std::string arch(architecture_name(t.architecture));
    sec.read("architecture", arch);
    if (arch == "vgg16") t.architecture = Architecture::Vgg16;
    else if (arch == "vgg_tiny") t.architecture = Architecture::VggTiny;
    else throw Error(ErrorKind::InvalidConfig, "train.architecture must be vgg16 or vgg_tiny");
    std::string freeze(freeze_policy_name(t.freeze_policy));
    sec.read("freeze_policy", freeze);
    if (freeze == "freeze_features") t.freeze_policy = FreezePolicy::FreezeFeatures;
    else if (freeze == "none") t.freeze_policy = FreezePolicy::None;
    else throw Error(ErrorKind::InvalidConfig, "train.freeze_policy must be freeze_features or none");
    if (const json* a = sec.child("augment")) {
      Section aug(*a, "train.augment");
      AugmentConfig& ac = t.augment;
      aug.read("max_rotation_deg", ac.max_rotation_deg);
      aug.read("shift_fraction", ac.shift_fraction);
      aug.read("brightness_lo", ac.brightness_lo);
      aug.read("brightness_hi", ac.brightness_hi);
      aug.read("shear_rad", ac.shear_rad);
      aug.read("allow_hflip", ac.allow_hflip);
      aug.read("allow_vflip", ac.allow_vflip);
      aug.read("symmetric_rotation", ac.symmetric_rotation);
      aug.finish();
    }
    sec.finish();
  }
  top.finish();
  cfg.finalize();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config(text);
}

std::string dump_config(const PipelineConfig& cfg) {
  const TrainConfig& t = cfg.train;
  const AugmentConfig& a = t.augment;
  json root = {
      {"split",
       {{"train", cfg.split.train},
        {"val", cfg.split.val},
        {"test", cfg.split.test},
        {"seed", cfg.split.seed},
        {"stratified", cfg.split.stratified}}},
      {"preprocess",
       {{"threshold", cfg.preprocess.threshold},
        {"morph_iters", cfg.preprocess.morph_iterations},
        {"reconstruct", cfg.preprocess.reconstruct}}},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"seed", t.seed},
        {"augment_enabled", t.augment_enabled},
        {"architecture", architecture_name(t.architecture)},
        {"freeze_policy", freeze_policy_name(t.freeze_policy)},
        {"input_size", t.input_size},
        {"input_channels", t.input_channels},
        {"augment",
         {{"max_rotation_deg", a.max_rotation_deg},
          {"shift_fraction", a.shift_fraction},
          {"brightness_lo", a.brightness_lo},
          {"brightness_hi", a.brightness_hi},
          {"shear_rad", a.shear_rad},
          {"allow_hflip", a.allow_hflip},
          {"allow_vflip", a.allow_vflip},
          {"symmetric_rotation", a.symmetric_rotation}}}}},
  };
  return root.dump(2) + "\n";
}

Model make_model(const TrainConfig& cfg) {
  cfg.validate();
  return cfg.architecture == Architecture::Vgg16
             ? build_vgg16(2, cfg.input_channels, cfg.input_size)
             : build_vgg_tiny(cfg.input_size, 2, cfg.input_channels);
}

}  // namespace mrinet
