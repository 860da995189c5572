#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mrinet/checkpoint.hpp"
#include "mrinet/model.hpp"
#include "mrinet/nn/adam.hpp"
#include "mrinet/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace mrinet;
using oracle::random_tensor;

namespace {

std::size_t conv_params(std::size_t in_channels) {
  const std::size_t widths[] = {64, 64, 128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512};
  std::size_t total = 0, in = in_channels;
  for (std::size_t w : widths) {
    total += (3 * 3 * in + 1) * w;
    in = w;
  }
  return total;
}

}  // namespace

TEST_CASE("vgg16 structure") {
  const Model m = build_vgg16(2, 3, 224);
  CHECK(m.count(LayerKind::Conv) == 13);
  CHECK(m.count(LayerKind::Dense) == 3);
  CHECK(m.count(LayerKind::Dropout) == 2);
  CHECK(m.count(LayerKind::Gap) == 1);
  CHECK(conv_params(3) == 14714688);
  CHECK(conv_params(1) == 14713536);
  const std::size_t head = 512 * 256 + 256 + 256 * 256 + 256 + 256 * 2 + 2;
  CHECK(head == 197634);
  CHECK(m.parameter_count() == conv_params(3) + head);
  CHECK(build_vgg16(2, 1, 224).parameter_count() == conv_params(1) + head);

  Model frozen = build_vgg16();
  frozen.apply_freeze_policy(FreezePolicy::FreezeFeatures);
  CHECK(frozen.trainable_parameter_count() == 197634);
  frozen.apply_freeze_policy(FreezePolicy::None);
  CHECK(frozen.trainable_parameter_count() == frozen.parameter_count());
}

TEST_CASE("vgg16 shape trace") {
  const Model m = build_vgg16(2, 1, 224);
  std::vector<std::size_t> pooled;
  const auto trace = m.shape_trace(1);
  for (std::size_t i = 0; i < m.specs().size(); ++i)
    if (m.specs()[i].kind == LayerKind::MaxPool) pooled.push_back(trace[i + 1][2]);
  CHECK(pooled == std::vector<std::size_t>{112, 56, 28, 14});
  CHECK(trace.back() == Shape{1, 2});
  CHECK(kind_of([] { build_vgg16(2, 1, 100); }) == ErrorKind::OddSpatialDim);
}

TEST_CASE("vgg_tiny forward") {
  Model m = build_vgg_tiny(64);
  Rng rng(1);
  m.init_weights(rng);
  // conv 1->8, 8->16, 16->32, dense 32->32, 32->2
  const std::size_t expected = (9 + 1) * 8 + (72 + 1) * 16 + (144 + 1) * 32 + 32 * 32 + 32 + 32 * 2 + 2;
  CHECK(expected == 7010);
  CHECK(m.parameter_count() == expected);

  const Tensor batch = random_tensor<float>({3, 1, 64, 64}, rng);
  const Tensor p = m.forward(batch, nn::Mode::Eval);
  CHECK(p.shape() == Shape{3, 2});
  for (std::size_t n = 0; n < 3; ++n) CHECK(std::abs(p[2 * n] + p[2 * n + 1] - 1.0f) <= 1e-6);
  CHECK(m.forward(batch, nn::Mode::Eval) == p);

  // Duplicated rows and permutations.
  Tensor dup({3, 1, 64, 64});
  const std::size_t plane = 64 * 64;
  const std::size_t order[] = {2, 0, 2};
  for (std::size_t n = 0; n < 3; ++n)
    std::copy(batch.data() + order[n] * plane, batch.data() + (order[n] + 1) * plane, dup.data() + n * plane);
  const Tensor q = m.forward(dup, nn::Mode::Eval);
  CHECK(q[0] == q[4]);
  CHECK(q[1] == q[5]);
  CHECK(q[0] == p[4]);
  CHECK(q[2] == p[0]);

  CHECK(kind_of([&] { m.forward(Tensor({1, 1, 32, 32}), nn::Mode::Eval); }) == ErrorKind::ShapeMismatch);
  CHECK(kind_of([] { build_vgg_tiny(60); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("init_weights") {
  Model a = build_vgg16(2, 1, 32), b = build_vgg16(2, 1, 32);
  Rng ra(9), rb(9);
  a.init_weights(ra);
  b.init_weights(rb);
  CHECK(export_weights(a) == export_weights(b));

  for (const auto& [name, t] : a.named_tensors()) {
    if (name.find(".bias") != std::string::npos) {
      for (float v : t->values()) CHECK(v == 0.0f);
    }
  }
  // fc2 has fan-in 256 and fc1 has 512 (GAP output).
  for (const auto& [name, t] : a.named_tensors()) {
    if (name != "fc1.weight") continue;
    CHECK(t->dim(1) == 512);
    double sq = 0;
    for (float v : t->values()) sq += static_cast<double>(v) * v;
    const double sd = std::sqrt(sq / static_cast<double>(t->size()));
    CHECK(std::abs(sd / std::sqrt(2.0 / 512.0) - 1.0) <= 0.10);
  }
}

TEST_CASE("freeze policy keeps conv tensors fixed under training") {
  Model m = build_vgg_tiny(32);
  Rng rng(3);
  m.init_weights(rng);
  m.apply_freeze_policy(FreezePolicy::FreezeFeatures);
  const WeightTable before = export_weights(m);
  nn::Adam adam(nn::AdamConfig{1e-2});
  m.set_dropout_seed(4);
  for (int step = 0; step < 5; ++step) {
    const Tensor x = random_tensor<float>({4, 1, 32, 32}, rng);
    Tensor t({4, 2});
    for (std::size_t n = 0; n < 4; ++n) t[2 * n + n % 2] = 1.0f;
    const auto loss = nn::softmax_ce_loss(m.forward_logits(x, nn::Mode::Train), t);
    m.backward(loss.dlogits);
    adam.step(m.parameters());
  }
  const WeightTable after = export_weights(m);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CAPTURE(before[i].name);
    if (before[i].name.rfind("conv", 0) == 0) CHECK(before[i].tensor == after[i].tensor);
    else if (before[i].name.find("weight") != std::string::npos) CHECK_FALSE(before[i].tensor == after[i].tensor);
  }
}

TEST_CASE("model gradient matches finite differences through the whole stack") {
  Model m({LayerSpec::conv(2), LayerSpec::relu(), LayerSpec::maxpool(), LayerSpec::gap(),
           LayerSpec::dense(3), LayerSpec::softmax()},
          1, 4);
  Rng rng(12);
  m.init_weights(rng);
  const Tensor x = random_tensor<float>({2, 1, 4, 4}, rng);
  const Tensor t({2, 3}, std::vector<float>{1, 0, 0, 0, 0, 1});
  const auto loss = nn::softmax_ce_loss(m.forward_logits(x, nn::Mode::Train), t);
  m.backward(loss.dlogits);
  const auto params = m.parameters();
  // Probe the dense bias in float: loose tolerance, this only wires up layers.
  Tensor& bias = *params.back().value;
  const Tensor& grad = *params.back().grad;
  for (std::size_t i = 0; i < bias.size(); ++i) {
    const float saved = bias[i];
    bias[i] = saved + 1e-2f;
    const double up = nn::softmax_ce_loss(m.predict_logits(x), t).loss;
    bias[i] = saved - 1e-2f;
    const double down = nn::softmax_ce_loss(m.predict_logits(x), t).loss;
    bias[i] = saved;
    CHECK(grad[i] == doctest::Approx((up - down) / 2e-2).epsilon(1e-2));
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  Model m = build_vgg_tiny(32);
  Rng rng(5);
  m.init_weights(rng);
  const auto bytes = encode_checkpoint(export_weights(m));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "NNCK");
  CHECK(decode_checkpoint(bytes) == export_weights(m));
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  const auto dir = std::filesystem::temp_directory_path() / "mrinet_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(m, dir / "a.nnck");
  Model loaded = build_vgg_tiny(32);
  import_weights(loaded, load_checkpoint(dir / "a.nnck"));
  save_checkpoint(loaded, dir / "b.nnck");
  CHECK(read_file_bytes(dir / "a.nnck") == read_file_bytes(dir / "b.nnck"));
  std::filesystem::remove_all(dir);

  for (std::size_t pos : {std::size_t{20}, bytes.size() / 2, bytes.size() - 5}) {
    auto bad = bytes;
    bad[pos] ^= 0x01;
    CHECK(kind_of([&] { decode_checkpoint(bad); }) == ErrorKind::ChecksumMismatch);
  }
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(kind_of([&] { decode_checkpoint(magic); }) == ErrorKind::BadMagic);
  auto version = bytes;
  version[4] = 2;
  CHECK(kind_of([&] { decode_checkpoint(version); }) == ErrorKind::BadVersion);
  CHECK(kind_of([&] { decode_checkpoint(std::span(bytes).first(10)); }) == ErrorKind::Truncated);

  // A valid CRC over a table whose framing is cut short.
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 30);
  const std::uint32_t crc = checkpoint_crc(cut);
  for (int i = 0; i < 4; ++i) cut.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  CHECK(kind_of([&] { decode_checkpoint(cut); }) == ErrorKind::Truncated);
}

TEST_CASE("import_weights rejects mismatched architectures") {
  Model tiny = build_vgg_tiny(32);
  Model big = build_vgg16(2, 1, 32);
  try {
    import_weights(big, export_weights(tiny));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
    CHECK(std::string(e.what()).find("conv1.weight") != std::string::npos);
  }
  // Nothing was written.
  Model fresh = build_vgg16(2, 1, 32);
  CHECK(export_weights(big) == export_weights(fresh));
}
