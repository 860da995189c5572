#include <filesystem>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "mrinet/error.hpp"
#include "mrinet/image.hpp"
#include "mrinet/rng.hpp"

using namespace mrinet;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("read_pgm binary and ascii") {
  auto p5 = bytes_of("P5\n2 2\n255\n");
  for (int v : {0, 128, 255, 7}) p5.push_back(static_cast<std::uint8_t>(v));
  const GrayImage8 a = read_pgm(p5);
  CHECK(a.width == 2);
  CHECK(a.height == 2);
  CHECK(a.pixels == std::vector<std::uint8_t>{0, 128, 255, 7});

  const GrayImage8 b = read_pgm(bytes_of("P2\n1 1\n255\n42\n"));
  CHECK(b.width == 1);
  CHECK(b.pixels == std::vector<std::uint8_t>{42});
}

TEST_CASE("read_pgm comments and whitespace") {
  const GrayImage8 img = read_pgm(bytes_of("P2 # c\n# full line\n2\t1 255\n 1   2 "));
  CHECK(img.pixels == std::vector<std::uint8_t>{1, 2});
}

TEST_CASE("read_pgm errors") {
  CHECK(kind_of([] { read_pgm(bytes_of("P6\n1 1\n255\n\x01\x02\x03")); }) == ErrorKind::BadMagic);
  CHECK(kind_of([] { read_pgm(bytes_of("")); }) == ErrorKind::BadMagic);
  CHECK(kind_of([] { read_pgm(bytes_of("P5\n1 1\n65535\n\x01\x02")); }) == ErrorKind::HeaderParse);
  CHECK(kind_of([] { read_pgm(bytes_of("P5\n2 2\n255\n\x01")); }) == ErrorKind::Truncated);
  CHECK(kind_of([] { read_pgm(bytes_of("P2\n2 1\n255\n1")); }) == ErrorKind::Truncated);
  CHECK(kind_of([] { read_pgm(bytes_of("P2\n1 1\n255\n300")); }) == ErrorKind::HeaderParse);
  CHECK(kind_of([] { read_pgm(bytes_of("P5\nx 1\n255\n")); }) == ErrorKind::HeaderParse);
  CHECK(kind_of([] { read_pgm(bytes_of("P5\n0 1\n255\n")); }) == ErrorKind::HeaderParse);
}

TEST_CASE("write_pgm format") {
  const GrayImage8 one(1, 1, std::uint8_t{0});
  auto expected = bytes_of("P5\n1 1\n255\n");
  expected.push_back(0);
  CHECK(write_pgm(one) == expected);

  const GrayImage8 two_by_three(2, 3, std::uint8_t{9});
  const auto out = write_pgm(two_by_three);
  const std::string header = "P5\n2 3\n255\n";
  CHECK(std::string(out.begin(), out.begin() + static_cast<long>(header.size())) == header);
  CHECK(out.size() - header.size() == 6);
}

TEST_CASE("pgm round trip on random images") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t w = 1 + rng.below(40), h = 1 + rng.below(40);
    GrayImage8 img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    CHECK(read_pgm(write_pgm(img)) == img);
  }
}

TEST_CASE("GrayImage8 validates its pixel count") {
  CHECK(kind_of([] { GrayImage8(2, 2, std::vector<std::uint8_t>(3)); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("image_to_tensor copies values") {
  const GrayImage8 img(2, 2, std::vector<std::uint8_t>{0, 255, 128, 64});
  const Tensor t = image_to_tensor(img);
  CHECK(t.shape() == Shape{1, 2, 2});
  CHECK(to_vec(t) == std::vector<float>{0.0f, 255.0f, 128.0f, 64.0f});

  const Tensor z = image_to_tensor(GrayImage8(224, 224, std::uint8_t{0}));
  CHECK(z.shape() == Shape{1, 224, 224});
  for (float v : z.values()) CHECK(v == 0.0f);
}

TEST_CASE("load and save through the filesystem") {
  const auto dir = std::filesystem::temp_directory_path() / "mrinet_imageio_test";
  std::filesystem::create_directories(dir);
  const GrayImage8 img(3, 2, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6});
  save_pgm(img, dir / "a.pgm");
  CHECK(load_pgm(dir / "a.pgm") == img);
  CHECK(kind_of([&] { load_pgm(dir / "missing.pgm"); }) == ErrorKind::Io);
  std::filesystem::remove_all(dir);
}
