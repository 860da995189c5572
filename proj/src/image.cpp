#include "mrinet/image.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

namespace mrinet {

GrayImage8::GrayImage8(std::size_t w, std::size_t h, std::uint8_t fill)
    : width(w), height(h), pixels(w * h, fill) {
  if (w == 0 || h == 0) {
    throw Error(ErrorKind::ShapeMismatch, "image dimensions must be >= 1");
  }
}

GrayImage8::GrayImage8(std::size_t w, std::size_t h,
                       std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (w == 0 || h == 0 || pixels.size() != w * h) {
    throw Error(ErrorKind::ShapeMismatch,
                "image pixel count " + std::to_string(pixels.size()) +
                    " does not match " + std::to_string(w) + "x" +
                    std::to_string(h));
  }
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads one decimal token.
  std::optional<unsigned long> next_number() {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    if (pos_ == start) return std::nullopt;
    unsigned long value = 0;
    const auto* first = reinterpret_cast<const char*>(bytes_.data() + start);
    const auto* last = reinterpret_cast<const char*>(bytes_.data() + pos_);
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage8 read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorKind::BadMagic, "not a P2/P5 PGM file");
  }
  const bool binary = bytes[1] == '5';
  HeaderReader reader(bytes);
  reader.advance(2);

  const auto width = reader.next_number();
  const auto height = reader.next_number();
  const auto maxval = reader.next_number();
  if (!width || !height || *width == 0 || *height == 0) {
    throw Error(ErrorKind::HeaderParse, "missing or invalid PGM width/height");
  }
  if (!maxval) {
    throw Error(ErrorKind::HeaderParse, "missing or invalid PGM maxval");
  }
  if (*maxval != 255) {
    throw Error(ErrorKind::HeaderParse,
                "unsupported PGM maxval " + std::to_string(*maxval) +
                    " (only 255 is accepted)");
  }
  const std::size_t count = *width * *height;
  std::vector<std::uint8_t> pixels;
  pixels.reserve(count);

  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (reader.at_end() || !std::isspace(reader.peek())) {
      throw Error(ErrorKind::Truncated, "PGM raster missing");
    }
    reader.advance(1);
    if (bytes.size() - reader.pos() < count) {
      throw Error(ErrorKind::Truncated,
                  "PGM payload has " + std::to_string(bytes.size() - reader.pos()) +
                      " bytes, expected " + std::to_string(count));
    }
    auto first = bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos());
    pixels.assign(first, first + static_cast<std::ptrdiff_t>(count));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto value = reader.next_number();
      if (!value) {
        if (reader.at_end()) {
          throw Error(ErrorKind::Truncated,
                      "P2 payload ended after " + std::to_string(i) + " of " +
                          std::to_string(count) + " values");
        }
        throw Error(ErrorKind::HeaderParse, "invalid P2 pixel value");
      }
      if (*value > 255) {
        throw Error(ErrorKind::HeaderParse, "P2 pixel value exceeds maxval");
      }
      pixels.push_back(static_cast<std::uint8_t>(*value));
    }
  }
  return GrayImage8(*width, *height, std::move(pixels));
}

std::vector<std::uint8_t> write_pgm(const GrayImage8& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

GrayImage8 load_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return read_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_pgm(const GrayImage8& img, const std::filesystem::path& path) {
  write_file_bytes(path, write_pgm(img));
}

Tensor image_to_tensor(const GrayImage8& img) {
  Tensor t({1, img.height, img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    t[i] = static_cast<float>(img.pixels[i]);
  }
  return t;
}

}  // namespace mrinet
