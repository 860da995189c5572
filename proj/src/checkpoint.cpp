#include "mrinet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <set>

#include <zlib.h>

#include "mrinet/image.hpp"

namespace mrinet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

std::uint32_t checkpoint_crc(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk =
        std::min<std::size_t>(bytes.size() - offset, std::numeric_limits<uInt>::max());
    crc = crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const std::uint8_t* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::Truncated, "checkpoint ends inside a record");
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const WeightTable& table) {
  Writer w;
  w.put_bytes("NNCK", 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(table.size()));
  for (const NamedTensor& nt : table) {
    if (nt.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorKind::InvalidConfig, "tensor name too long: " + nt.name);
    }
    if (nt.tensor.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw Error(ErrorKind::InvalidConfig, "tensor rank too large: " + nt.name);
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(nt.name.size()));
    w.put_bytes(nt.name.data(), nt.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(nt.tensor.rank()));
    for (std::size_t d : nt.tensor.shape()) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    }
    w.put_bytes(nt.tensor.data(), nt.tensor.size() * sizeof(float));
  }
  w.put<std::uint32_t>(checkpoint_crc(w.bytes()));
  return std::move(w.bytes());
}

WeightTable decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorKind::Truncated, "checkpoint too short");
  if (std::memcmp(bytes.data(), "NNCK", 4) != 0) {
    throw Error(ErrorKind::BadMagic, "not an NNCK checkpoint");
  }
  if (bytes.size() < 16) throw Error(ErrorKind::Truncated, "checkpoint too short");
  Reader header(bytes.subspan(4));
  const auto version = header.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::BadVersion,
                "unsupported checkpoint version " + std::to_string(version));
  }
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (checkpoint_crc(body) != stored) {
    throw Error(ErrorKind::ChecksumMismatch, "checkpoint CRC-32 mismatch");
  }

  Reader r(body.subspan(8));
  const auto count = r.get<std::uint32_t>();
  WeightTable table;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    const auto* name_bytes = r.take(name_len);
    std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    if (!seen.insert(name).second) {
      throw Error(ErrorKind::ShapeMismatch, "duplicate tensor name " + name);
    }
    const auto ndim = r.get<std::uint8_t>();
    Shape shape(ndim);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    const std::size_t n = shape_size(shape);
    if (n > r.remaining() / sizeof(float)) {
      throw Error(ErrorKind::Truncated, "tensor " + name + " payload truncated");
    }
    std::vector<float> values(n);
    std::memcpy(values.data(), r.take(n * sizeof(float)), n * sizeof(float));
    table.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::Truncated, "unexpected bytes after last tensor");
  }
  return table;
}

WeightTable export_weights(const Model& model) {
  WeightTable table;
  for (const auto& [name, t] : model.named_tensors()) table.push_back({name, *t});
  return table;
}

void import_weights(Model& model, const WeightTable& table) {
  auto targets = model.named_tensors();
  // Validate everything before writing anything.
  std::vector<const Tensor*> sources;
  for (const auto& [name, t] : targets) {
    const NamedTensor* found = nullptr;
    for (const NamedTensor& nt : table) {
      if (nt.name == name) {
        found = &nt;
        break;
      }
    }
    if (found == nullptr) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint has no tensor " + name);
    }
    if (found->tensor.shape() != t->shape()) {
      throw Error(ErrorKind::ShapeMismatch,
                  "tensor " + name + ": checkpoint shape " +
                      shape_string(found->tensor.shape()) + ", model shape " +
                      shape_string(t->shape()));
    }
    sources.push_back(&found->tensor);
  }
  if (table.size() != targets.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                "checkpoint has " + std::to_string(table.size()) +
                    " tensors, model has " + std::to_string(targets.size()));
  }
  for (std::size_t i = 0; i < targets.size(); ++i) *targets[i].second = *sources[i];
}

void save_checkpoint(const WeightTable& table, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(table));
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  save_checkpoint(export_weights(model), path);
}

WeightTable load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace mrinet
