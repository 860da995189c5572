#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrinet {

/// Machine-readable failure classes. The CLI prints the class name as the
/// first token of its one-line error message.
enum class ErrorKind {
  BadMagic,
  HeaderParse,
  Truncated,
  BadVersion,
  ChecksumMismatch,
  ShapeMismatch,
  NoForeground,
  OddSpatialDim,
  InvalidProbability,
  BadTargets,
  LengthMismatch,
  Empty,
  OneClassOnly,
  NoPositives,
  EmptyRow,
  MissingDir,
  EmptyClass,
  ClassTooSmall,
  NonFiniteLoss,
  InvalidConfig,
  Io,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mrinet
