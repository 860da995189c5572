#include "mrinet/error.hpp"

namespace mrinet {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::HeaderParse: return "HeaderParse";
    case ErrorKind::Truncated: return "Truncated";
    case ErrorKind::BadVersion: return "BadVersion";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NoForeground: return "NoForeground";
    case ErrorKind::OddSpatialDim: return "OddSpatialDim";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::BadTargets: return "BadTargets";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Empty: return "Empty";
    case ErrorKind::OneClassOnly: return "OneClassOnly";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::EmptyRow: return "EmptyRow";
    case ErrorKind::MissingDir: return "MissingDir";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace mrinet
