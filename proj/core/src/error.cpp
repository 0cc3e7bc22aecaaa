#include "dociiw/error.hpp"

namespace dociiw {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonFiniteDetected: return "NonFiniteDetected";
    case Errc::TooSmall: return "TooSmall";
    case Errc::EmptyReference: return "EmptyReference";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::IoError: return "IoError";
    case Errc::EmptyTextureSet: return "EmptyTextureSet";
    case Errc::CheckpointMismatch: return "CheckpointMismatch";
    case Errc::FirewallViolation: return "FirewallViolation";
    case Errc::OcrUnavailable: return "OcrUnavailable";
    case Errc::Timeout: return "Timeout";
    case Errc::UnknownConfigKey: return "UnknownConfigKey";
  }
  return "Unknown";
}

}  // namespace dociiw
