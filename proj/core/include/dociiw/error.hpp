#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dociiw {

enum class Errc {
  ShapeMismatch,
  CountMismatch,
  OutOfRange,
  InvalidArgument,
  NonFiniteDetected,
  TooSmall,
  EmptyReference,
  ZeroVector,
  IoError,
  EmptyTextureSet,
  CheckpointMismatch,
  FirewallViolation,
  OcrUnavailable,
  Timeout,
  UnknownConfigKey,
};

std::string_view to_string(Errc code) noexcept;

/// Every contract violation in the library surfaces as this exception; the
/// code distinguishes the failure classes callers are expected to handle.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dociiw
