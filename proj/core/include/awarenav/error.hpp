#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace awarenav {

enum class Errc {
  OutOfBounds,
  WindowTooLarge,
  InvalidArgument,
  InvalidMap,
  InvalidGoal,
  EmptyWorld,
  Unreachable,
  SingularInnovation,
  InvalidAwareness,
  InvalidParticleCount,
  DegenerateBelief,
  EmptyBelief,
  Config,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure the library reports is an Error carrying one of the codes
/// above, so callers can branch on code() instead of parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace awarenav
