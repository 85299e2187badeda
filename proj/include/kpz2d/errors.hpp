#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kpz2d {

/// Failure classes. The CLI maps each class onto a fixed exit code.
enum class ErrorKind {
  invalid_lattice,
  parameter,
  domain,
  config,
  blow_up,
  insufficient_data,
  fit_failure,
  io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Non-finite field values after an update. `step` is the 1-based index of
/// the offending step; `trajectory` is filled in by the ensemble drivers.
class BlowUpError : public Error {
 public:
  BlowUpError(std::uint64_t step, std::optional<std::uint64_t> trajectory, const std::string& detail);

  std::uint64_t step() const noexcept { return step_; }
  std::optional<std::uint64_t> trajectory() const noexcept { return trajectory_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::uint64_t step_;
  std::optional<std::uint64_t> trajectory_;
  std::string detail_;
};

[[noreturn]] void throw_error(ErrorKind kind, const std::string& what);

}  // namespace kpz2d
