#include "kpz2d/errors.hpp"

namespace kpz2d {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_lattice: return "invalid_lattice";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::domain: return "domain";
    case ErrorKind::config: return "config";
    case ErrorKind::blow_up: return "blow_up";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::fit_failure: return "fit_failure";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

static std::string blow_up_message(std::uint64_t step, std::optional<std::uint64_t> trajectory,
                                   const std::string& detail) {
  std::string msg = "non-finite field after step " + std::to_string(step);
  if (trajectory) msg += " in trajectory " + std::to_string(*trajectory);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

BlowUpError::BlowUpError(std::uint64_t step, std::optional<std::uint64_t> trajectory,
                         const std::string& detail)
    : Error(ErrorKind::blow_up, blow_up_message(step, trajectory, detail)),
      step_(step),
      trajectory_(trajectory),
      detail_(detail) {}

void throw_error(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace kpz2d
