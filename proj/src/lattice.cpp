#include "kpz2d/lattice.hpp"

#include <cmath>
#include <string>

namespace kpz2d {

void require_stencil_lattice(std::size_t side) {
  if (side < 3)
    throw_error(ErrorKind::invalid_lattice,
                "stencil operations need L >= 3, got L = " + std::to_string(side));
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

bool all_finite(std::span<const std::complex<double>> values) {
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

double spatial_mean(const PhaseField& field) {
  double sum = 0.0;
  for (double v : field.values()) sum += v;
  return sum / static_cast<double>(field.size());
}

}  // namespace kpz2d
