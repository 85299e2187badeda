#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "kpz2d/errors.hpp"

namespace kpz2d {

/// Square L x L periodic lattice field, row-major (index = y * L + x).
template <class T>
class LatticeField {
 public:
  using value_type = T;

  LatticeField() = default;
  explicit LatticeField(std::size_t side, double spacing = 1.0, double time = 0.0, T fill = T{})
      : side_(side), spacing_(spacing), time_(time), values_(side * side, fill) {
    if (side == 0) throw_error(ErrorKind::invalid_lattice, "lattice side must be positive");
    if (!(spacing > 0.0)) throw_error(ErrorKind::invalid_lattice, "lattice spacing must be positive");
  }

  std::size_t side() const noexcept { return side_; }
  std::size_t size() const noexcept { return values_.size(); }
  double spacing() const noexcept { return spacing_; }
  double time() const noexcept { return time_; }
  void set_time(double t) noexcept { time_ = t; }

  std::size_t index(std::size_t x, std::size_t y) const noexcept { return y * side_ + x; }

  /// Periodic access; any integer offset is wrapped into [0, L).
  T& at(long x, long y) noexcept { return values_[wrapped_index(x, y)]; }
  const T& at(long x, long y) const noexcept { return values_[wrapped_index(x, y)]; }

  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  std::vector<T>& storage() noexcept { return values_; }
  const std::vector<T>& storage() const noexcept { return values_; }

  bool same_geometry(const LatticeField& other) const noexcept {
    return side_ == other.side_ && spacing_ == other.spacing_;
  }

  friend bool operator==(const LatticeField&, const LatticeField&) = default;

 private:
  std::size_t wrapped_index(long x, long y) const noexcept {
    const long n = static_cast<long>(side_);
    long xm = x % n;
    long ym = y % n;
    if (xm < 0) xm += n;
    if (ym < 0) ym += n;
    return static_cast<std::size_t>(ym) * side_ + static_cast<std::size_t>(xm);
  }

  std::size_t side_ = 0;
  double spacing_ = 1.0;
  double time_ = 0.0;
  std::vector<T> values_;
};

/// Real scalar field: KPZ height / condensate phase.
using PhaseField = LatticeField<double>;
/// Complex condensate amplitude.
using ComplexField = LatticeField<std::complex<double>>;

/// Throws invalid_lattice unless the side supports nearest-neighbour stencils.
void require_stencil_lattice(std::size_t side);

bool all_finite(std::span<const double> values);
bool all_finite(std::span<const std::complex<double>> values);

double spatial_mean(const PhaseField& field);

/// Cyclic shift by (dx, dy): out(x + dx, y + dy) = in(x, y).
template <class T>
LatticeField<T> cyclic_shift(const LatticeField<T>& in, long dx, long dy) {
  LatticeField<T> out(in.side(), in.spacing(), in.time());
  const long n = static_cast<long>(in.side());
  for (long y = 0; y < n; ++y)
    for (long x = 0; x < n; ++x) out.at(x + dx, y + dy) = in.at(x, y);
  return out;
}

}  // namespace kpz2d
