#include "kpz2d/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <type_traits>

#include "kpz2d/kpz.hpp"

namespace kpz2d {

long CorrelationMap::dr_index(double dr, double tol) const {
  for (std::size_t i = 0; i < dr_axis.size(); ++i)
    if (std::abs(dr_axis[i] - dr) <= tol) return static_cast<long>(i);
  return -1;
}

long CorrelationMap::dt_index(double dt, double tol) const {
  for (std::size_t i = 0; i < dt_axis.size(); ++i)
    if (std::abs(dt_axis[i] - dt) <= tol) return static_cast<long>(i);
  return -1;
}

namespace {

double displacement_length(std::size_t dx, std::size_t dy, std::size_t side, double spacing) {
  const double sx = static_cast<double>(signed_frequency(dx, side));
  const double sy = static_cast<double>(signed_frequency(dy, side));
  return spacing * std::sqrt(sx * sx + sy * sy);
}

long bin_for(double dist, const std::vector<double>& centers, double width) {
  long best = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double gap = std::abs(centers[i] - dist);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<long>(i);
    }
  }
  return best_gap <= 0.5 * width * (1.0 + 1e-12) ? best : -1;
}

// conj(a) * b and |a|^2 written out so that the coincident-point sums are
// bitwise identical to the norms.
inline double conj_mul(double a, double b) { return a * b; }
inline std::complex<double> conj_mul(const std::complex<double>& a, const std::complex<double>& b) {
  return {a.real() * b.real() + a.imag() * b.imag(), a.real() * b.imag() - a.imag() * b.real()};
}
inline double norm_of(double a) { return a * a; }
inline double norm_of(const std::complex<double>& a) { return a.real() * a.real() + a.imag() * a.imag(); }

}  // namespace

std::vector<double> populated_dr_centers(std::size_t side, double spacing, double dr_max, double bin_width) {
  if (!(bin_width > 0.0)) throw_error(ErrorKind::parameter, "bin_width must be > 0");
  std::set<long> used;
  for (std::size_t dy = 0; dy < side; ++dy)
    for (std::size_t dx = 0; dx < side; ++dx) {
      const double d = displacement_length(dx, dy, side, spacing);
      if (d > dr_max + 0.5 * bin_width) continue;
      const long k = std::lround(d / bin_width);
      if (static_cast<double>(k) * bin_width <= dr_max + 1e-12) used.insert(k);
    }
  std::vector<double> out;
  for (long k : used) out.push_back(static_cast<double>(k) * bin_width);
  return out;
}

std::vector<double> correlation_snapshot_times(const CorrelationGrid& grid, double dt) {
  std::set<std::uint64_t> steps;
  for (double t0 : grid.reference_times)
    for (double lag : grid.lags) steps.insert(step_index(t0, dt) + step_index(lag, dt));
  for (double t0 : grid.reference_times) steps.insert(step_index(t0, dt));
  std::vector<double> out;
  for (auto s : steps) out.push_back(static_cast<double>(s) * dt);
  return out;
}

template <class T>
PairAccumulator<T>::PairAccumulator(const CorrelationGrid& grid, std::size_t side, double spacing, double dt)
    : side_(side),
      dt_(dt),
      lags_(grid.lags),
      bin_of_displacement_(side * side, -1),
      bin_displacements_(grid.dr_centers.size(), 0),
      bin_pairs_(grid.dr_centers.size(), 0),
      sums_(grid.dr_centers.size() * grid.lags.size()),
      scratch_(side * side),
      fft_(side, side) {
  if (side < 2) throw_error(ErrorKind::invalid_lattice, "correlator needs L >= 2");
  if (!(dt > 0.0)) throw_error(ErrorKind::parameter, "correlator needs dt > 0");
  if (grid.lags.empty() || grid.reference_times.empty() || grid.dr_centers.empty())
    throw_error(ErrorKind::parameter, "correlation grid needs lags, reference times and separation bins");
  for (double lag : grid.lags)
    if (!(lag >= 0.0)) throw_error(ErrorKind::parameter, "lags must be >= 0");
  for (std::size_t dy = 0; dy < side; ++dy)
    for (std::size_t dx = 0; dx < side; ++dx) {
      const long b = bin_for(displacement_length(dx, dy, side, spacing), grid.dr_centers, grid.bin_width);
      bin_of_displacement_[dy * side + dx] = b;
      if (b >= 0) ++bin_displacements_[static_cast<std::size_t>(b)];
    }
  for (std::size_t i = 0; i < grid.reference_times.size(); ++i) {
    const auto s0 = step_index(grid.reference_times[i], dt);
    reference_steps_.emplace(s0, i);
    for (std::size_t j = 0; j < lags_.size(); ++j) pending_.emplace(s0 + step_index(lags_[j], dt), std::pair{i, j});
  }
}

template <class T>
void PairAccumulator<T>::add(const LatticeField<T>& field) {
  if (field.side() != side_) throw_error(ErrorKind::invalid_lattice, "snapshot side does not match correlator");
  const auto step = step_index(field.time(), dt_);
  if (auto it = reference_steps_.find(step); it != reference_steps_.end()) {
    Reference ref;
    ref.field.assign(field.values().begin(), field.values().end());
    ref.spectrum.assign(field.values().begin(), field.values().end());
    fft_.forward(ref.spectrum);
    for (const T& v : ref.field) {
      ref.sum += v;
      ref.norm += norm_of(v);
    }
    references_[it->second] = std::move(ref);
  }
  auto [lo, hi] = pending_.equal_range(step);
  for (auto it = lo; it != hi; ++it) {
    const auto [t0, lag] = it->second;
    auto ref = references_.find(t0);
    if (ref == references_.end())
      throw_error(ErrorKind::insufficient_data, "reference snapshot missing for a correlation lag");
    correlate(ref->second, field, lag);
  }
  pending_.erase(lo, hi);
  // Drop references with no outstanding lags.
  for (auto it = references_.begin(); it != references_.end();) {
    const bool needed = std::any_of(pending_.begin(), pending_.end(),
                                    [&](const auto& p) { return p.second.first == it->first; });
    it = needed ? std::next(it) : references_.erase(it);
  }
}

template <class T>
void PairAccumulator<T>::correlate(const Reference& ref, const LatticeField<T>& later, std::size_t lag) {
  const std::size_t n = side_ * side_;
  std::copy(later.values().begin(), later.values().end(), scratch_.begin());
  fft_.forward(scratch_);
  for (std::size_t i = 0; i < n; ++i) scratch_[i] = std::conj(ref.spectrum[i]) * scratch_[i];
  fft_.inverse(scratch_);
  const double inv_n = 1.0 / static_cast<double>(n);

  T later_sum{};
  double later_norm = 0.0;
  T zero_cross{};
  for (std::size_t i = 0; i < n; ++i) {
    const T& v = later.values()[i];
    later_sum += v;
    later_norm += norm_of(v);
    zero_cross += conj_mul(ref.field[i], v);
  }
  const std::complex<double> diff_per_disp = std::complex<double>(ref.sum) - std::complex<double>(later_sum);

  for (std::size_t d = 0; d < n; ++d) {
    const long b = bin_of_displacement_[d];
    if (b < 0) continue;
    Sums& s = sums_[static_cast<std::size_t>(b) * lags_.size() + lag];
    std::complex<double> x = (d == 0) ? std::complex<double>(zero_cross) : scratch_[d] * inv_n;
    if constexpr (std::is_same_v<T, double>) x.imag(0.0);
    s.cross += x;
    s.norm_a += ref.norm;
    s.norm_b += later_norm;
    s.diff += diff_per_disp;
    s.pairs += static_cast<double>(n);
  }
}

template <class T>
void PairAccumulator<T>::require_complete() const {
  if (!pending_.empty())
    throw_error(ErrorKind::insufficient_data,
                "correlator is missing " + std::to_string(pending_.size()) + " (t0, t0 + dt) snapshot pairs");
}

template class PairAccumulator<double>;
template class PairAccumulator<std::complex<double>>;

namespace {

template <class Estimate>
void jackknife_fill(CorrelationCell& cell, std::size_t n_real, Estimate&& estimate) {
  // estimate(skip) drops realization `skip`.
  cell.n_samples = n_real;
  if (n_real < 2) {
    cell.stderr_ = 0.0;
    return;
  }
  std::vector<double> loo(n_real);
  double mean = 0.0;
  for (std::size_t r = 0; r < n_real; ++r) {
    loo[r] = estimate(r);
    mean += loo[r];
  }
  mean /= static_cast<double>(n_real);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  cell.stderr_ = std::sqrt(ss * static_cast<double>(n_real - 1) / static_cast<double>(n_real));
}

template <class Acc>
void check_consistent(std::span<const Acc> realizations, const CorrelationGrid& grid) {
  if (realizations.empty()) throw_error(ErrorKind::insufficient_data, "no realizations to combine");
  for (const auto& r : realizations) {
    r.require_complete();
    if (r.n_bins() != grid.dr_centers.size() || r.n_lags() != grid.lags.size())
      throw_error(ErrorKind::parameter, "accumulator does not match the correlation grid");
  }
}

}  // namespace

CorrelationMap combine_connected(std::span<const RealPairAccumulator> realizations, const CorrelationGrid& grid) {
  check_consistent(realizations, grid);
  CorrelationMap map(CorrelationKind::connected, grid.dr_centers, grid.lags);
  const std::size_t n_real = realizations.size();
  const auto& per_bin = realizations.front().displacements_per_bin();
  for (std::size_t b = 0; b < grid.dr_centers.size(); ++b) {
    for (std::size_t l = 0; l < grid.lags.size(); ++l) {
      CorrelationCell& cell = map.cell(b, l);
      if (per_bin[b] == 0) {
        cell.value = {std::numeric_limits<double>::quiet_NaN(), 0.0};
        cell.usable = false;
        continue;
      }
      auto estimate = [&](std::size_t skip) {
        double m2 = 0.0, m1 = 0.0, pairs = 0.0;
        for (std::size_t r = 0; r < n_real; ++r) {
          if (r == skip) continue;
          const auto& s = realizations[r].sums(b, l);
          m2 += s.norm_a + s.norm_b - 2.0 * s.cross.real();
          m1 += s.diff.real();
          pairs += s.pairs;
        }
        m2 /= pairs;
        m1 /= pairs;
        return m2 - m1 * m1;
      };
      cell.value = {estimate(n_real), 0.0};
      jackknife_fill(cell, n_real, estimate);
      cell.usable = std::isfinite(cell.value.real());
    }
  }
  return map;
}

CorrelationMap combine_coherence(std::span<const ComplexPairAccumulator> realizations, const CorrelationGrid& grid) {
  check_consistent(realizations, grid);
  CorrelationMap map(CorrelationKind::coherence, grid.dr_centers, grid.lags);
  const std::size_t n_real = realizations.size();
  const auto& per_bin = realizations.front().displacements_per_bin();
  for (std::size_t b = 0; b < grid.dr_centers.size(); ++b) {
    for (std::size_t l = 0; l < grid.lags.size(); ++l) {
      CorrelationCell& cell = map.cell(b, l);
      if (per_bin[b] == 0) {
        cell.value = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        cell.usable = false;
        continue;
      }
      auto complex_estimate = [&](std::size_t skip) {
        std::complex<double> cross{0.0, 0.0};
        double na = 0.0, nb = 0.0;
        for (std::size_t r = 0; r < n_real; ++r) {
          if (r == skip) continue;
          const auto& s = realizations[r].sums(b, l);
          cross += s.cross;
          na += s.norm_a;
          nb += s.norm_b;
        }
        return cross / std::sqrt(na * nb);
      };
      cell.value = complex_estimate(n_real);
      jackknife_fill(cell, n_real, [&](std::size_t skip) { return std::abs(complex_estimate(skip)); });
      cell.usable = std::isfinite(cell.value.real()) && std::isfinite(cell.value.imag());
    }
  }
  return map;
}

CorrelationMap connected_correlator(std::span<const std::vector<PhaseField>> ensemble, const CorrelationGrid& grid,
                                    double dt) {
  if (ensemble.empty() || ensemble.front().empty())
    throw_error(ErrorKind::insufficient_data, "empty ensemble");
  const auto& first = ensemble.front().front();
  std::vector<RealPairAccumulator> accs;
  for (const auto& traj : ensemble) {
    RealPairAccumulator acc(grid, first.side(), first.spacing(), dt);
    for (const auto& f : traj) acc.add(f);
    accs.push_back(std::move(acc));
  }
  return combine_connected(accs, grid);
}

CorrelationMap g1_estimator(std::span<const std::vector<ComplexField>> ensemble, const CorrelationGrid& grid,
                            double dt) {
  if (ensemble.empty() || ensemble.front().empty())
    throw_error(ErrorKind::insufficient_data, "empty ensemble");
  const auto& first = ensemble.front().front();
  std::vector<ComplexPairAccumulator> accs;
  for (const auto& traj : ensemble) {
    ComplexPairAccumulator acc(grid, first.side(), first.spacing(), dt);
    for (const auto& f : traj) acc.add(f);
    accs.push_back(std::move(acc));
  }
  return combine_coherence(accs, grid);
}

}  // namespace kpz2d
