#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "kpz2d/fft.hpp"
#include "kpz2d/lattice.hpp"

namespace kpz2d {

enum class CorrelationKind {
  connected,            ///< C(dr, dt) = <(theta - theta')^2>_c, 0 at the origin
  coherence,            ///< g1(dr, dt), 1 at the origin
  minus_log_coherence,  ///< -log |g1|
};

struct CorrelationCell {
  std::complex<double> value{0.0, 0.0};
  double stderr_ = 0.0;        ///< realization-to-realization standard error
  std::size_t n_samples = 0;   ///< realizations contributing
  bool usable = false;         ///< false for empty bins and masked cells
};

/// Sampled correlation values on a (dr, dt) grid. Cells are stored with dt
/// as the fast index: cell(ir, it) = cells[ir * dt_axis.size() + it].
struct CorrelationMap {
  CorrelationKind kind = CorrelationKind::connected;
  std::vector<double> dr_axis;
  std::vector<double> dt_axis;
  std::vector<CorrelationCell> cells;

  CorrelationMap() = default;
  CorrelationMap(CorrelationKind k, std::vector<double> dr, std::vector<double> dt)
      : kind(k), dr_axis(std::move(dr)), dt_axis(std::move(dt)), cells(dr_axis.size() * dt_axis.size()) {}

  CorrelationCell& cell(std::size_t ir, std::size_t it) { return cells[ir * dt_axis.size() + it]; }
  const CorrelationCell& cell(std::size_t ir, std::size_t it) const { return cells[ir * dt_axis.size() + it]; }
  /// Index of an axis value within tolerance, or -1.
  long dr_index(double dr, double tol = 1e-9) const;
  long dt_index(double dt, double tol = 1e-9) const;
};

/// Where and when to correlate. Separation bins are centred on dr_centers
/// with width bin_width (default a/2); each lattice displacement is assigned
/// to the bin whose centre is within bin_width/2 of its Euclidean length.
struct CorrelationGrid {
  std::vector<double> dr_centers;
  double bin_width = 0.5;
  std::vector<double> lags;             ///< dt values, >= 0
  std::vector<double> reference_times;  ///< t0 values averaged over
};

/// Centres k * bin_width (k = 0, 1, ...) up to dr_max that contain at least
/// one lattice displacement of an L x L periodic lattice.
std::vector<double> populated_dr_centers(std::size_t side, double spacing, double dr_max, double bin_width);

/// Sorted, de-duplicated snapshot times (multiples of dt) covering every
/// t0 and t0 + lag of the grid.
std::vector<double> correlation_snapshot_times(const CorrelationGrid& grid, double dt);

/// Per-realization partial sums for two-time pair correlations of a real
/// (T = double) or complex (T = std::complex<double>) lattice field.
///
/// For each lag and separation bin it accumulates, over reference times t0
/// and over every site pair (p, p + d) with d in the bin,
///   sum conj(f(p, t0)) f(p + d, t0 + lag),  sum |f(p, t0)|^2,
///   sum |f(p + d, t0 + lag)|^2,  sum (f(p, t0) - f(p + d, t0 + lag)),  pair count.
/// For point-reflection pairs (r, -r) about a centre c this is the same set of
/// pairs with d = -2 r and c running over every site, bond and plaquette centre.
///
/// Snapshots must arrive in time order; fields are matched to grid times by
/// step index round(t / dt).
template <class T>
class PairAccumulator {
 public:
  PairAccumulator(const CorrelationGrid& grid, std::size_t side, double spacing, double dt);

  void add(const LatticeField<T>& field);
  /// Throws insufficient_data if some (t0, t0 + lag) pair never arrived.
  void require_complete() const;

  std::size_t n_lags() const noexcept { return lags_.size(); }
  std::size_t n_bins() const noexcept { return bin_pairs_.size(); }
  /// Number of displacements per bin (0 marks an empty bin).
  const std::vector<std::size_t>& displacements_per_bin() const noexcept { return bin_displacements_; }

  struct Sums {
    std::complex<double> cross{0.0, 0.0};
    double norm_a = 0.0;
    double norm_b = 0.0;
    std::complex<double> diff{0.0, 0.0};
    double pairs = 0.0;
  };
  const Sums& sums(std::size_t bin, std::size_t lag) const { return sums_[bin * lags_.size() + lag]; }

 private:
  struct Reference {
    std::vector<T> field;
    std::vector<std::complex<double>> spectrum;
    T sum{};
    double norm = 0.0;
  };

  void correlate(const Reference& ref, const LatticeField<T>& later, std::size_t lag);

  std::size_t side_;
  double dt_;
  std::vector<double> lags_;
  std::vector<long> bin_of_displacement_;
  std::vector<std::size_t> bin_displacements_;
  std::vector<std::size_t> bin_pairs_;
  std::map<std::uint64_t, std::size_t> reference_steps_;                       // step -> t0 index
  std::multimap<std::uint64_t, std::pair<std::size_t, std::size_t>> pending_;  // step -> (t0, lag)
  std::map<std::size_t, Reference> references_;
  std::vector<Sums> sums_;
  std::vector<std::complex<double>> scratch_;
  Fft2d fft_;
};

using RealPairAccumulator = PairAccumulator<double>;
using ComplexPairAccumulator = PairAccumulator<std::complex<double>>;

/// Connected correlator from per-realization accumulators:
/// C = <d^2> - <d>^2 with d = theta(p, t0) - theta(p + d, t0 + lag), the
/// averages running over pairs, t0 and realizations. Standard errors are
/// leave-one-realization-out jackknife estimates.
CorrelationMap combine_connected(std::span<const RealPairAccumulator> realizations, const CorrelationGrid& grid);

/// g1 = <psi* psi'> / sqrt(<|psi|^2> <|psi'|^2>) with the same averaging;
/// the standard error refers to |g1|.
CorrelationMap combine_coherence(std::span<const ComplexPairAccumulator> realizations, const CorrelationGrid& grid);

/// Batch forms over in-memory snapshot lists (one list per realization).
CorrelationMap connected_correlator(std::span<const std::vector<PhaseField>> ensemble, const CorrelationGrid& grid,
                                    double dt);
CorrelationMap g1_estimator(std::span<const std::vector<ComplexField>> ensemble, const CorrelationGrid& grid,
                            double dt);

}  // namespace kpz2d
