#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kpz2d/ensemble.hpp"
#include "kpz2d/kernels.hpp"
#include "kpz2d/lattice.hpp"
#include "kpz2d/noise.hpp"

namespace kpz2d {

enum class InitialCondition { flat, supplied };

/// Parameters of d theta/dt = nu lap(theta) + (lambda/2) (grad theta)^2 + eta
/// with <eta eta> = 2 D delta delta, integrated by explicit Euler-Maruyama.
///
/// nu = D = 1 are assumed defaults; only lambda = 3 is a literature value for
/// this setup. g_KPZ = lambda^2 D / nu^3 = 9 with these defaults.
struct KpzParams {
  double nu = 1.0;
  double lambda = 3.0;
  double noise_strength = 1.0;  ///< D
  double dt = 0.05;
  double spacing = 1.0;
  std::size_t side = 0;
  double t_max = 0.0;
  std::vector<double> snapshot_times;  ///< strictly increasing, within [0, t_max]
  std::size_t n_realizations = 1;
  std::uint64_t master_seed = 0;
  InitialCondition initial_condition = InitialCondition::flat;
  std::optional<PhaseField> initial_field;  ///< required when initial_condition == supplied
  kernels::Nonlinearity nonlinearity = kernels::Nonlinearity::lam_shin;
};

/// Every violated constraint, one message each. Empty means valid.
std::vector<std::string> validation_errors(const KpzParams& params);
/// Throws a parameter error carrying all messages.
void validate(const KpzParams& params);

/// Upper bound of the explicit-scheme guard dt * nu / a^2 < 0.25.
inline constexpr double kKpzStabilityBound = 0.25;

/// Step index used for a requested time (nearest step).
std::uint64_t step_index(double t, double dt);

/// `count` log-spaced times in [t_min, t_max] snapped to multiples of dt,
/// deduplicated; optionally prefixed with t = 0.
std::vector<double> log_spaced_times(double t_min, double t_max, std::size_t count, double dt,
                                     bool include_zero);

/// Stateful stepper that reuses its buffers between steps.
class KpzIntegrator {
 public:
  KpzIntegrator(const KpzParams& params, PhaseField initial);

  const PhaseField& field() const noexcept { return field_; }
  /// Steps taken since t = 0, inferred from the initial field time.
  std::uint64_t step_count() const noexcept { return step_count_; }

  void step(NoiseStream& stream);
  /// Deterministic variant: `increment` is added verbatim in place of noise.
  void step_with_increment(std::span<const double> increment);

  double noise_stddev() const noexcept { return noise_stddev_; }

 private:
  kernels::KpzCoefficients coeffs_;
  kernels::StencilGeometry geometry_;
  double dt_;
  double noise_stddev_;
  PhaseField field_;
  std::vector<double> next_;
  std::vector<double> noise_;
  std::uint64_t step_count_;
};

/// One Euler-Maruyama step with noise variance 2 D dt / a^2 per site.
PhaseField kpz_step(const PhaseField& field, const KpzParams& params, NoiseStream& stream);
/// Same update with an explicit noise increment field.
PhaseField kpz_step_with_increment(const PhaseField& field, const KpzParams& params,
                                   std::span<const double> increment);

PhaseField initial_kpz_field(const KpzParams& params);

/// snapshot_times, or {t_max} when none were requested.
std::vector<double> effective_snapshot_times(const KpzParams& params);

using SnapshotCallback = std::function<void(std::size_t snapshot_index, const PhaseField& field)>;

/// Integrates one trajectory from the initial condition to t_max and calls
/// `on_snapshot` at each snapshot time. A snapshot requested at t is taken
/// after step round(t / dt); the field's time is that step times dt.
void integrate_trajectory(const KpzParams& params, std::uint64_t stream_id, const SnapshotCallback& on_snapshot);

std::vector<PhaseField> run_trajectory(const KpzParams& params, std::uint64_t stream_id);

/// Runs params.n_realizations trajectories with stream ids 0..N-1. Each
/// trajectory feeds its own reducer, built by `make(stream_id)`; reducers must
/// provide `on_snapshot(std::size_t, const PhaseField&)`. Returns reducers in
/// stream-id order so downstream reductions are scheduling independent.
template <class Factory>
auto run_ensemble(const KpzParams& params, Factory&& make, ExecutionPolicy exec = {}) {
  validate(params);
  using Reducer = std::decay_t<decltype(make(std::uint64_t{0}))>;
  return run_indexed<Reducer>(params.n_realizations, exec, [&](std::uint64_t id) {
    Reducer reducer = make(id);
    integrate_trajectory(params, id,
                         [&](std::size_t index, const PhaseField& f) { reducer.on_snapshot(index, f); });
    return reducer;
  });
}

/// Reducer that keeps every snapshot; for small runs and tests.
struct SnapshotCollector {
  std::vector<PhaseField> snapshots;
  void on_snapshot(std::size_t, const PhaseField& f) { snapshots.push_back(f); }
};

}  // namespace kpz2d
