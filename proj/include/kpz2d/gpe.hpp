#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kpz2d/ensemble.hpp"
#include "kpz2d/fft.hpp"
#include "kpz2d/lattice.hpp"
#include "kpz2d/noise.hpp"

namespace kpz2d {

enum class GpeInitialCondition {
  seed_noise,     ///< small complex Gaussian seed, reservoir at P / gamma_R
  uniform_seed,   ///< spatially uniform psi = seed_amplitude, reservoir at P / gamma_R
  steady_state,   ///< homogeneous mean-field fixed point (needs P > P_th)
};

/// Driven-dissipative condensate coupled to a pumped reservoir, in units with
/// hbar = 1 and time measured in 1/gamma for the shipped defaults:
///
///   i dpsi/dt = [-K lap - (i/2)(gamma - gamma2 lap) + g|psi|^2 + 2 g_R n_R
///                + (i/2) R n_R] psi + xi
///   dn_R/dt   = P - (gamma_R + R |psi|^2) n_R
///
/// with K = hbar/2m. xi is complex white noise with per-site variance
/// noise_sigma^2 dt / a^2 per step, split equally between real and imaginary
/// parts. The defaults put P_th = 4 and g_KPZ of order a few near threshold.
struct GpeParams {
  double kinetic = 0.5;  ///< K = hbar / 2m (lattice units^2 per time)
  double gamma = 1.0;
  double gamma2 = 0.2;
  double g = 0.1;
  double g_reservoir = 0.2;
  double stimulated = 0.5;  ///< R
  double gamma_reservoir = 2.0;
  double pump = 4.8;
  double noise_sigma = 0.05;
  double dt = 0.02;
  std::size_t side = 0;
  double spacing = 1.0;
  double t_max = 0.0;
  std::vector<double> snapshot_times;
  std::size_t n_realizations = 1;
  std::uint64_t master_seed = 0;
  GpeInitialCondition initial_condition = GpeInitialCondition::seed_noise;
  double seed_amplitude = 0.01;
  /// Runs fail once reservoir clamping exceeds this fraction of site-steps.
  double max_clamp_fraction = 1e-4;
};

/// dt (K + gamma2/2) / a^2 must stay below this bound: the fastest kinetic
/// mode (k2 = 8/a^2) then rotates by less than pi per step.
inline constexpr double kGpeStabilityBound = 0.3926990816987241;  // pi / 8

std::vector<std::string> validation_errors(const GpeParams& params);
void validate(const GpeParams& params);

struct CondensateState {
  ComplexField psi;
  PhaseField reservoir;
  double time = 0.0;
  std::uint64_t clamp_events = 0;  ///< reservoir sites reset from negative values to 0
  std::uint64_t site_steps = 0;
};

/// P_th = gamma gamma_R / R. Throws parameter error unless all three are > 0.
double threshold_power(const GpeParams& params);

struct HomogeneousSteadyState {
  double reservoir = 0.0;  ///< n_R* = gamma / R
  double density = 0.0;    ///< |psi|^2* = P / gamma - gamma_R / R
};

/// Throws domain error at or below threshold.
HomogeneousSteadyState steady_state_homogeneous(const GpeParams& params);

/// Split-step integrator. One step applies, in this order:
///   1. kinetic + momentum-dependent loss, exactly in Fourier space with the
///      discrete eigenvalue k2: psi_k *= exp(-i dt K k2 - dt (gamma + gamma2 k2)/2);
///   2. local part with the coefficient frozen at the start of the sub-step:
///      psi *= exp(dt [-i (g|psi|^2 + 2 g_R n_R) + R n_R / 2]);
///   3. explicit Euler reservoir update using the new |psi|^2, clamped at 0;
///   4. additive complex noise.
class GpeIntegrator {
 public:
  GpeIntegrator(const GpeParams& params, CondensateState initial);

  const CondensateState& state() const noexcept { return state_; }
  std::uint64_t step_count() const noexcept { return step_count_; }

  void step(NoiseStream& stream);

 private:
  GpeParams params_;
  Fft2d fft_;
  std::vector<std::complex<double>> propagator_;
  std::vector<double> noise_;
  CondensateState state_;
  std::uint64_t step_count_;
};

CondensateState initial_gpe_state(const GpeParams& params, NoiseStream& stream);

CondensateState gpe_step(const CondensateState& state, const GpeParams& params, NoiseStream& stream);

double mean_density(const CondensateState& state);

using GpeSnapshotCallback = std::function<void(std::size_t snapshot_index, const CondensateState& state)>;

/// Same snapshot convention as the KPZ driver. Fails with a blow-up error when
/// the clamp fraction exceeds params.max_clamp_fraction at the end of the run.
void integrate_gpe_trajectory(const GpeParams& params, std::uint64_t stream_id,
                              const GpeSnapshotCallback& on_snapshot);

template <class Factory>
auto run_gpe_ensemble(const GpeParams& params, Factory&& make, ExecutionPolicy exec = {}) {
  validate(params);
  using Reducer = std::decay_t<decltype(make(std::uint64_t{0}))>;
  return run_indexed<Reducer>(params.n_realizations, exec, [&](std::uint64_t id) {
    Reducer reducer = make(id);
    integrate_gpe_trajectory(params, id, [&](std::size_t index, const CondensateState& s) {
      reducer.on_snapshot(index, s);
    });
    return reducer;
  });
}

}  // namespace kpz2d
