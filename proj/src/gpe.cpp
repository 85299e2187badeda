#include "kpz2d/gpe.hpp"

#include <cmath>
#include <sstream>

#include "kpz2d/kpz.hpp"
#include "kpz2d/spectrum.hpp"

namespace kpz2d {

std::vector<std::string> validation_errors(const GpeParams& p) {
  std::vector<std::string> errs;
  auto nonneg = [&](double v, const char* name) {
    if (!(v >= 0.0)) errs.push_back(std::string(name) + " must be >= 0");
  };
  nonneg(p.gamma, "gamma");
  nonneg(p.gamma2, "gamma2");
  nonneg(p.pump, "pump");
  nonneg(p.noise_sigma, "noise_sigma");
  nonneg(p.kinetic, "kinetic");
  if (!(p.stimulated > 0.0)) errs.push_back("stimulated scattering R must be > 0");
  if (!(p.gamma_reservoir > 0.0)) errs.push_back("gamma_reservoir must be > 0");
  if (!std::isfinite(p.g) || !std::isfinite(p.g_reservoir)) errs.push_back("interactions must be finite");
  if (!(p.dt > 0.0)) errs.push_back("dt must be > 0");
  if (!(p.spacing > 0.0)) errs.push_back("spacing must be > 0");
  if (p.side < 4) errs.push_back("L must be >= 4");
  if (!(p.t_max >= 0.0)) errs.push_back("t_max must be >= 0");
  if (p.n_realizations < 1) errs.push_back("n_realizations must be >= 1");
  if (!(p.seed_amplitude >= 0.0)) errs.push_back("seed_amplitude must be >= 0");
  if (p.dt > 0.0 && p.spacing > 0.0) {
    const double guard = p.dt * (p.kinetic + 0.5 * p.gamma2) / (p.spacing * p.spacing);
    if (!(guard < kGpeStabilityBound)) {
      std::ostringstream os;
      os << "stability guard violated: dt*(K + gamma2/2)/a^2 = " << guard << " must be < pi/8";
      errs.push_back(os.str());
    }
  }
  for (std::size_t i = 0; i < p.snapshot_times.size(); ++i) {
    const double t = p.snapshot_times[i];
    if (!(t >= 0.0 && t <= p.t_max)) {
      errs.push_back("snapshot_times must lie in [0, t_max]");
      break;
    }
    if (i > 0 && (!(t > p.snapshot_times[i - 1]) ||
                  (p.dt > 0.0 && step_index(t, p.dt) == step_index(p.snapshot_times[i - 1], p.dt)))) {
      errs.push_back("snapshot_times must be strictly increasing and at least dt apart");
      break;
    }
  }
  if (p.initial_condition == GpeInitialCondition::steady_state && p.stimulated > 0.0 &&
      p.gamma_reservoir > 0.0 && !(p.pump > p.gamma * p.gamma_reservoir / p.stimulated))
    errs.push_back("steady_state initial condition needs pump above threshold");
  return errs;
}

void validate(const GpeParams& params) {
  const auto errs = validation_errors(params);
  if (errs.empty()) return;
  std::string msg = "invalid GPE parameters:";
  for (const auto& e : errs) msg += " " + e + ";";
  throw_error(ErrorKind::parameter, msg);
}

double threshold_power(const GpeParams& p) {
  if (!(p.gamma > 0.0) || !(p.gamma_reservoir > 0.0) || !(p.stimulated > 0.0))
    throw_error(ErrorKind::parameter, "threshold power needs gamma, gamma_R and R > 0");
  return p.gamma * p.gamma_reservoir / p.stimulated;
}

HomogeneousSteadyState steady_state_homogeneous(const GpeParams& p) {
  const double p_th = threshold_power(p);
  if (!(p.pump > p_th)) {
    std::ostringstream os;
    os << "pump " << p.pump << " is not above threshold " << p_th << "; no condensate fixed point";
    throw_error(ErrorKind::domain, os.str());
  }
  return {p.gamma / p.stimulated, p.pump / p.gamma - p.gamma_reservoir / p.stimulated};
}

GpeIntegrator::GpeIntegrator(const GpeParams& params, CondensateState initial)
    : params_(params),
      fft_(params.side, params.side),
      propagator_(params.side * params.side),
      noise_(2 * params.side * params.side),
      state_(std::move(initial)),
      step_count_(step_index(state_.time, params.dt)) {
  validate(params);
  if (state_.psi.side() != params.side || state_.reservoir.side() != params.side)
    throw_error(ErrorKind::parameter, "condensate state does not match L");
  const auto k2 = mode_eigenvalues(params.side, params.spacing);
  const double dt = params.dt;
  for (std::size_t i = 0; i < k2.size(); ++i) {
    const std::complex<double> exponent(-0.5 * dt * (params.gamma + params.gamma2 * k2[i]),
                                        -dt * params.kinetic * k2[i]);
    propagator_[i] = std::exp(exponent) / static_cast<double>(k2.size());
  }
}

void GpeIntegrator::step(NoiseStream& stream) {
  const GpeParams& p = params_;
  auto psi = state_.psi.values();
  auto nr = state_.reservoir.values();
  const std::size_t n = psi.size();

  fft_.forward(psi);
  for (std::size_t i = 0; i < n; ++i) psi[i] *= propagator_[i];
  fft_.inverse(psi);

  std::uint64_t clamps = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dens = std::norm(psi[i]);
    const std::complex<double> rate(0.5 * p.stimulated * nr[i], -(p.g * dens + 2.0 * p.g_reservoir * nr[i]));
    psi[i] *= std::exp(p.dt * rate);
    const double dens_new = std::norm(psi[i]);
    double updated = nr[i] + p.dt * (p.pump - (p.gamma_reservoir + p.stimulated * dens_new) * nr[i]);
    if (updated < 0.0) {
      updated = 0.0;
      ++clamps;
    }
    nr[i] = updated;
  }

  if (p.noise_sigma > 0.0) {
    const double sd = p.noise_sigma * std::sqrt(0.5 * p.dt) / p.spacing;
    stream.fill_normal(noise_, sd);
    for (std::size_t i = 0; i < n; ++i) psi[i] += std::complex<double>(noise_[2 * i], noise_[2 * i + 1]);
  }

  ++step_count_;
  state_.time = static_cast<double>(step_count_) * p.dt;
  state_.psi.set_time(state_.time);
  state_.reservoir.set_time(state_.time);
  state_.clamp_events += clamps;
  state_.site_steps += n;
  if (!all_finite(state_.psi.values()) || !all_finite(state_.reservoir.values()))
    throw BlowUpError(step_count_, std::nullopt, "GPE split step");
}

CondensateState initial_gpe_state(const GpeParams& p, NoiseStream& stream) {
  validate(p);
  CondensateState s{ComplexField(p.side, p.spacing), PhaseField(p.side, p.spacing), 0.0, 0, 0};
  switch (p.initial_condition) {
    case GpeInitialCondition::seed_noise: {
      std::vector<double> buf(2 * s.psi.size());
      stream.fill_normal(buf, p.seed_amplitude * std::sqrt(0.5));
      for (std::size_t i = 0; i < s.psi.size(); ++i) s.psi[i] = {buf[2 * i], buf[2 * i + 1]};
      for (auto& v : s.reservoir.values()) v = p.pump / p.gamma_reservoir;
      break;
    }
    case GpeInitialCondition::uniform_seed:
      for (auto& v : s.psi.values()) v = p.seed_amplitude;
      for (auto& v : s.reservoir.values()) v = p.pump / p.gamma_reservoir;
      break;
    case GpeInitialCondition::steady_state: {
      const auto ss = steady_state_homogeneous(p);
      for (auto& v : s.psi.values()) v = std::sqrt(ss.density);
      for (auto& v : s.reservoir.values()) v = ss.reservoir;
      break;
    }
  }
  return s;
}

CondensateState gpe_step(const CondensateState& state, const GpeParams& params, NoiseStream& stream) {
  GpeIntegrator integ(params, state);
  integ.step(stream);
  return integ.state();
}

double mean_density(const CondensateState& state) {
  double sum = 0.0;
  for (const auto& v : state.psi.values()) sum += std::norm(v);
  return sum / static_cast<double>(state.psi.size());
}

void integrate_gpe_trajectory(const GpeParams& params, std::uint64_t stream_id,
                              const GpeSnapshotCallback& on_snapshot) {
  validate(params);
  NoiseStream stream(params.master_seed, stream_id);
  GpeIntegrator integ(params, initial_gpe_state(params, stream));
  const std::uint64_t n_steps = step_index(params.t_max, params.dt);
  const std::vector<double> times = params.snapshot_times.empty() ? std::vector<double>{params.t_max}
                                                                  : params.snapshot_times;
  std::size_t next = 0;
  auto emit_due = [&] {
    while (next < times.size() && step_index(times[next], params.dt) == integ.step_count()) {
      on_snapshot(next, integ.state());
      ++next;
    }
  };
  emit_due();
  while (integ.step_count() < n_steps) {
    integ.step(stream);
    emit_due();
  }
  const auto& s = integ.state();
  if (s.site_steps > 0 &&
      static_cast<double>(s.clamp_events) > params.max_clamp_fraction * static_cast<double>(s.site_steps)) {
    std::ostringstream os;
    os << "reservoir clamped on " << s.clamp_events << " of " << s.site_steps
       << " site-steps; reduce dt";
    throw BlowUpError(integ.step_count(), std::nullopt, os.str());
  }
}

}  // namespace kpz2d
