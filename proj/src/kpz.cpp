#include "kpz2d/kpz.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kpz2d {

std::vector<std::string> validation_errors(const KpzParams& p) {
  std::vector<std::string> errs;
  if (!(p.nu > 0.0)) errs.push_back("nu must be > 0");
  if (!std::isfinite(p.lambda)) errs.push_back("lambda must be finite");
  if (!(p.noise_strength >= 0.0)) errs.push_back("noise_strength D must be >= 0");
  if (!(p.dt > 0.0)) errs.push_back("dt must be > 0");
  if (!(p.spacing > 0.0)) errs.push_back("spacing must be > 0");
  if (p.side < 3) errs.push_back("L must be >= 3");
  if (!(p.t_max >= 0.0)) errs.push_back("t_max must be >= 0");
  if (p.n_realizations < 1) errs.push_back("n_realizations must be >= 1");
  if (p.nu > 0.0 && p.dt > 0.0 && p.spacing > 0.0) {
    const double guard = p.dt * p.nu / (p.spacing * p.spacing);
    if (!(guard < kKpzStabilityBound)) {
      std::ostringstream os;
      os << "stability guard violated: dt*nu/a^2 = " << guard << " must be < " << kKpzStabilityBound;
      errs.push_back(os.str());
    }
  }
  for (std::size_t i = 0; i < p.snapshot_times.size(); ++i) {
    const double t = p.snapshot_times[i];
    if (!(t >= 0.0 && t <= p.t_max)) {
      errs.push_back("snapshot_times must lie in [0, t_max]");
      break;
    }
    if (i > 0 && !(t > p.snapshot_times[i - 1])) {
      errs.push_back("snapshot_times must be strictly increasing");
      break;
    }
    if (i > 0 && p.dt > 0.0 && step_index(t, p.dt) == step_index(p.snapshot_times[i - 1], p.dt)) {
      errs.push_back("snapshot_times closer than dt map to the same step");
      break;
    }
  }
  if (p.initial_condition == InitialCondition::supplied) {
    if (!p.initial_field)
      errs.push_back("initial_condition 'supplied' needs an initial field");
    else if (p.initial_field->side() != p.side || p.initial_field->spacing() != p.spacing)
      errs.push_back("supplied initial field does not match L and spacing");
  }
  return errs;
}

void validate(const KpzParams& params) {
  const auto errs = validation_errors(params);
  if (errs.empty()) return;
  std::string msg = "invalid KPZ parameters:";
  for (const auto& e : errs) msg += " " + e + ";";
  throw_error(ErrorKind::parameter, msg);
}

std::uint64_t step_index(double t, double dt) { return static_cast<std::uint64_t>(std::llround(t / dt)); }

std::vector<double> log_spaced_times(double t_min, double t_max, std::size_t count, double dt,
                                     bool include_zero) {
  std::vector<double> out;
  if (include_zero) out.push_back(0.0);
  if (count == 0 || !(t_max > 0.0)) return out;
  const double lo = std::max(t_min, dt);
  std::int64_t last = include_zero ? 0 : -1;
  for (std::size_t i = 0; i < count; ++i) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    const double t = lo * std::pow(t_max / lo, frac);
    auto s = static_cast<std::int64_t>(std::llround(t / dt));
    s = std::min<std::int64_t>(s, std::llround(t_max / dt));
    if (s <= last) continue;
    last = s;
    out.push_back(static_cast<double>(s) * dt);
  }
  return out;
}

KpzIntegrator::KpzIntegrator(const KpzParams& params, PhaseField initial)
    : coeffs_{params.dt, params.nu, 0.5 * params.lambda, params.nonlinearity},
      geometry_{params.side, params.spacing},
      dt_(params.dt),
      noise_stddev_(std::sqrt(2.0 * params.noise_strength * params.dt) / params.spacing),
      field_(std::move(initial)),
      next_(field_.size()),
      noise_(field_.size(), 0.0),
      step_count_(step_index(field_.time(), params.dt)) {
  if (field_.side() != params.side || field_.spacing() != params.spacing)
    throw_error(ErrorKind::parameter, "field does not match KPZ lattice parameters");
}

void KpzIntegrator::step(NoiseStream& stream) {
  if (noise_stddev_ > 0.0)
    stream.fill_normal(noise_, noise_stddev_);
  else
    std::fill(noise_.begin(), noise_.end(), 0.0);
  step_with_increment(noise_);
}

void KpzIntegrator::step_with_increment(std::span<const double> increment) {
  const bool ok = kernels::kpz_update(field_.values(), increment, next_, geometry_, coeffs_);
  ++step_count_;
  if (!ok) throw BlowUpError(step_count_, std::nullopt, "KPZ update (dt*nu/a^2 or dt too large)");
  std::swap(field_.storage(), next_);
  field_.set_time(static_cast<double>(step_count_) * dt_);
}

PhaseField kpz_step(const PhaseField& field, const KpzParams& params, NoiseStream& stream) {
  validate(params);
  KpzIntegrator integ(params, field);
  integ.step(stream);
  return integ.field();
}

PhaseField kpz_step_with_increment(const PhaseField& field, const KpzParams& params,
                                   std::span<const double> increment) {
  validate(params);
  KpzIntegrator integ(params, field);
  integ.step_with_increment(increment);
  return integ.field();
}

std::vector<double> effective_snapshot_times(const KpzParams& params) {
  if (params.snapshot_times.empty()) return {params.t_max};
  return params.snapshot_times;
}

PhaseField initial_kpz_field(const KpzParams& params) {
  if (params.initial_condition == InitialCondition::supplied) {
    PhaseField f = *params.initial_field;
    f.set_time(0.0);
    return f;
  }
  return PhaseField(params.side, params.spacing, 0.0, 0.0);
}

void integrate_trajectory(const KpzParams& params, std::uint64_t stream_id, const SnapshotCallback& on_snapshot) {
  validate(params);
  NoiseStream stream(params.master_seed, stream_id);
  KpzIntegrator integ(params, initial_kpz_field(params));
  const std::uint64_t n_steps = step_index(params.t_max, params.dt);
  const auto times = effective_snapshot_times(params);
  std::size_t next = 0;
  auto emit_due = [&] {
    while (next < times.size() && step_index(times[next], params.dt) == integ.step_count()) {
      on_snapshot(next, integ.field());
      ++next;
    }
  };
  emit_due();
  while (integ.step_count() < n_steps) {
    integ.step(stream);
    emit_due();
  }
}

std::vector<PhaseField> run_trajectory(const KpzParams& params, std::uint64_t stream_id) {
  SnapshotCollector collector;
  integrate_trajectory(params, stream_id,
                       [&](std::size_t i, const PhaseField& f) { collector.on_snapshot(i, f); });
  return std::move(collector.snapshots);
}

}  // namespace kpz2d
