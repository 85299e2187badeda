#include "kpz2d/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>

#include <fftw3.h>
#include <Eigen/Core>
#include <boost/version.hpp>

#include "kpz2d/correlation.hpp"
#include "kpz2d/interferometry.hpp"
#include "kpz2d/observables.hpp"
#include "kpz2d/scaling.hpp"

namespace kpz2d::cli {

using io::Json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Subcommand, const char*>> kSubcommands = {
    {Subcommand::simulate_kpz, "simulate-kpz"},
    {Subcommand::simulate_gpe, "simulate-gpe"},
    {Subcommand::analyze_correlations, "analyze-correlations"},
    {Subcommand::tabulate_scaling, "tabulate-scaling"},
    {Subcommand::collapse_fit, "collapse-fit"},
    {Subcommand::finite_size, "finite-size"},
    {Subcommand::fringe_synthesize, "fringe-synthesize"},
    {Subcommand::fringe_demodulate, "fringe-demodulate"},
    {Subcommand::fringe_noise, "fringe-noise"},
};

}  // namespace

std::string to_string(Subcommand s) {
  for (const auto& [k, name] : kSubcommands)
    if (k == s) return name;
  return "unknown";
}

std::optional<Subcommand> subcommand_from_string(const std::string& s) {
  for (const auto& [k, name] : kSubcommands)
    if (s == name) return k;
  return std::nullopt;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_lattice:
    case ErrorKind::parameter:
    case ErrorKind::domain:
    case ErrorKind::config: return exit_code::config;
    case ErrorKind::blow_up: return exit_code::blow_up;
    case ErrorKind::insufficient_data: return exit_code::insufficient_data;
    case ErrorKind::fit_failure: return exit_code::fit_failure;
    case ErrorKind::io: return exit_code::io;
  }
  return exit_code::internal;
}

Json RunConfig::to_json() const {
  return Json{{"subcommand", cli::to_string(subcommand)},
              {"output_dir", output_dir.string()},
              {"seed", seed},
              {"workers", workers},
              {"parameters", parameters}};
}

// ---------------------------------------------------------------------------
// Schema helpers

namespace {

enum class Bound { any, positive, nonneg };

/// Reads one JSON object, writes its normalized copy, records every problem.
class Block {
 public:
  Block(const Json* in, Json& out, std::vector<std::string>& errs, std::string path)
      : in_(in), out_(out), errs_(errs), path_(std::move(path)) {
    out_ = Json::object();
    if (in_ && !in_->is_object()) {
      fail("", "must be an object");
      in_ = nullptr;
    }
  }

  double number(const char* key, std::optional<double> def, Bound bound = Bound::any) {
    const Json* v = take(key);
    double x = def.value_or(0.0);
    if (!v) {
      if (!def) missing(key);
    } else if (!v->is_number()) {
      fail(key, "must be a number");
    } else {
      x = v->get<double>();
      if (!std::isfinite(x)) fail(key, "must be finite");
    }
    if (v && v->is_number()) {
      if (bound == Bound::positive && !(x > 0.0)) fail(key, "must be > 0");
      if (bound == Bound::nonneg && !(x >= 0.0)) fail(key, "must be >= 0");
    }
    out_[key] = (v || def) ? Json(x) : Json(nullptr);
    return x;
  }

  std::int64_t integer(const char* key, std::optional<std::int64_t> def, std::int64_t min) {
    const Json* v = take(key);
    std::int64_t x = def.value_or(0);
    if (!v) {
      if (!def) missing(key);
    } else if (!v->is_number_integer()) {
      fail(key, "must be an integer");
    } else {
      x = v->get<std::int64_t>();
      if (x < min) fail(key, "must be >= " + std::to_string(min));
    }
    out_[key] = (v || def) ? Json(x) : Json(nullptr);
    return x;
  }

  bool flag(const char* key, bool def) {
    const Json* v = take(key);
    bool x = def;
    if (v) {
      if (!v->is_boolean())
        fail(key, "must be true or false");
      else
        x = v->get<bool>();
    }
    out_[key] = x;
    return x;
  }

  std::string text(const char* key, std::optional<std::string> def) {
    const Json* v = take(key);
    std::string x = def.value_or("");
    if (!v) {
      if (!def) missing(key);
    } else if (!v->is_string()) {
      fail(key, "must be a string");
    } else {
      x = v->get<std::string>();
    }
    out_[key] = (v || def) ? Json(x) : Json(nullptr);
    return x;
  }

  std::string choice(const char* key, std::optional<std::string> def, const std::vector<std::string>& allowed) {
    std::string x = text(key, def);
    if (out_[key].is_string() && std::find(allowed.begin(), allowed.end(), x) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key, "must be one of: " + list);
    }
    return x;
  }

  std::vector<double> numbers(const char* key, std::vector<double> def) {
    const Json* v = take(key);
    std::vector<double> x = def;
    if (v) {
      x.clear();
      if (!v->is_array()) {
        fail(key, "must be an array of numbers");
      } else {
        for (const auto& e : *v) {
          if (!e.is_number()) {
            fail(key, "must be an array of numbers");
            break;
          }
          x.push_back(e.get<double>());
        }
      }
    }
    out_[key] = x;
    return x;
  }

  /// Number that may be absent or null (kept as null).
  std::optional<double> maybe_number(const char* key) {
    const Json* v = take(key);
    if (!v || v->is_null()) {
      out_[key] = nullptr;
      return std::nullopt;
    }
    if (!v->is_number()) {
      fail(key, "must be a number or null");
      out_[key] = nullptr;
      return std::nullopt;
    }
    out_[key] = v->get<double>();
    return v->get<double>();
  }

  std::vector<std::string> strings(const char* key) {
    const Json* v = take(key);
    std::vector<std::string> x;
    if (v) {
      if (!v->is_array()) {
        fail(key, "must be an array of strings");
      } else {
        for (const auto& e : *v) {
          if (!e.is_string()) {
            fail(key, "must be an array of strings");
            break;
          }
          x.push_back(e.get<std::string>());
        }
      }
    }
    out_[key] = x;
    return x;
  }

  /// Optional nested object; nullptr (normalized to null) when absent.
  const Json* child(const char* key) {
    const Json* v = take(key);
    if (v && v->is_null()) v = nullptr;
    if (v && !v->is_object()) {
      fail(key, "must be an object");
      v = nullptr;
    }
    if (!v) out_[key] = nullptr;
    return v;
  }
  Json& out(const char* key) { return out_[key]; }
  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::vector<std::string>& errors() { return errs_; }

  void fail(const std::string& key, const std::string& msg) {
    errs_.push_back((key.empty() ? path_ : path(key.c_str())) + " " + msg);
  }

  /// Unknown keys are errors: typos must not silently fall back to defaults.
  void finish() {
    if (!in_) return;
    for (const auto& [k, v] : in_->items())
      if (!seen_.count(k)) errs_.push_back(path(k.c_str()) + " is not a recognized field");
  }

 private:
  const Json* take(const char* key) {
    seen_.insert(key);
    if (!in_) return nullptr;
    auto it = in_->find(key);
    if (it == in_->end()) return nullptr;
    return &*it;
  }
  void missing(const char* key) { errs_.push_back(path(key) + " is required"); }

  const Json* in_;
  Json& out_;
  std::vector<std::string>& errs_;
  std::string path_;
  std::set<std::string> seen_;
};

// ---- per-subcommand parameter schemas --------------------------------------

void correlation_schema(Block& parent, const char* key) {
  const Json* in = parent.child(key);
  if (!in) return;
  Block b(in, parent.out(key), parent.errors(), parent.path(key));
  b.number("dr_max", 0.0, Bound::nonneg);
  b.number("bin_width", 0.5, Bound::positive);
  b.numbers("lags", {});
  b.integer("lag_log_count", 0, 0);
  b.number("lag_log_min", 1.0, Bound::positive);
  b.number("lag_log_max", 0.0, Bound::nonneg);
  b.flag("lag_include_zero", true);
  b.numbers("reference_times", {0.0});
  b.finish();
}

void saturation_schema(Block& parent) {
  const Json* in = parent.child("saturation");
  if (!in) return;
  Block b(in, parent.out("saturation"), parent.errors(), parent.path("saturation"));
  b.number("t_start", std::nullopt, Bound::nonneg);
  b.number("interval", std::nullopt, Bound::positive);
  b.finish();
}

void snapshot_schema(Block& b) {
  b.numbers("snapshot_times", {});
  b.integer("snapshot_log_count", 0, 0);
  b.number("snapshot_log_min", 1.0, Bound::positive);
  b.choice("write_fields", "final", {"none", "final", "all"});
}

void kpz_schema(Block& b) {
  b.integer("L", std::nullopt, 3);
  b.number("t_max", std::nullopt, Bound::nonneg);
  b.number("nu", 1.0, Bound::positive);
  b.number("lambda", 3.0);
  b.number("D", 1.0, Bound::nonneg);
  b.number("dt", 0.05, Bound::positive);
  b.number("spacing", 1.0, Bound::positive);
  b.integer("n_realizations", 1, 1);
  b.choice("nonlinearity", "lam_shin", {"lam_shin", "central"});
  const auto ic = b.choice("initial_condition", "flat", {"flat", "supplied"});
  const auto path = b.text("initial_field", "");
  if (ic == "supplied" && path.empty()) b.fail("initial_field", "is required when initial_condition is 'supplied'");
  snapshot_schema(b);
  correlation_schema(b, "correlation");
  saturation_schema(b);
}

void gpe_schema(Block& b) {
  const GpeParams d;
  b.integer("L", std::nullopt, 4);
  b.number("t_max", std::nullopt, Bound::nonneg);
  b.number("kinetic", d.kinetic, Bound::nonneg);
  b.number("gamma", d.gamma, Bound::nonneg);
  b.number("gamma2", d.gamma2, Bound::nonneg);
  b.number("g", d.g);
  b.number("g_reservoir", d.g_reservoir);
  b.number("R", d.stimulated, Bound::positive);
  b.number("gamma_reservoir", d.gamma_reservoir, Bound::positive);
  b.number("pump", d.pump, Bound::nonneg);
  b.number("noise_sigma", d.noise_sigma, Bound::nonneg);
  b.number("dt", d.dt, Bound::positive);
  b.number("spacing", d.spacing, Bound::positive);
  b.integer("n_realizations", 1, 1);
  b.choice("initial_condition", "seed_noise", {"seed_noise", "uniform_seed", "steady_state"});
  b.number("seed_amplitude", d.seed_amplitude, Bound::nonneg);
  b.number("max_clamp_fraction", d.max_clamp_fraction, Bound::nonneg);
  snapshot_schema(b);
  correlation_schema(b, "correlation");
}

void window_schema(Block& parent) {
  const Json* in = parent.child("window");
  Block b(in, parent.out("window"), parent.errors(), parent.path("window"));
  const ScalingWindow w;
  b.number("dr_min", w.dr_min, Bound::nonneg);
  b.number("dr_max", w.dr_max, Bound::nonneg);
  b.number("dt_min", w.dt_min, Bound::nonneg);
  b.number("dt_max", w.dt_max, Bound::nonneg);
  b.finish();
}

void demod_schema(Block& b) {
  const DemodulationOptions d;
  b.number("window_fraction", d.window_fraction, Bound::positive);
  b.number("edge_fraction", d.edge_fraction, Bound::nonneg);
  b.number("intensity_floor", d.intensity_floor, Bound::nonneg);
  b.flag("estimate_arms", d.estimate_arms);
}

void parameter_schema(Subcommand sub, const Json* in, Json& out, std::vector<std::string>& errs) {
  Block b(in, out, errs, "parameters");
  switch (sub) {
    case Subcommand::simulate_kpz: kpz_schema(b); break;
    case Subcommand::simulate_gpe: gpe_schema(b); break;
    case Subcommand::analyze_correlations:
      b.text("input", std::nullopt);
      b.number("plateau_min_decades", 1.0, Bound::positive);
      break;
    case Subcommand::tabulate_scaling:
      b.text("input", std::nullopt);
      b.number("beta", std::nullopt, Bound::positive);
      b.number("chi", std::nullopt, Bound::positive);
      b.integer("n_bins", 24, 5);
      window_schema(b);
      break;
    case Subcommand::collapse_fit:
      b.text("input", std::nullopt);
      b.text("table", std::nullopt);
      b.choice("mode", "free_exponents", {"amplitudes_only", "free_exponents", "galilean_constrained"});
      // Null exponents mean "take the table's".
      b.maybe_number("beta");
      b.maybe_number("chi");
      b.number("bin_width", 0.5, Bound::nonneg);
      b.flag("exclusion", true);
      b.number("exclusion_threshold", 3.0, Bound::positive);
      window_schema(b);
      break;
    case Subcommand::finite_size: {
      const auto inputs = b.strings("inputs");
      const auto sides = b.numbers("sides", {});
      const auto w = b.numbers("w_sat", {});
      const auto err = b.numbers("err", {});
      if (inputs.empty() && sides.empty()) errs.push_back("parameters needs either 'inputs' or 'sides' with 'w_sat'");
      if (sides.size() != w.size() || (!err.empty() && err.size() != sides.size()))
        errs.push_back("parameters.sides, w_sat and err must have equal lengths");
      break;
    }
    case Subcommand::fringe_synthesize: {
      b.integer("width", std::nullopt, 8);
      b.integer("height", std::nullopt, 8);
      b.number("carrier_kx", std::nullopt);
      b.number("carrier_ky", std::nullopt);
      b.number("counts_scale", 1.0, Bound::positive);
      b.choice("g1_type", "uniform", {"uniform", "gaussian", "kpz_like"});
      b.number("g1_re", 0.5);
      b.number("g1_im", 0.0);
      b.number("g1_width", 10.0, Bound::positive);
      b.number("g1_a", 0.05, Bound::nonneg);
      b.number("g1_two_chi", 0.78, Bound::positive);
      b.choice("arm_type", "uniform", {"uniform", "gaussian"});
      b.number("i1", 1.0, Bound::nonneg);
      b.number("i2", 1.0, Bound::nonneg);
      b.number("arm_waist", 40.0, Bound::positive);
      b.flag("shot_noise", false);
      break;
    }
    case Subcommand::fringe_demodulate:
      b.text("input_dir", std::nullopt);
      demod_schema(b);
      b.number("bin_width", 0.5, Bound::positive);
      b.number("dt", 0.0, Bound::nonneg);
      break;
    case Subcommand::fringe_noise:
      b.text("input_dir", std::nullopt);
      b.integer("n_mc", 100, static_cast<std::int64_t>(kMinShotNoiseSamples));
      demod_schema(b);
      break;
  }
  b.finish();
}

// ---- normalized block -> parameter structs ---------------------------------

std::vector<std::uint64_t> steps_of(const std::vector<double>& times, double dt) {
  std::vector<std::uint64_t> s;
  for (double t : times) s.push_back(step_index(t, dt));
  return s;
}

std::vector<double> times_of(const std::set<std::uint64_t>& steps, double dt) {
  std::vector<double> out;
  for (auto s : steps) out.push_back(static_cast<double>(s) * dt);
  return out;
}

/// Correlation grid from a normalized block (lags merged and snapped to dt).
CorrelationGrid correlation_grid(const Json& c, std::size_t side, double spacing, double dt, double t_max) {
  CorrelationGrid g;
  g.bin_width = c["bin_width"].get<double>();
  const double dr_max = c["dr_max"].get<double>();
  if (dr_max > static_cast<double>(side) * spacing / 3.0 + 1e-12)
    throw_error(ErrorKind::config, "correlation.dr_max must be <= L a / 3 (periodic images bias larger separations)");
  g.dr_centers = populated_dr_centers(side, spacing, dr_max, g.bin_width);
  std::set<std::uint64_t> lag_steps;
  for (double l : c["lags"].get<std::vector<double>>()) {
    if (!(l >= 0.0)) throw_error(ErrorKind::config, "correlation.lags must be >= 0");
    lag_steps.insert(step_index(l, dt));
  }
  g.reference_times = c["reference_times"].get<std::vector<double>>();
  if (g.reference_times.empty()) throw_error(ErrorKind::config, "correlation.reference_times must not be empty");
  const double t0_max = *std::max_element(g.reference_times.begin(), g.reference_times.end());
  const auto count = c["lag_log_count"].get<std::size_t>();
  if (count > 0) {
    double hi = c["lag_log_max"].get<double>();
    if (!(hi > 0.0)) hi = t_max - t0_max;
    for (double l : log_spaced_times(c["lag_log_min"].get<double>(), hi, count, dt, c["lag_include_zero"].get<bool>()))
      lag_steps.insert(step_index(l, dt));
  } else if (c["lag_include_zero"].get<bool>()) {
    lag_steps.insert(0);
  }
  g.lags = times_of(lag_steps, dt);
  if (g.lags.empty()) throw_error(ErrorKind::config, "correlation block defines no lags");
  for (double t0 : g.reference_times)
    if (t0 < 0.0 || step_index(t0, dt) + *lag_steps.rbegin() > step_index(t_max, dt))
      throw_error(ErrorKind::config, "correlation reference_times + lags exceed t_max");
  for (double& t0 : g.reference_times) t0 = static_cast<double>(step_index(t0, dt)) * dt;
  return g;
}

std::vector<double> saturation_times(const Json& s, double t_max) {
  std::vector<double> out;
  const double t0 = s["t_start"].get<double>(), dti = s["interval"].get<double>();
  for (double t = t0; t <= t_max + 1e-9; t += dti) out.push_back(std::min(t, t_max));
  return out;
}

std::vector<double> merged_snapshot_times(const Json& p, double dt, double t_max, std::optional<CorrelationGrid> grid) {
  std::set<std::uint64_t> steps;
  for (auto s : steps_of(p["snapshot_times"].get<std::vector<double>>(), dt)) steps.insert(s);
  const auto n_log = p["snapshot_log_count"].get<std::size_t>();
  if (n_log > 0)
    for (auto s : steps_of(log_spaced_times(p["snapshot_log_min"].get<double>(), t_max, n_log, dt, false), dt))
      steps.insert(s);
  if (grid)
    for (auto s : steps_of(correlation_snapshot_times(*grid, dt), dt)) steps.insert(s);
  if (p.contains("saturation") && !p["saturation"].is_null())
    for (auto s : steps_of(saturation_times(p["saturation"], t_max), dt)) steps.insert(s);
  steps.insert(step_index(t_max, dt));
  return times_of(steps, dt);
}

ScalingWindow window_from(const Json& w) {
  return {w["dr_min"].get<double>(), w["dr_max"].get<double>(), w["dt_min"].get<double>(), w["dt_max"].get<double>()};
}

DemodulationOptions demod_from(const Json& p) {
  DemodulationOptions d;
  d.window_fraction = p["window_fraction"].get<double>();
  d.edge_fraction = p["edge_fraction"].get<double>();
  d.intensity_floor = p["intensity_floor"].get<double>();
  d.estimate_arms = p["estimate_arms"].get<bool>();
  return d;
}

KpzParams kpz_params_unchecked(const Json& p, std::uint64_t seed, bool load_field) {
  KpzParams k;
  k.side = p["L"].get<std::size_t>();
  k.t_max = p["t_max"].get<double>();
  k.nu = p["nu"].get<double>();
  k.lambda = p["lambda"].get<double>();
  k.noise_strength = p["D"].get<double>();
  k.dt = p["dt"].get<double>();
  k.spacing = p["spacing"].get<double>();
  k.n_realizations = p["n_realizations"].get<std::size_t>();
  k.master_seed = seed;
  k.nonlinearity = p["nonlinearity"] == "central" ? kernels::Nonlinearity::central : kernels::Nonlinearity::lam_shin;
  if (p["initial_condition"] == "supplied") {
    k.initial_condition = InitialCondition::supplied;
    if (load_field) k.initial_field = io::read_phase_field_binary(p["initial_field"].get<std::string>());
  }
  return k;
}

GpeParams gpe_params_unchecked(const Json& p, std::uint64_t seed) {
  GpeParams g;
  g.side = p["L"].get<std::size_t>();
  g.t_max = p["t_max"].get<double>();
  g.kinetic = p["kinetic"].get<double>();
  g.gamma = p["gamma"].get<double>();
  g.gamma2 = p["gamma2"].get<double>();
  g.g = p["g"].get<double>();
  g.g_reservoir = p["g_reservoir"].get<double>();
  g.stimulated = p["R"].get<double>();
  g.gamma_reservoir = p["gamma_reservoir"].get<double>();
  g.pump = p["pump"].get<double>();
  g.noise_sigma = p["noise_sigma"].get<double>();
  g.dt = p["dt"].get<double>();
  g.spacing = p["spacing"].get<double>();
  g.n_realizations = p["n_realizations"].get<std::size_t>();
  g.master_seed = seed;
  g.seed_amplitude = p["seed_amplitude"].get<double>();
  g.max_clamp_fraction = p["max_clamp_fraction"].get<double>();
  const auto ic = p["initial_condition"].get<std::string>();
  g.initial_condition = ic == "steady_state"   ? GpeInitialCondition::steady_state
                        : ic == "uniform_seed" ? GpeInitialCondition::uniform_seed
                                               : GpeInitialCondition::seed_noise;
  return g;
}

std::optional<CorrelationGrid> grid_if_any(const Json& p, std::size_t side, double spacing, double dt, double t_max) {
  if (!p.contains("correlation") || p["correlation"].is_null()) return std::nullopt;
  return correlation_grid(p["correlation"], side, spacing, dt, t_max);
}

}  // namespace

KpzParams kpz_params(const RunConfig& cfg) {
  KpzParams k = kpz_params_unchecked(cfg.parameters, cfg.seed, true);
  const auto grid = grid_if_any(cfg.parameters, k.side, k.spacing, k.dt, k.t_max);
  k.snapshot_times = merged_snapshot_times(cfg.parameters, k.dt, k.t_max, grid);
  return k;
}

GpeParams gpe_params(const RunConfig& cfg) {
  GpeParams g = gpe_params_unchecked(cfg.parameters, cfg.seed);
  const auto grid = grid_if_any(cfg.parameters, g.side, g.spacing, g.dt, g.t_max);
  g.snapshot_times = merged_snapshot_times(cfg.parameters, g.dt, g.t_max, grid);
  return g;
}

ConfigResult validate_config(const Json& doc) {
  ConfigResult res;
  auto& errs = res.errors;
  if (!doc.is_object()) {
    errs.push_back("config document must be a JSON object");
    return res;
  }
  Json top;
  Block b(&doc, top, errs, "");
  const auto sub_name = b.text("subcommand", std::nullopt);
  const auto out_dir = b.text("output_dir", std::nullopt);
  const auto seed = b.integer("seed", std::nullopt, 0);
  const auto workers = b.integer("workers", 1, 1);
  const Json* params_in = b.child("parameters");
  std::optional<Subcommand> sub;
  if (top["subcommand"].is_string()) {
    sub = subcommand_from_string(sub_name);
    if (!sub) errs.push_back("subcommand '" + sub_name + "' is not one of the supported subcommands");
  }
  Json params = Json::object();
  if (sub) parameter_schema(*sub, params_in, params, errs);
  b.finish();
  if (!errs.empty()) return res;

  // Semantic checks that need the assembled parameter structs.
  try {
    if (sub == Subcommand::simulate_kpz) {
      KpzParams k = kpz_params_unchecked(params, static_cast<std::uint64_t>(seed), false);
      k.initial_condition = InitialCondition::flat;
      for (const auto& e : validation_errors(k)) errs.push_back("parameters: " + e);
      if (errs.empty()) (void)grid_if_any(params, k.side, k.spacing, k.dt, k.t_max);
    } else if (sub == Subcommand::simulate_gpe) {
      GpeParams g = gpe_params_unchecked(params, static_cast<std::uint64_t>(seed));
      for (const auto& e : validation_errors(g)) errs.push_back("parameters: " + e);
      if (errs.empty()) (void)grid_if_any(params, g.side, g.spacing, g.dt, g.t_max);
    } else if (sub == Subcommand::fringe_synthesize) {
      const Carrier k{params["carrier_kx"].get<double>(), params["carrier_ky"].get<double>()};
      if (!carrier_resolvable(k, params["width"].get<std::size_t>(), params["height"].get<std::size_t>()))
        errs.push_back("parameters: carrier |k_c| must lie in (8 pi / min(W, H), 0.8 pi)");
      if (std::hypot(params["g1_re"].get<double>(), params["g1_im"].get<double>()) > 1.0)
        errs.push_back("parameters: |g1| must be <= 1");
    }
  } catch (const Error& e) {
    errs.push_back(std::string("parameters: ") + e.what());
  }
  if (!errs.empty()) return res;

  RunConfig cfg;
  cfg.subcommand = *sub;
  cfg.output_dir = out_dir;
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.workers = static_cast<int>(workers);
  cfg.parameters = std::move(params);
  res.config = std::move(cfg);
  return res;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

struct Context {
  const RunConfig& cfg;
  std::vector<fs::path> results;
  Json summary = Json::object();

  fs::path out(const std::string& name) {
    const fs::path p = cfg.output_dir / name;
    results.push_back(p);
    return p;
  }
  ExecutionPolicy exec() const { return {cfg.workers}; }
};

Json versions() {
  return Json{{"kpz2d", "0.1.0"},
              {"fftw", std::string(fftw_version)},
              {"boost", BOOST_LIB_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__},
              {"cxx_standard", static_cast<long>(__cplusplus)}};
}

template <class Series>
void write_series_csv(const fs::path& path, const std::string& header, const Series& rows) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorKind::io, "cannot open " + path.string());
  out << header << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
  if (!out) throw_error(ErrorKind::io, "write failed for " + path.string());
}

using Row = std::vector<std::string>;
std::string fd(double v) { return io::format_double(v); }

// ---- simulate-kpz -----------------------------------------------------------

struct KpzReducer {
  RoughnessReducer roughness;
  std::optional<PhasePairReducer> pairs;
  std::vector<PhaseField> fields;
  std::string keep;  // none | final | all
  double t_final = 0.0;

  void on_snapshot(std::size_t i, const PhaseField& f) {
    roughness.on_snapshot(i, f);
    if (pairs) pairs->on_snapshot(i, f);
    if (keep == "all" || (keep == "final" && std::abs(f.time() - t_final) < 1e-9)) fields.push_back(f);
  }
};

void write_fields(Context& ctx, const std::vector<std::vector<PhaseField>>& per_traj) {
  for (std::size_t r = 0; r < per_traj.size(); ++r) {
    if (per_traj[r].empty()) continue;
    const fs::path dir = ctx.cfg.output_dir / "fields" / ("r" + std::to_string(r));
    fs::create_directories(dir);
    for (const auto& f : per_traj[r]) {
      char name[64];
      std::snprintf(name, sizeof name, "t%012.4f.bin", f.time());
      io::write_field_binary(dir / name, f);
      ctx.results.push_back(dir / name);
    }
  }
}

void run_simulate_kpz(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const KpzParams params = kpz_params(ctx.cfg);
  const auto grid = grid_if_any(p, params.side, params.spacing, params.dt, params.t_max);
  const std::string keep = p["write_fields"].get<std::string>();
  const double t_final = static_cast<double>(step_index(params.t_max, params.dt)) * params.dt;
  auto reducers = run_ensemble(
      params,
      [&](std::uint64_t) {
        KpzReducer r;
        if (grid) r.pairs.emplace(PhasePairReducer{RealPairAccumulator(*grid, params.side, params.spacing, params.dt)});
        r.keep = keep;
        r.t_final = t_final;
        return r;
      },
      ctx.exec());

  std::vector<std::vector<double>> w;
  for (const auto& r : reducers) w.push_back(r.roughness.values);
  const auto mean = ensemble_mean(w);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < mean.size(); ++i)
    rows.push_back({fd(reducers[0].roughness.times[i]), fd(mean[i].mean), fd(mean[i].stderr_),
                    std::to_string(reducers.size())});
  write_series_csv(ctx.out("roughness.csv"), "time,W_mean,W_stderr,n_realizations", rows);

  if (grid) {
    std::vector<RealPairAccumulator> accs;
    for (auto& r : reducers) accs.push_back(std::move(r.pairs->pairs));
    const auto map = combine_connected(accs, *grid);
    io::write_correlation_csv(ctx.out("correlation.csv"), map);
  }

  if (!p["saturation"].is_null()) {
    const auto times = saturation_times(p["saturation"], params.t_max);
    std::set<std::uint64_t> sat_steps;
    for (double t : times) sat_steps.insert(step_index(t, params.dt));
    std::vector<double> per_real;
    for (const auto& r : reducers) {
      double s = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < r.roughness.times.size(); ++i)
        if (sat_steps.count(step_index(r.roughness.times[i], params.dt))) {
          s += r.roughness.values[i];
          ++n;
        }
      per_real.push_back(s / static_cast<double>(n));
    }
    const auto m = mean_with_error(per_real);
    write_series_csv(ctx.out("saturation.csv"), "L,w_sat,err,t_start,t_end,n_realizations",
                     std::vector<Row>{{std::to_string(params.side), fd(m.mean), fd(m.stderr_), fd(times.front()),
                                       fd(times.back()), std::to_string(reducers.size())}});
    ctx.summary["w_sat"] = m.mean;
    ctx.summary["w_sat_stderr"] = m.stderr_;
  }

  std::vector<std::vector<PhaseField>> fields;
  for (auto& r : reducers) fields.push_back(std::move(r.fields));
  write_fields(ctx, fields);
  ctx.summary["g_kpz"] = kpz_coupling(params.nu, params.lambda, params.noise_strength);
  ctx.summary["n_snapshots"] = params.snapshot_times.size();
}

// ---- simulate-gpe -----------------------------------------------------------

struct GpeReducer {
  std::vector<double> times, density;
  std::optional<CondensatePairReducer> pairs;
  std::vector<ComplexField> fields;
  std::string keep;
  double t_final = 0.0;
  std::uint64_t clamps = 0, site_steps = 0;

  void on_snapshot(std::size_t i, const CondensateState& s) {
    times.push_back(s.time);
    density.push_back(mean_density(s));
    if (pairs) pairs->on_snapshot(i, s);
    if (keep == "all" || (keep == "final" && std::abs(s.time - t_final) < 1e-9)) fields.push_back(s.psi);
    clamps = s.clamp_events;
    site_steps = s.site_steps;
  }
};

void run_simulate_gpe(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const GpeParams params = gpe_params(ctx.cfg);
  const auto grid = grid_if_any(p, params.side, params.spacing, params.dt, params.t_max);
  const std::string keep = p["write_fields"].get<std::string>();
  const double t_final = static_cast<double>(step_index(params.t_max, params.dt)) * params.dt;
  auto reducers = run_gpe_ensemble(
      params,
      [&](std::uint64_t) {
        GpeReducer r;
        if (grid)
          r.pairs.emplace(CondensatePairReducer{ComplexPairAccumulator(*grid, params.side, params.spacing, params.dt)});
        r.keep = keep;
        r.t_final = t_final;
        return r;
      },
      ctx.exec());

  std::vector<std::vector<double>> d;
  std::uint64_t clamps = 0, site_steps = 0;
  for (const auto& r : reducers) {
    d.push_back(r.density);
    clamps += r.clamps;
    site_steps += r.site_steps;
  }
  const auto mean = ensemble_mean(d);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < mean.size(); ++i)
    rows.push_back({fd(reducers[0].times[i]), fd(mean[i].mean), fd(mean[i].stderr_), std::to_string(reducers.size())});
  write_series_csv(ctx.out("density.csv"), "time,mean_density,stderr,n_realizations", rows);

  if (grid) {
    std::vector<ComplexPairAccumulator> accs;
    for (auto& r : reducers) accs.push_back(std::move(r.pairs->pairs));
    const auto map = combine_coherence(accs, *grid);
    io::write_correlation_csv(ctx.out("coherence.csv"), map);
    io::write_correlation_csv(ctx.out("minus_log_g1.csv"), minus_log_g1(map));
  }
  for (std::size_t r = 0; r < reducers.size(); ++r) {
    if (reducers[r].fields.empty()) continue;
    const fs::path dir = ctx.cfg.output_dir / "fields" / ("r" + std::to_string(r));
    fs::create_directories(dir);
    for (const auto& f : reducers[r].fields) {
      char name[64];
      std::snprintf(name, sizeof name, "t%012.4f.bin", f.time());
      io::write_field_binary(dir / name, f);
      ctx.results.push_back(dir / name);
    }
  }
  try {
    const auto ss = steady_state_homogeneous(params);
    ctx.summary["mean_field_density"] = ss.density;
  } catch (const Error&) {
    ctx.summary["mean_field_density"] = 0.0;
  }
  ctx.summary["threshold_power"] = threshold_power(params);
  ctx.summary["clamp_fraction"] = site_steps ? static_cast<double>(clamps) / static_cast<double>(site_steps) : 0.0;
}

// ---- analysis ----------------------------------------------------------------

void run_analyze(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  CorrelationMap map = io::read_correlation_csv(p["input"].get<std::string>());
  if (map.kind == CorrelationKind::coherence) {
    map = minus_log_g1(map);
    io::write_correlation_csv(ctx.out("minus_log_g1.csv"), map);
  }
  const auto ex = running_exponents(map);
  const double decades = p["plateau_min_decades"].get<double>();
  std::vector<Row> rows;
  auto plateau_row = [&](const char* name, const ExponentSeries& s) {
    try {
      const auto pl = find_plateau(s, decades);
      rows.push_back({name, fd(pl.value), fd(pl.stderr_), fd(pl.spread), fd(pl.axis_min), fd(pl.axis_max),
                      std::to_string(pl.n_points)});
      ctx.summary[std::string(name) + "_plateau"] = pl.value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::insufficient_data) throw;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rows.push_back({name, fd(nan), fd(nan), fd(nan), fd(nan), fd(nan), "0"});
    }
  };
  if (!ex.beta.empty()) {
    io::write_exponent_csv(ctx.out("running_beta.csv"), ex.beta);
    plateau_row("beta", ex.beta);
  }
  if (!ex.chi.empty()) {
    io::write_exponent_csv(ctx.out("running_chi.csv"), ex.chi);
    plateau_row("chi", ex.chi);
  }
  write_series_csv(ctx.out("plateau.csv"), "quantity,value,stderr,spread,axis_min,axis_max,n_points", rows);
}

CorrelationMap load_scaling_input(const std::string& path) {
  auto map = io::read_correlation_csv(path);
  return map.kind == CorrelationKind::coherence ? minus_log_g1(map) : map;
}

void run_tabulate(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const auto map = load_scaling_input(p["input"].get<std::string>());
  const auto table = tabulate_scaling_function(map, p["beta"].get<double>(), p["chi"].get<double>(),
                                               window_from(p["window"]), p["n_bins"].get<std::size_t>(),
                                               p["input"].get<std::string>());
  io::write_table_csv(ctx.out("table.csv"), table);
  io::write_json(ctx.out("table.json"), io::table_to_json(table));
  ctx.summary["tail_slope"] = table.tail_slope();
  ctx.summary["n_nodes"] = table.node_y().size();
}

void run_collapse(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const auto map = load_scaling_input(p["input"].get<std::string>());
  const auto table = io::table_from_json(io::read_json(p["table"].get<std::string>()));
  const auto points = collapse_points(map, window_from(p["window"]), p["bin_width"].get<double>());
  FitOptions opts;
  opts.mode = fit_mode_from_string(p["mode"].get<std::string>());
  if (p["beta"].is_number()) opts.beta = p["beta"].get<double>();
  if (p["chi"].is_number()) opts.chi = p["chi"].get<double>();
  ScalingFit fit = odr_collapse_fit(points, table, opts);
  std::size_t iters = 0;
  if (p["exclusion"].get<bool>()) {
    const auto ex = sigma_exclusion(points, table, fit, opts, p["exclusion_threshold"].get<double>());
    fit = ex.fit;
    iters = ex.n_iterations;
  }
  auto doc = io::fit_to_json(fit);
  doc["exclusion_iterations"] = iters;
  io::write_json(ctx.out("fit.json"), doc);
  io::write_collapse_csv(ctx.out("collapse.csv"), points, fit);
  ctx.summary["beta"] = fit.beta;
  ctx.summary["chi"] = fit.chi;
}

std::vector<SaturationPoint> read_saturation_csv(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("L,w_sat,err", 0) != 0) throw_error(ErrorKind::io, "unexpected saturation CSV header in " + path.string());
  std::vector<SaturationPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    try {
      out.push_back({std::stod(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      throw_error(ErrorKind::io, "malformed saturation row in " + path.string());
    }
  }
  return out;
}

void run_finite_size(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  std::vector<SaturationPoint> pts;
  for (const auto& path : p["inputs"].get<std::vector<std::string>>())
    for (const auto& s : read_saturation_csv(path)) pts.push_back(s);
  const auto sides = p["sides"].get<std::vector<double>>();
  const auto w = p["w_sat"].get<std::vector<double>>();
  const auto err = p["err"].get<std::vector<double>>();
  for (std::size_t i = 0; i < sides.size(); ++i) pts.push_back({sides[i], w[i], err.empty() ? 0.0 : err[i]});
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.side < b.side; });
  const auto r = finite_size_chi(pts);
  std::vector<Row> rows;
  for (const auto& s : pts) rows.push_back({fd(s.side), fd(s.w_sat), fd(s.err)});
  write_series_csv(ctx.out("finite_size_points.csv"), "L,w_sat,err", rows);
  write_series_csv(ctx.out("finite_size.csv"), "quantity,value,stderr",
                   std::vector<Row>{{"two_chi", fd(r.two_chi), fd(r.stderr_)},
                                    {"chi", fd(0.5 * r.two_chi), fd(0.5 * r.stderr_)}});
  Json doc{{"two_chi", r.two_chi}, {"stderr", r.stderr_}, {"log_prefactor", r.log_prefactor}};
  if (r.two_chi > 0.0 && r.two_chi < 4.0) doc["galilean_beta"] = galilean_beta(0.5 * r.two_chi);
  io::write_json(ctx.out("finite_size.json"), doc);
  ctx.summary["two_chi"] = r.two_chi;
}

// ---- interferometry ------------------------------------------------------------

ComplexImage synthetic_g1(const Json& p, std::size_t w, std::size_t h) {
  ComplexImage g(w, h);
  const double cx = 0.5 * static_cast<double>(w - 1), cy = 0.5 * static_cast<double>(h - 1);
  const std::complex<double> base(p["g1_re"].get<double>(), p["g1_im"].get<double>());
  const auto type = p["g1_type"].get<std::string>();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double r = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
      std::complex<double> v = base;
      if (type == "gaussian") {
        const double s = p["g1_width"].get<double>();
        v = base * std::exp(-r * r / (2.0 * s * s));
      } else if (type == "kpz_like") {
        v = base * std::exp(-p["g1_a"].get<double>() * std::pow(2.0 * r, p["g1_two_chi"].get<double>()));
      }
      g.at(x, y) = v;
    }
  return g;
}

Image synthetic_arm(const Json& p, std::size_t w, std::size_t h, double amplitude) {
  Image im(w, h, amplitude);
  if (p["arm_type"] == "gaussian") {
    const double cx = 0.5 * static_cast<double>(w - 1), cy = 0.5 * static_cast<double>(h - 1);
    const double s = p["arm_waist"].get<double>();
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double r2 = std::pow(static_cast<double>(x) - cx, 2) + std::pow(static_cast<double>(y) - cy, 2);
        im.at(x, y) = amplitude * std::exp(-r2 / (2.0 * s * s));
      }
  }
  return im;
}

void run_fringe_synthesize(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const auto w = p["width"].get<std::size_t>(), h = p["height"].get<std::size_t>();
  const auto g1 = synthetic_g1(p, w, h);
  Interferogram ig = synthesize(g1, synthetic_arm(p, w, h, p["i1"].get<double>()),
                                synthetic_arm(p, w, h, p["i2"].get<double>()),
                                {p["carrier_kx"].get<double>(), p["carrier_ky"].get<double>()},
                                p["counts_scale"].get<double>());
  if (p["shot_noise"].get<bool>()) {
    NoiseStream stream(ctx.cfg.seed, 0);
    ig.intensity = add_shot_noise(ig.intensity, ig.counts_scale, stream);
  }
  io::write_image_binary(ctx.out("intensity.bin"), ig.intensity);
  io::write_image_binary(ctx.out("arm1.bin"), ig.arm1);
  io::write_image_binary(ctx.out("arm2.bin"), ig.arm2);
  io::write_image_csv(ctx.out("intensity.csv"), ig.intensity);
  io::write_complex_image_csv(ctx.out("g1_true.csv"), g1, Mask(w, h, 1));
  io::write_json(ctx.out("interferogram.json"),
                 Json{{"width", w},
                      {"height", h},
                      {"carrier_kx", ig.carrier.kx},
                      {"carrier_ky", ig.carrier.ky},
                      {"counts_scale", ig.counts_scale}});
}

Interferogram load_interferogram(const fs::path& dir) {
  const auto meta = io::read_json(dir / "interferogram.json");
  Interferogram ig;
  ig.intensity = io::read_image_binary(dir / "intensity.bin");
  ig.arm1 = io::read_image_binary(dir / "arm1.bin");
  ig.arm2 = io::read_image_binary(dir / "arm2.bin");
  try {
    ig.carrier = {meta.at("carrier_kx").get<double>(), meta.at("carrier_ky").get<double>()};
    ig.counts_scale = meta.at("counts_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::io, std::string("malformed interferogram.json: ") + e.what());
  }
  return ig;
}

void run_fringe_demodulate(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const auto ig = load_interferogram(p["input_dir"].get<std::string>());
  const auto d = demodulate(ig, demod_from(p));
  io::write_complex_image_csv(ctx.out("g1.csv"), d.g1, d.valid);
  const double cx = 0.5 * static_cast<double>(ig.intensity.width - 1);
  const double cy = 0.5 * static_cast<double>(ig.intensity.height - 1);
  io::write_correlation_csv(ctx.out("radial.csv"),
                            radial_profile(d.g1, d.valid, cx, cy, p["bin_width"].get<double>(), p["dt"].get<double>()));
}

void run_fringe_noise(Context& ctx) {
  const Json& p = ctx.cfg.parameters;
  const auto ig = load_interferogram(p["input_dir"].get<std::string>());
  const auto res = shot_noise_mc(ig, p["n_mc"].get<std::size_t>(), ctx.cfg.seed, ctx.exec(), demod_from(p));
  io::write_image_binary(ctx.out("sigma.bin"), res.sigma_abs_g1);
  io::write_image_csv(ctx.out("sigma.csv"), res.sigma_abs_g1);
  std::vector<double> s(res.sigma_abs_g1.data);
  std::nth_element(s.begin(), s.begin() + static_cast<long>(s.size() / 2), s.end());
  ctx.summary["median_sigma"] = s[s.size() / 2];
}

void dispatch(Context& ctx) {
  switch (ctx.cfg.subcommand) {
    case Subcommand::simulate_kpz: return run_simulate_kpz(ctx);
    case Subcommand::simulate_gpe: return run_simulate_gpe(ctx);
    case Subcommand::analyze_correlations: return run_analyze(ctx);
    case Subcommand::tabulate_scaling: return run_tabulate(ctx);
    case Subcommand::collapse_fit: return run_collapse(ctx);
    case Subcommand::finite_size: return run_finite_size(ctx);
    case Subcommand::fringe_synthesize: return run_fringe_synthesize(ctx);
    case Subcommand::fringe_demodulate: return run_fringe_demodulate(ctx);
    case Subcommand::fringe_noise: return run_fringe_noise(ctx);
  }
}

void write_error(const fs::path& dir, int code, ErrorKind kind, const std::string& message,
                 const std::vector<std::string>& errors) {
  try {
    fs::create_directories(dir);
    io::write_json(dir / "error.json", Json{{"exit_code", code},
                                            {"kind", std::string(to_string(kind))},
                                            {"message", message},
                                            {"errors", errors}});
  } catch (...) {
    // The exit code still reports the failure.
  }
}

}  // namespace

RunOutcome run(const RunConfig& cfg) {
  RunOutcome outcome;
  const auto t0 = std::chrono::steady_clock::now();
  Json manifest{{"config", cfg.to_json()},
                {"seed", cfg.seed},
                {"workers", cfg.workers},
                {"versions", versions()},
                {"status", "running"}};
  Context ctx{cfg, {}, Json::object()};
  try {
    fs::create_directories(cfg.output_dir);
    fs::remove(cfg.output_dir / "error.json");
    io::write_json(cfg.output_dir / "manifest.json", manifest);
  } catch (const std::exception& e) {
    outcome.exit_code = exit_code::io;
    outcome.message = std::string("cannot write manifest: ") + e.what();
    return outcome;
  }
  ErrorKind kind = ErrorKind::io;
  try {
    dispatch(ctx);
  } catch (const FitFailure& e) {
    outcome.exit_code = exit_code::fit_failure;
    outcome.message = e.what();
    kind = e.kind();
    manifest["best_iterate"] = io::fit_to_json(e.best_iterate());
  } catch (const Error& e) {
    outcome.exit_code = exit_code_for(e.kind());
    outcome.message = e.what();
    kind = e.kind();
  } catch (const fs::filesystem_error& e) {
    outcome.exit_code = exit_code::io;
    outcome.message = e.what();
  } catch (const std::exception& e) {
    outcome.exit_code = exit_code::internal;
    outcome.message = e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["timings"] = {{"wall_seconds", seconds}};
  manifest["status"] = outcome.exit_code == exit_code::ok ? "complete" : "failed";
  manifest["exit_code"] = outcome.exit_code;
  Json files = Json::array();
  for (const auto& f : ctx.results) files.push_back(fs::relative(f, cfg.output_dir).string());
  manifest["results"] = files;
  manifest["summary"] = ctx.summary;
  if (outcome.exit_code != exit_code::ok) {
    write_error(cfg.output_dir, outcome.exit_code, kind, outcome.message, {});
  } else {
    outcome.results = ctx.results;
  }
  try {
    io::write_json(cfg.output_dir / "manifest.json", manifest);
  } catch (const std::exception& e) {
    if (outcome.exit_code == exit_code::ok) {
      outcome.exit_code = exit_code::io;
      outcome.message = e.what();
    }
  }
  return outcome;
}

RunOutcome run_document(const Json& doc) {
  auto res = validate_config(doc);
  if (!res.config) {
    RunOutcome o;
    o.exit_code = exit_code::config;
    for (const auto& e : res.errors) o.message += (o.message.empty() ? "" : "; ") + e;
    if (doc.is_object() && doc.contains("output_dir") && doc["output_dir"].is_string())
      write_error(doc["output_dir"].get<std::string>(), o.exit_code, ErrorKind::config, "invalid configuration",
                  res.errors);
    return o;
  }
  return run(*res.config);
}

// ---------------------------------------------------------------------------
// Recipes

std::vector<std::string> recipe_names() { return {"reproduce-beta", "reproduce-chi"}; }

namespace {

void merge_into(Json& base, const Json& overrides, const char* key) {
  if (overrides.is_object() && overrides.contains(key) && overrides[key].is_object()) base.merge_patch(overrides[key]);
}

RunOutcome run_step(const Json& doc, RunOutcome& total) {
  auto o = run_document(doc);
  for (const auto& r : o.results) total.results.push_back(r);
  if (o.exit_code != exit_code::ok) {
    total.exit_code = o.exit_code;
    total.message = doc["output_dir"].get<std::string>() + ": " + o.message;
  }
  return o;
}

}  // namespace

RunOutcome run_recipe(const std::string& name, const fs::path& output, std::uint64_t seed, int workers,
                      const Json& overrides) {
  RunOutcome total;
  const fs::path root = fs::absolute(output);
  auto doc_for = [&](const char* sub, const fs::path& dir, Json params) {
    return Json{{"subcommand", sub},
                {"output_dir", dir.string()},
                {"seed", seed},
                {"workers", workers},
                {"parameters", std::move(params)}};
  };
  if (name == "reproduce-beta") {
    // Growth regime from a flat start: C(0, dt) with t0 = 0 is the roughness.
    Json sim{{"L", 256},
             {"t_max", 500.0},
             {"dt", 0.05},
             {"n_realizations", 16},
             {"write_fields", "none"},
             {"correlation",
              {{"dr_max", 0.0}, {"lag_log_count", 41}, {"lag_log_min", 0.5}, {"reference_times", {0.0}}}}};
    merge_into(sim, overrides, "simulate");
    if (run_step(doc_for("simulate-kpz", root / "simulate", sim), total).exit_code) return total;
    Json ana{{"input", (root / "simulate" / "correlation.csv").string()}, {"plateau_min_decades", 1.0}};
    merge_into(ana, overrides, "analyze");
    run_step(doc_for("analyze-correlations", root / "analyze", ana), total);
    return total;
  }
  if (name == "reproduce-chi") {
    std::vector<int> sides{16, 32, 64, 128};
    if (overrides.is_object() && overrides.contains("sides")) sides = overrides["sides"].get<std::vector<int>>();
    std::vector<std::string> inputs;
    for (int L : sides) {
      // Saturated regime: t >= 5 L^1.6, W averaged over the second half. The
      // long runs use a halved step; dt = 0.05 blows up rarely at L = 128.
      const double t_max = std::ceil(5.0 * std::pow(static_cast<double>(L), 1.6));
      Json sim{{"L", L},
               {"t_max", t_max},
               {"dt", 0.025},
               {"n_realizations", 32},
               {"write_fields", "none"},
               {"saturation", {{"t_start", 0.5 * t_max}, {"interval", std::max(1.0, t_max / 200.0)}}}};
      merge_into(sim, overrides, "simulate");
      const fs::path dir = root / ("simulate_L" + std::to_string(L));
      if (run_step(doc_for("simulate-kpz", dir, sim), total).exit_code) return total;
      inputs.push_back((dir / "saturation.csv").string());
    }
    run_step(doc_for("finite-size", root / "finite_size", Json{{"inputs", inputs}}), total);
    return total;
  }
  total.exit_code = exit_code::config;
  total.message = "unknown recipe '" + name + "'";
  return total;
}

}  // namespace kpz2d::cli
