#include "kpz2d/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace kpz2d {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Weighted pool-adjacent-violators: least-squares non-decreasing fit.
std::vector<double> isotonic_increasing(const std::vector<double>& v, const std::vector<double>& w) {
  struct Block {
    double value, weight;
    std::size_t len;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < v.size(); ++i) {
    blocks.push_back({v[i], w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
      a.weight += b.weight;
      a.len += b.len;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.len, b.value);
  return out;
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2)));
}

}  // namespace

ScalingFunctionTable ScalingFunctionTable::from_nodes(std::vector<double> y, std::vector<double> values,
                                                      std::vector<std::size_t> counts, TableProvenance provenance) {
  if (y.size() != values.size()) throw_error(ErrorKind::parameter, "table nodes and values differ in length");
  if (counts.empty()) counts.assign(y.size(), 1);
  if (counts.size() != y.size()) throw_error(ErrorKind::parameter, "table counts differ in length");
  if (y.size() < 4) throw_error(ErrorKind::insufficient_data, "scaling table needs at least 4 nodes with y > 0");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) throw_error(ErrorKind::parameter, "table nodes need finite y > 0");
    if (i > 0 && !(y[i] > y[i - 1])) throw_error(ErrorKind::parameter, "table nodes must be strictly increasing");
    if (!std::isfinite(values[i]) || values[i] < 1.0 - 1e-12)
      throw_error(ErrorKind::parameter, "table values must be finite and >= C(0) = 1");
    values[i] = std::max(values[i], 1.0);
    if (i > 0 && values[i] < values[i - 1]) throw_error(ErrorKind::parameter, "table values must be non-decreasing");
  }
  ScalingFunctionTable t;
  t.y_ = std::move(y);
  t.c_ = std::move(values);
  t.counts_ = std::move(counts);
  t.prov_ = std::move(provenance);
  const std::size_t m = t.y_.size();
  for (std::size_t i = 0; i < m; ++i) {
    t.u_.push_back(std::log(t.y_[i]));
    t.f_.push_back(std::log(t.c_[i]));
  }
  const std::size_t n_tail = std::max<std::size_t>(3, (m + 2) / 3);
  double su = 0.0, sf = 0.0, suu = 0.0, suf = 0.0;
  for (std::size_t i = m - n_tail; i < m; ++i) {
    su += t.u_[i];
    sf += t.f_[i];
    suu += t.u_[i] * t.u_[i];
    suf += t.u_[i] * t.f_[i];
  }
  const double nt = static_cast<double>(n_tail);
  t.tail_slope_ = std::max(0.0, (nt * suf - su * sf) / (nt * suu - su * su));
  t.small_y_power_ = t.prov_.chi > 0.0 ? 2.0 * t.prov_.chi : 1.0;
  t.interp_.emplace(std::vector<double>(t.u_), std::vector<double>(t.f_));
  return t;
}

std::vector<double> ScalingFunctionTable::y_grid() const {
  std::vector<double> out{0.0};
  out.insert(out.end(), y_.begin(), y_.end());
  return out;
}

std::vector<double> ScalingFunctionTable::value_grid() const {
  std::vector<double> out{1.0};
  out.insert(out.end(), c_.begin(), c_.end());
  return out;
}

double ScalingFunctionTable::log_value(double u) const {
  if (!interp_) throw_error(ErrorKind::parameter, "empty scaling table");
  if (u < u_.front()) return f_.front() * std::exp(small_y_power_ * (u - u_.front()));
  if (u > u_.back()) return f_.back() + tail_slope_ * (u - u_.back());
  return (*interp_)(u);
}

double ScalingFunctionTable::log_derivative(double u) const {
  if (!interp_) throw_error(ErrorKind::parameter, "empty scaling table");
  if (u < u_.front()) return f_.front() * small_y_power_ * std::exp(small_y_power_ * (u - u_.front()));
  if (u > u_.back()) return tail_slope_;
  return interp_->prime(u);
}

double ScalingFunctionTable::operator()(double y) const {
  if (y < 0.0) throw_error(ErrorKind::domain, "scaling function needs y >= 0");
  if (y == 0.0) return 1.0;
  return std::exp(log_value(std::log(y)));
}

double scaling_anchor_amplitude(const CorrelationMap& map, double beta, const ScalingWindow& window) {
  const long ir = map.dr_index(0.0);
  if (ir < 0) throw_error(ErrorKind::insufficient_data, "map has no dr = 0 row for the amplitude anchor");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t it = 0; it < map.dt_axis.size(); ++it) {
    const double dt = map.dt_axis[it];
    if (!(dt > 0.0) || !window.contains(0.0, dt)) continue;
    const auto& c = map.cell(static_cast<std::size_t>(ir), it);
    if (!c.usable || !(c.value.real() > 0.0)) continue;
    sum += std::log(c.value.real()) - 2.0 * beta * std::log(dt);
    ++n;
  }
  if (n == 0) throw_error(ErrorKind::insufficient_data, "no positive dr = 0 cells inside the window");
  return std::exp(sum / static_cast<double>(n));
}

ScalingFunctionTable tabulate_scaling_function(const CorrelationMap& map, double beta, double chi,
                                               const ScalingWindow& window, std::size_t n_bins,
                                               const std::string& source) {
  if (!(beta > 0.0) || !(chi > 0.0)) throw_error(ErrorKind::domain, "tabulation needs beta, chi > 0");
  if (n_bins < 5) throw_error(ErrorKind::parameter, "tabulation needs at least 5 bins");
  const double a0 = scaling_anchor_amplitude(map, beta, window);
  std::vector<double> ly, c;
  for (std::size_t ir = 0; ir < map.dr_axis.size(); ++ir)
    for (std::size_t it = 0; it < map.dt_axis.size(); ++it) {
      const double dr = map.dr_axis[ir], dt = map.dt_axis[it];
      if (!(dr > 0.0) || !(dt > 0.0) || !window.contains(dr, dt)) continue;
      const auto& cell = map.cell(ir, it);
      if (!cell.usable || !(cell.value.real() > 0.0)) continue;
      ly.push_back(std::log(dr) - beta / chi * std::log(dt));
      c.push_back(cell.value.real() / (a0 * std::pow(dt, 2.0 * beta)));
    }
  if (ly.empty()) throw_error(ErrorKind::insufficient_data, "no usable cells with dr, dt > 0 inside the window");
  const auto [lo_it, hi_it] = std::minmax_element(ly.begin(), ly.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> sum_ly(n_bins, 0.0), sum_c(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < ly.size(); ++i) {
    std::size_t b = 0;
    if (hi > lo) b = std::min(n_bins - 1, static_cast<std::size_t>((ly[i] - lo) / (hi - lo) * static_cast<double>(n_bins)));
    sum_ly[b] += ly[i];
    sum_c[b] += c[i];
    ++count[b];
  }
  std::vector<double> y, mean, w;
  std::vector<std::size_t> counts;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] == 0) continue;
    const double n = static_cast<double>(count[b]);
    y.push_back(std::exp(sum_ly[b] / n));
    mean.push_back(sum_c[b] / n);
    w.push_back(n);
    counts.push_back(count[b]);
  }
  if (y.size() < 5)
    throw_error(ErrorKind::insufficient_data,
                "only " + std::to_string(y.size()) + " populated y bins; at least 5 are needed");
  auto mono = isotonic_increasing(mean, w);
  for (double& v : mono) v = std::max(v, 1.0);
  TableProvenance prov{source, beta, chi, a0, window, ly.size()};
  return ScalingFunctionTable::from_nodes(std::move(y), std::move(mono), std::move(counts), std::move(prov));
}

std::vector<CollapsePoint> collapse_points(const CorrelationMap& map, const ScalingWindow& window, double bin_width) {
  std::vector<CollapsePoint> out;
  for (std::size_t ir = 0; ir < map.dr_axis.size(); ++ir)
    for (std::size_t it = 0; it < map.dt_axis.size(); ++it) {
      const double dr = map.dr_axis[ir], dt = map.dt_axis[it];
      if (!(dr > 0.0) || !(dt > 0.0) || !window.contains(dr, dt)) continue;
      const auto& cell = map.cell(ir, it);
      if (!cell.usable || !(cell.value.real() > 0.0)) continue;
      out.push_back({dr, dt, cell.value.real(), cell.stderr_, bin_width / std::sqrt(12.0)});
    }
  return out;
}

std::string to_string(FitMode mode) {
  switch (mode) {
    case FitMode::amplitudes_only: return "amplitudes_only";
    case FitMode::free_exponents: return "free_exponents";
    case FitMode::galilean_constrained: return "galilean_constrained";
  }
  return "unknown";
}

FitMode fit_mode_from_string(const std::string& s) {
  if (s == "amplitudes_only") return FitMode::amplitudes_only;
  if (s == "free_exponents") return FitMode::free_exponents;
  if (s == "galilean_constrained") return FitMode::galilean_constrained;
  throw_error(ErrorKind::config, "unknown fit mode '" + s + "'");
}

double ScalingFit::stderr_of(std::size_t i) const {
  const double v = covariance[i][i];
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

std::vector<double> collapse_start_grid() {
  std::vector<double> g;
  for (int i = -4; i <= 4; ++i) g.push_back(0.5 * i);
  return g;
}

namespace {

/// Full parameter vector (log A, log B, beta, chi) as a function of the free
/// parameters of each mode, with its Jacobian.
struct Parametrization {
  FitMode mode;
  double beta_fixed, chi_fixed;

  std::size_t size() const { return mode == FitMode::amplitudes_only ? 2 : mode == FitMode::free_exponents ? 4 : 3; }

  Eigen::Vector4d full(const Eigen::VectorXd& q) const {
    switch (mode) {
      case FitMode::amplitudes_only: return {q[0], q[1], beta_fixed, chi_fixed};
      case FitMode::free_exponents: return {q[0], q[1], q[2], q[3]};
      case FitMode::galilean_constrained: return {q[0], q[1], q[2] / (2.0 - q[2]), q[2]};
    }
    return {};
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& q) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, static_cast<long>(size()));
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    if (mode == FitMode::free_exponents) {
      m(2, 2) = 1.0;
      m(3, 3) = 1.0;
    } else if (mode == FitMode::galilean_constrained) {
      m(2, 2) = 2.0 / ((2.0 - q[2]) * (2.0 - q[2]));
      m(3, 2) = 1.0;
    }
    return m;
  }
  bool admissible(const Eigen::VectorXd& q) const {
    const auto p = full(q);
    return p.allFinite() && p[2] > 1e-3 && p[3] > 1e-3 && p[3] < 2.0 - 1e-3;
  }
};

struct PreparedPoint {
  double log_dt, log_dr, log_value, sy, sx;
};

std::vector<PreparedPoint> prepare(std::span<const CollapsePoint> data, double min_rel) {
  std::vector<PreparedPoint> out;
  out.reserve(data.size());
  for (const auto& p : data) {
    if (!(p.dr > 0.0) || !(p.dt > 0.0) || !(p.value > 0.0))
      throw_error(ErrorKind::domain, "collapse points need dr, dt, value > 0");
    out.push_back({std::log(p.dt), std::log(p.dr), std::log(p.value), std::max(p.value_err / p.value, min_rel),
                   std::max(p.dr_err / p.dr, min_rel)});
  }
  return out;
}

struct PointTerms {
  double r1, r2, dF;
};

inline PointTerms point_terms(const PreparedPoint& p, const Eigen::Vector4d& full, double delta,
                              const ScalingFunctionTable& table) {
  const double beta = full[2], chi = full[3];
  const double x = p.log_dr - beta / chi * p.log_dt;
  const double y = p.log_value - 2.0 * beta * p.log_dt;
  const double u = x + delta + full[1];
  return {(y - full[0] - table.log_value(u)) / p.sy, delta / p.sx, table.log_derivative(u)};
}

/// Minimizes r1^2 + r2^2 over delta for one point with parameters held.
double optimal_delta(const PreparedPoint& p, const Eigen::Vector4d& full, const ScalingFunctionTable& table) {
  double delta = 0.0;
  auto cost = [&](double d) {
    const auto t = point_terms(p, full, d, table);
    return t.r1 * t.r1 + t.r2 * t.r2;
  };
  double c = cost(delta);
  for (int it = 0; it < 50; ++it) {
    const auto t = point_terms(p, full, delta, table);
    const double b = -t.dF / p.sy, cc = 1.0 / p.sx;
    const double step = -(b * t.r1 + cc * t.r2) / (b * b + cc * cc);
    double s = 1.0;
    bool moved = false;
    for (int h = 0; h < 30; ++h, s *= 0.5) {
      const double cn = cost(delta + s * step);
      if (cn < c) {
        delta += s * step;
        moved = c - cn > 1e-15 * c;
        c = cn;
        break;
      }
    }
    if (!moved) break;
  }
  return delta;
}

struct LmState {
  Eigen::VectorXd q;
  std::vector<double> delta;
  double cost = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

double total_cost(const std::vector<PreparedPoint>& pts, const std::vector<std::size_t>& active,
                  const Parametrization& par, const Eigen::VectorXd& q, const std::vector<double>& delta,
                  const ScalingFunctionTable& table) {
  const auto full = par.full(q);
  double c = 0.0;
  for (std::size_t k = 0; k < active.size(); ++k) {
    const auto t = point_terms(pts[active[k]], full, delta[k], table);
    c += t.r1 * t.r1 + t.r2 * t.r2;
  }
  return c;
}

/// Builds the reduced (Schur complement) normal equations. Returns S, the
/// reduced gradient and, per point, the quantities needed to back-substitute.
struct Reduced {
  Eigen::MatrixXd s;
  Eigen::VectorXd rhs;
  std::vector<Eigen::VectorXd> ab;  // a_i * b_i
  std::vector<double> d, g_delta;
};

Reduced reduce(const std::vector<PreparedPoint>& pts, const std::vector<std::size_t>& active,
               const Parametrization& par, const Eigen::VectorXd& q, const std::vector<double>& delta,
               const ScalingFunctionTable& table, double lambda) {
  const long k = static_cast<long>(par.size());
  const auto full = par.full(q);
  const Eigen::MatrixXd m = par.jacobian(q);
  Eigen::MatrixXd hqq = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd gq = Eigen::VectorXd::Zero(k);
  Reduced red;
  red.ab.resize(active.size());
  red.d.resize(active.size());
  red.g_delta.resize(active.size());
  std::vector<Eigen::VectorXd> avec(active.size());
  std::vector<double> bvec(active.size());
  const double beta = full[2], chi = full[3];
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& p = pts[active[i]];
    const auto t = point_terms(p, full, delta[i], table);
    Eigen::Vector4d dfull(-1.0 / p.sy, -t.dF / p.sy, (-2.0 * p.log_dt + t.dF * p.log_dt / chi) / p.sy,
                          (-t.dF * beta * p.log_dt / (chi * chi)) / p.sy);
    Eigen::VectorXd a = m.transpose() * dfull;
    const double b = -t.dF / p.sy, c = 1.0 / p.sx;
    hqq.noalias() += a * a.transpose();
    gq += a * t.r1;
    avec[i] = a;
    bvec[i] = b;
    red.d[i] = (b * b + c * c) * (1.0 + lambda);
    red.g_delta[i] = b * t.r1 + c * t.r2;
  }
  for (long j = 0; j < k; ++j) hqq(j, j) += lambda * hqq(j, j);
  red.s = hqq;
  red.rhs = -gq;
  for (std::size_t i = 0; i < active.size(); ++i) {
    red.ab[i] = avec[i] * bvec[i];
    red.s.noalias() -= red.ab[i] * red.ab[i].transpose() / red.d[i];
    red.rhs += red.ab[i] * red.g_delta[i] / red.d[i];
  }
  return red;
}

LmState levenberg_marquardt(const std::vector<PreparedPoint>& pts, const std::vector<std::size_t>& active,
                            const Parametrization& par, Eigen::VectorXd q0, const ScalingFunctionTable& table,
                            std::size_t max_iterations) {
  LmState st{std::move(q0), std::vector<double>(active.size(), 0.0), 0.0, 0, false};
  st.cost = total_cost(pts, active, par, st.q, st.delta, table);
  double lambda = 1e-3;
  while (st.iterations < max_iterations) {
    ++st.iterations;
    if (st.cost < 1e-28) {
      st.converged = true;
      break;
    }
    const Reduced red = reduce(pts, active, par, st.q, st.delta, table, lambda);
    const Eigen::VectorXd dq = red.s.ldlt().solve(red.rhs);
    Eigen::VectorXd q_new = st.q + dq;
    std::vector<double> d_new(st.delta.size());
    for (std::size_t i = 0; i < d_new.size(); ++i)
      d_new[i] = st.delta[i] + (-red.g_delta[i] - red.ab[i].dot(dq)) / red.d[i];
    const bool ok = dq.allFinite() && par.admissible(q_new);
    const double c_new = ok ? total_cost(pts, active, par, q_new, d_new, table) : kNaN;
    if (ok && c_new < st.cost) {
      const double decrease = st.cost - c_new;
      st.q = std::move(q_new);
      st.delta = std::move(d_new);
      st.cost = c_new;
      lambda = std::max(lambda / 10.0, 1e-12);
      if (decrease <= 1e-13 * c_new) {
        st.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e14) {
        // No descent direction left at this resolution: a stationary point.
        st.converged = true;
        break;
      }
    }
  }
  return st;
}

}  // namespace

ScalingFit odr_collapse_fit(std::span<const CollapsePoint> data, const ScalingFunctionTable& table,
                            const FitOptions& options, const std::vector<bool>& mask) {
  if (!mask.empty() && mask.size() != data.size()) throw_error(ErrorKind::parameter, "mask length differs from data");
  const auto pts = prepare(data, options.min_relative_error);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (mask.empty() || !mask[i]) active.push_back(i);

  const double beta0 = options.beta.value_or(table.provenance().beta);
  const double chi0 = options.chi.value_or(table.provenance().chi);
  if (!(beta0 > 0.0) || !(chi0 > 0.0) || !(chi0 < 2.0))
    throw_error(ErrorKind::domain, "collapse fit needs starting exponents 0 < beta, 0 < chi < 2");
  const Parametrization par{options.mode, beta0, chi0};
  const std::size_t k = par.size();
  if (active.size() <= k)
    throw_error(ErrorKind::insufficient_data, "collapse fit needs more points than free parameters");

  Eigen::VectorXd base(static_cast<long>(k));
  base.setZero();
  if (options.mode == FitMode::free_exponents) {
    base[2] = beta0;
    base[3] = chi0;
  } else if (options.mode == FitMode::galilean_constrained) {
    base[2] = chi0;
  }

  // Coarse grid over log B with log A in closed form, best two refined.
  struct Start {
    double cost;
    Eigen::VectorXd q;
  };
  std::vector<Start> starts;
  const std::vector<double> zero_delta(active.size(), 0.0);
  for (double log10_b : collapse_start_grid()) {
    Eigen::VectorXd q = base;
    q[1] = log10_b * std::log(10.0);
    q[0] = 0.0;
    const auto full = par.full(q);
    double sw = 0.0, swr = 0.0;
    for (std::size_t idx : active) {
      const auto t = point_terms(pts[idx], full, 0.0, table);
      const double w = 1.0 / (pts[idx].sy * pts[idx].sy);
      sw += w;
      swr += w * t.r1 * pts[idx].sy;
    }
    q[0] = swr / sw;
    starts.push_back({total_cost(pts, active, par, q, zero_delta, table), q});
  }
  std::stable_sort(starts.begin(), starts.end(), [](const Start& a, const Start& b) { return a.cost < b.cost; });

  LmState best;
  bool have = false;
  for (std::size_t s = 0; s < std::min<std::size_t>(2, starts.size()); ++s) {
    auto st = levenberg_marquardt(pts, active, par, starts[s].q, table, options.max_iterations);
    if (!have || (st.converged && !best.converged) || (st.converged == best.converged && st.cost < best.cost)) {
      best = std::move(st);
      have = true;
    }
  }

  ScalingFit fit;
  fit.mode = options.mode;
  const auto full = par.full(best.q);
  fit.amplitude_a = std::exp(full[0]);
  fit.amplitude_b = std::exp(full[1]);
  fit.beta = full[2];
  fit.chi = full[3];
  fit.excluded_mask.assign(data.size(), false);
  for (std::size_t i = 0; i < mask.size(); ++i) fit.excluded_mask[i] = mask[i];
  fit.n_iterations = best.iterations;
  fit.cost = best.cost;
  fit.residual_rms = std::sqrt(best.cost / static_cast<double>(active.size()));
  fit.converged = best.converged;

  const Reduced red = reduce(pts, active, par, best.q, best.delta, table, 0.0);
  const double dof = static_cast<double>(active.size() - k);
  const double s2 = best.cost / dof;
  Eigen::MatrixXd cov_q = red.s.completeOrthogonalDecomposition().pseudoInverse() * s2;
  Eigen::MatrixXd t = par.jacobian(best.q);
  t.row(0) *= fit.amplitude_a;
  t.row(1) *= fit.amplitude_b;
  const Eigen::MatrixXd cov = t * cov_q * t.transpose();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) fit.covariance[i][j] = cov(i, j);

  if (!best.converged)
    throw FitFailure("collapse fit did not converge within " + std::to_string(options.max_iterations) +
                         " iterations (cost " + std::to_string(best.cost) + ")",
                     fit);
  return fit;
}

std::vector<double> orthogonal_residuals(std::span<const CollapsePoint> data, const ScalingFunctionTable& table,
                                         const ScalingFit& fit, double min_relative_error) {
  const auto pts = prepare(data, min_relative_error);
  const Eigen::Vector4d full(std::log(fit.amplitude_a), std::log(fit.amplitude_b), fit.beta, fit.chi);
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = optimal_delta(pts[i], full, table);
    const auto t = point_terms(pts[i], full, d, table);
    out[i] = std::copysign(std::sqrt(t.r1 * t.r1 + t.r2 * t.r2), t.r1);
  }
  return out;
}

ExclusionResult sigma_exclusion(std::span<const CollapsePoint> data, const ScalingFunctionTable& table,
                                const ScalingFit& fit, const FitOptions& options, double threshold) {
  if (!(threshold > 0.0)) throw_error(ErrorKind::parameter, "exclusion threshold must be > 0");
  ExclusionResult res;
  res.fit = fit;
  res.mask = fit.excluded_mask;
  res.mask.resize(data.size(), false);
  FitOptions opts = options;
  opts.mode = fit.mode;
  for (std::size_t iter = 1; iter <= 10; ++iter) {
    res.n_iterations = iter;
    const auto r = orthogonal_residuals(data, table, res.fit, options.min_relative_error);
    std::vector<double> abs_dev(r.size());
    const double med = median(r);
    for (std::size_t i = 0; i < r.size(); ++i) abs_dev[i] = std::abs(r[i] - med);
    const double sigma = std::max(1.4826 * median(abs_dev), 1e-6);
    std::vector<bool> next(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) next[i] = std::abs(r[i]) > threshold * sigma;
    if (std::all_of(next.begin(), next.end(), [](bool b) { return b; }))
      throw_error(ErrorKind::insufficient_data, "sigma exclusion removed every point");
    if (next == res.mask) break;
    res.mask = next;
    opts.beta = res.fit.beta;
    opts.chi = res.fit.chi;
    res.fit = odr_collapse_fit(data, table, opts, res.mask);
  }
  res.fit.excluded_mask = res.mask;
  return res;
}

FiniteSizeResult finite_size_chi(std::span<const SaturationPoint> points) {
  std::vector<double> sides;
  for (const auto& p : points) {
    if (!(p.side > 0.0) || !(p.w_sat > 0.0)) throw_error(ErrorKind::domain, "finite-size scaling needs L, W_sat > 0");
    sides.push_back(p.side);
  }
  std::sort(sides.begin(), sides.end());
  if (std::unique(sides.begin(), sides.end()) - sides.begin() < 3)
    throw_error(ErrorKind::insufficient_data, "finite-size scaling needs at least 3 distinct L");
  const bool weighted = std::all_of(points.begin(), points.end(), [](const auto& p) { return p.err > 0.0; });
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double rel = p.err / p.w_sat;
    const double w = weighted ? 1.0 / (rel * rel) : 1.0;
    const double x = std::log(p.side), y = std::log(p.w_sat);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double det = sw * sxx - sx * sx;
  FiniteSizeResult r;
  r.two_chi = (sw * sxy - sx * sy) / det;
  r.log_prefactor = (sy - r.two_chi * sx) / sw;
  double var = sw / det;
  if (!weighted) {
    double ss = 0.0;
    for (const auto& p : points) {
      const double e = std::log(p.w_sat) - r.log_prefactor - r.two_chi * std::log(p.side);
      ss += e * e;
    }
    var *= points.size() > 2 ? ss / static_cast<double>(points.size() - 2) : 0.0;
  }
  r.stderr_ = std::sqrt(var);
  return r;
}

double galilean_beta(double chi) {
  if (!(chi > 0.0) || !(chi < 2.0)) throw_error(ErrorKind::domain, "galilean_beta needs 0 < chi < 2");
  return chi / (2.0 - chi);
}

double kpz_coupling(double nu, double lambda, double noise_strength) {
  if (!(nu > 0.0)) throw_error(ErrorKind::domain, "kpz_coupling needs nu > 0");
  return lambda * lambda * noise_strength / (nu * nu * nu);
}

}  // namespace kpz2d
