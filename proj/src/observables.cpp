#include "kpz2d/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

namespace kpz2d {

double roughness(const PhaseField& field) {
  const double mean = spatial_mean(field);
  double ss = 0.0;
  for (double v : field.values()) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(field.size());
}

MeanWithError mean_with_error(std::span<const double> samples) {
  if (samples.empty()) throw_error(ErrorKind::insufficient_data, "no samples to average");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  if (samples.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

std::vector<MeanWithError> ensemble_mean(std::span<const std::vector<double>> series) {
  if (series.empty()) throw_error(ErrorKind::insufficient_data, "no series to average");
  const std::size_t len = series.front().size();
  for (const auto& s : series)
    if (s.size() != len) throw_error(ErrorKind::parameter, "series lengths differ");
  std::vector<MeanWithError> out(len);
  std::vector<double> column(series.size());
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t r = 0; r < series.size(); ++r) column[r] = series[r][i];
    out[i] = mean_with_error(column);
  }
  return out;
}

std::string to_string(ExponentQuality q) {
  switch (q) {
    case ExponentQuality::interior: return "interior";
    case ExponentQuality::endpoint: return "endpoint";
    case ExponentQuality::masked: return "masked";
  }
  return "unknown";
}

ExponentSeries log_slope(std::span<const double> x, std::span<const double> y, std::span<const double> y_err) {
  if (x.size() != y.size() || x.size() != y_err.size())
    throw_error(ErrorKind::parameter, "log_slope inputs differ in length");
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0)) throw_error(ErrorKind::domain, "log_slope needs x > 0");
    if (i > 0 && !(x[i] > x[i - 1])) throw_error(ErrorKind::parameter, "log_slope needs increasing x");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ExponentSeries out(n);
  auto ok = [&](std::size_t i) { return std::isfinite(y[i]) && y[i] > 0.0; };
  for (std::size_t i = 0; i < n; ++i) {
    out[i].axis_value = x[i];
    if (!ok(i)) {
      out[i] = {x[i], nan, nan, ExponentQuality::masked};
      continue;
    }
    const bool left = i > 0 && ok(i - 1);
    const bool right = i + 1 < n && ok(i + 1);
    const double u = std::log(x[i]);
    const double f = std::log(y[i]);
    const double sf = y_err[i] / y[i];
    if (left && right) {
      const double h1 = u - std::log(x[i - 1]);
      const double h2 = std::log(x[i + 1]) - u;
      const double wm = -h2 / (h1 * (h1 + h2));
      const double w0 = (h2 - h1) / (h1 * h2);
      const double wp = h1 / (h2 * (h1 + h2));
      const double sm = y_err[i - 1] / y[i - 1];
      const double sp = y_err[i + 1] / y[i + 1];
      out[i].exponent = wm * std::log(y[i - 1]) + w0 * f + wp * std::log(y[i + 1]);
      out[i].stderr_ = std::sqrt(wm * wm * sm * sm + w0 * w0 * sf * sf + wp * wp * sp * sp);
      out[i].quality = ExponentQuality::interior;
    } else if (left || right) {
      const std::size_t j = left ? i - 1 : i + 1;
      const double h = std::log(x[j]) - u;
      const double sj = y_err[j] / y[j];
      out[i].exponent = (std::log(y[j]) - f) / h;
      out[i].stderr_ = std::sqrt(sf * sf + sj * sj) / std::abs(h);
      out[i].quality = ExponentQuality::endpoint;
    } else {
      out[i] = {x[i], nan, nan, ExponentQuality::masked};
    }
  }
  return out;
}

namespace {

ExponentSeries half_slope_along(const CorrelationMap& map, bool along_dt) {
  std::vector<double> x, y, e;
  if (along_dt) {
    const long ir = map.dr_index(0.0);
    if (ir >= 0)
      for (std::size_t it = 0; it < map.dt_axis.size(); ++it) {
        if (!(map.dt_axis[it] > 0.0)) continue;
        const auto& c = map.cell(static_cast<std::size_t>(ir), it);
        x.push_back(map.dt_axis[it]);
        y.push_back(c.usable ? c.value.real() : std::numeric_limits<double>::quiet_NaN());
        e.push_back(c.stderr_);
      }
  } else {
    const long it = map.dt_index(0.0);
    if (it >= 0)
      for (std::size_t ir = 0; ir < map.dr_axis.size(); ++ir) {
        if (!(map.dr_axis[ir] > 0.0)) continue;
        const auto& c = map.cell(ir, static_cast<std::size_t>(it));
        x.push_back(map.dr_axis[ir]);
        y.push_back(c.usable ? c.value.real() : std::numeric_limits<double>::quiet_NaN());
        e.push_back(c.stderr_);
      }
  }
  if (x.size() < 3)
    throw_error(ErrorKind::insufficient_data,
                std::string("running exponent needs >= 3 points with ") + (along_dt ? "dt > 0 at dr = 0" : "dr > 0 at dt = 0"));
  auto series = log_slope(x, y, e);
  for (auto& p : series) {
    p.exponent *= 0.5;
    p.stderr_ *= 0.5;
  }
  return series;
}

}  // namespace

ExponentSeries growth_exponent_series(const CorrelationMap& map) { return half_slope_along(map, true); }
ExponentSeries roughness_exponent_series(const CorrelationMap& map) { return half_slope_along(map, false); }

RunningExponents running_exponents(const CorrelationMap& map) {
  RunningExponents out;
  bool any = false;
  try {
    out.beta = growth_exponent_series(map);
    any = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::insufficient_data) throw;
  }
  try {
    out.chi = roughness_exponent_series(map);
    any = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::insufficient_data) throw;
  }
  if (!any) throw_error(ErrorKind::insufficient_data, "map has fewer than 3 points along both axes");
  return out;
}

Plateau find_plateau(const ExponentSeries& series, double min_decades) {
  bool found = false;
  Plateau best;
  double best_span = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].quality == ExponentQuality::masked) continue;
    double sw = 0.0, swx = 0.0, swxx = 0.0, lo = series[i].exponent, hi = lo;
    bool exact = false;
    for (std::size_t j = i; j < series.size(); ++j) {
      const auto& pt = series[j];
      if (pt.quality == ExponentQuality::masked) break;
      exact = exact || !(pt.stderr_ > 0.0);
      const double w = pt.stderr_ > 0.0 ? 1.0 / (pt.stderr_ * pt.stderr_) : 1.0;
      sw += w;
      swx += w * pt.exponent;
      swxx += w * pt.exponent * pt.exponent;
      lo = std::min(lo, pt.exponent);
      hi = std::max(hi, pt.exponent);
      const double span = std::log10(pt.axis_value / series[i].axis_value);
      if (j == i || span < min_decades - 1e-12) continue;
      const double mean = swx / sw;
      const double dof = static_cast<double>(j - i);
      const double chi2 = std::max(0.0, swxx - swx * swx / sw);
      // Constant within errors at the 5% level; error-free points must agree exactly.
      const bool consistent = exact ? hi - lo <= 1e-9 * (1.0 + std::abs(mean))
                                    : chi2 <= boost::math::quantile(boost::math::chi_squared(dof), 0.95);
      if (!consistent) continue;
      if (found && (span < best_span - 1e-12 || (span <= best_span + 1e-12 && pt.axis_value <= best.axis_max))) continue;
      found = true;
      best_span = span;
      best.value = mean;
      best.spread = hi - lo;
      best.stderr_ = exact ? 0.0 : std::sqrt(1.0 / sw) * std::max(1.0, std::sqrt(chi2 / dof));
      best.axis_min = series[i].axis_value;
      best.axis_max = pt.axis_value;
      best.n_points = j - i + 1;
    }
  }
  if (!found) throw_error(ErrorKind::insufficient_data, "no unmasked window spans the requested decades with a constant exponent");
  return best;
}

CorrelationMap minus_log_g1(const CorrelationMap& coherence) {
  if (coherence.kind != CorrelationKind::coherence)
    throw_error(ErrorKind::parameter, "minus_log_g1 needs a coherence map");
  CorrelationMap out(CorrelationKind::minus_log_coherence, coherence.dr_axis, coherence.dt_axis);
  for (std::size_t i = 0; i < coherence.cells.size(); ++i) {
    const auto& c = coherence.cells[i];
    auto& o = out.cells[i];
    o.n_samples = c.n_samples;
    const double mag = std::abs(c.value);
    if (!c.usable || !(mag > 0.0)) {
      o.value = {std::numeric_limits<double>::quiet_NaN(), 0.0};
      o.usable = false;
      continue;
    }
    o.value = {-std::log(mag), 0.0};
    o.stderr_ = c.stderr_ / mag;
    o.usable = mag > c.stderr_;
  }
  return out;
}

}  // namespace kpz2d
