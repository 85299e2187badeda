#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kpz2d/noise.hpp"
#include "kpz2d/scaling.hpp"

using namespace kpz2d;

namespace {

constexpr double kBeta = 0.24;
constexpr double kChi = 0.39;

// Smooth universal-function stand-in: 1 at y = 0, y^(2 chi) for large y.
double shape(double y) { return std::pow(1.0 + y * y, kChi); }

ScalingFunctionTable exact_table(std::size_t n = 160) {
  std::vector<double> y, v;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    y.push_back(std::pow(10.0, -3.0 + 6.0 * double(i) / double(n - 1)));
    v.push_back(shape(y.back()));
    counts.push_back(10);
  }
  TableProvenance prov;
  prov.source = "analytic";
  prov.beta = kBeta;
  prov.chi = kChi;
  return ScalingFunctionTable::from_nodes(y, v, counts, prov);
}

double model(double a, double b, double dr, double dt, double beta = kBeta, double chi = kChi) {
  return a * std::pow(dt, 2.0 * beta) * shape(b * dr * std::pow(dt, -beta / chi));
}

std::vector<CollapsePoint> synthetic_points(double a, double b, double rel_noise = 0.0, std::uint64_t seed = 1) {
  NoiseStream s(seed, 0);
  std::vector<CollapsePoint> pts;
  for (double dr = 1.0; dr <= 12.0; dr += 1.0)
    for (double dt = 1.0; dt <= 512.0; dt *= 2.0) {
      double v = model(a, b, dr, dt);
      if (rel_noise > 0.0) v *= std::exp(rel_noise * s.standard_normal());
      pts.push_back({dr, dt, v, 0.01 * v, 0.0});
    }
  return pts;
}

CorrelationMap synthetic_map(double a, double b) {
  std::vector<double> dr, dt;
  for (double r = 0.0; r <= 12.0; r += 1.0) dr.push_back(r);
  dt.push_back(0.0);
  for (double t = 1.0; t <= 512.0; t *= 2.0) dt.push_back(t);
  CorrelationMap m(CorrelationKind::connected, dr, dt);
  for (std::size_t ir = 0; ir < dr.size(); ++ir)
    for (std::size_t it = 0; it < dt.size(); ++it) {
      auto& c = m.cell(ir, it);
      c.n_samples = 8;
      c.usable = true;
      if (dt[it] == 0.0)
        c.value = a * std::pow(b * dr[ir], 2.0 * kChi);
      else
        c.value = model(a, b, dr[ir], dt[it]);
      c.stderr_ = 0.01 * c.value.real();
    }
  return m;
}

}  // namespace

TEST_CASE("scaling function table") {
  SUBCASE("construction checks") {
    TableProvenance prov;
    CHECK_THROWS_AS(ScalingFunctionTable::from_nodes({1, 2, 3}, {1, 2, 3}, {1, 1, 1}, prov), Error);
    CHECK_THROWS_AS(ScalingFunctionTable::from_nodes({1, 2, 3, 4}, {1, 3, 2, 4}, {1, 1, 1, 1}, prov), Error);
    CHECK_THROWS_AS(ScalingFunctionTable::from_nodes({1, 2, 3, 4}, {0.5, 2, 3, 4}, {1, 1, 1, 1}, prov), Error);
    CHECK_THROWS_AS(ScalingFunctionTable::from_nodes({1, 3, 2, 4}, {1, 2, 3, 4}, {1, 1, 1, 1}, prov), Error);
    CHECK_THROWS_AS(ScalingFunctionTable::from_nodes({1, 2, 3, 4}, {1, 2, 3, 4}, {1, 1, 1}, prov), Error);
  }
  const auto t = exact_table();
  CHECK(t(0.0) == 1.0);
  CHECK(t.y_grid().front() == 0.0);
  CHECK(t.value_grid().front() == 1.0);
  CHECK(t.tail_slope() == doctest::Approx(2.0 * kChi).epsilon(1e-3));
  double prev = t(0.0);
  for (double u = -8.0; u <= 8.0; u += 0.01) {
    const double v = t(std::exp(u));
    CHECK(v >= prev);
    CHECK(v >= 1.0);
    prev = v;
  }
  for (double y : {0.01, 0.3, 1.0, 7.0, 300.0}) CHECK(t(y) == doctest::Approx(shape(y)).epsilon(1e-4));
  // Beyond the last node the tail power law continues.
  CHECK(t(1e5) == doctest::Approx(shape(1e5)).epsilon(1e-2));
  const double u = std::log(2.0), h = 1e-5;
  CHECK(t.log_derivative(u) == doctest::Approx((t.log_value(u + h) - t.log_value(u - h)) / (2 * h)).epsilon(1e-5));
}

TEST_CASE("tabulation from a correlation map") {
  const double a = 2.0, b = 0.5;
  const auto m = synthetic_map(a, b);
  CHECK(scaling_anchor_amplitude(m, kBeta, ScalingWindow{}) == doctest::Approx(a).epsilon(1e-12));
  ScalingWindow w;
  w.dt_min = 4.0;
  CHECK(scaling_anchor_amplitude(m, kBeta, w) == doctest::Approx(a).epsilon(1e-12));

  const auto t = tabulate_scaling_function(m, kBeta, kChi, ScalingWindow{}, 24, "synthetic");
  CHECK(t.provenance().source == "synthetic");
  CHECK(t.provenance().amplitude == doctest::Approx(a));
  CHECK(t.node_y().size() >= 5);
  std::size_t total = 0;
  for (auto c : t.node_counts()) total += c;
  CHECK(total == 12 * 10);
  for (std::size_t i = 0; i < t.node_y().size(); ++i) {
    CAPTURE(t.node_y()[i]);
    CHECK(t.node_values()[i] == doctest::Approx(shape(b * t.node_y()[i])).epsilon(0.02));
    if (i > 0) CHECK(t.node_values()[i] >= t.node_values()[i - 1]);
  }
  CHECK_THROWS_AS(tabulate_scaling_function(m, kBeta, kChi, ScalingWindow{0, 1, 0, 2}, 24), Error);

  const auto pts = collapse_points(m, ScalingWindow{}, 0.5);
  CHECK(pts.size() == 12 * 10);
  CHECK(pts.front().dr_err == doctest::Approx(0.5 / std::sqrt(12.0)));
}

TEST_CASE("collapse fit recovers planted parameters") {
  const auto table = exact_table();
  const auto pts = synthetic_points(2.0, 0.5);

  SUBCASE("amplitudes only") {
    FitOptions o;
    o.mode = FitMode::amplitudes_only;
    const auto f = odr_collapse_fit(pts, table, o);
    CHECK(f.converged);
    CHECK(f.amplitude_a == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(f.amplitude_b == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(f.beta == kBeta);
    CHECK(f.chi == kChi);
    CHECK(f.covariance[2][2] == 0.0);
    CHECK(f.stderr_of(0) > 0.0);
  }
  SUBCASE("free exponents from an offset start") {
    FitOptions o;
    o.beta = 0.21;
    o.chi = 0.45;
    const auto f = odr_collapse_fit(pts, table, o);
    CHECK(f.converged);
    CHECK(f.beta == doctest::Approx(kBeta).epsilon(0.01 / kBeta));
    CHECK(f.chi == doctest::Approx(kChi).epsilon(0.01 / kChi));
    CHECK(f.z() == doctest::Approx(kChi / kBeta).epsilon(0.05));
  }
  SUBCASE("Galilean constraint ties beta to chi") {
    FitOptions o;
    o.mode = FitMode::galilean_constrained;
    o.chi = 0.42;
    const auto f = odr_collapse_fit(pts, table, o);
    CHECK(f.beta == doctest::Approx(galilean_beta(f.chi)).epsilon(1e-12));
  }
  SUBCASE("rescaling values and separations moves only the amplitudes") {
    FitOptions o;
    o.mode = FitMode::amplitudes_only;
    const double c = 3.0;
    auto scaled_v = pts;
    for (auto& p : scaled_v) {
      p.value *= c;
      p.value_err *= c;
    }
    auto scaled_r = pts;
    for (auto& p : scaled_r) p.dr *= c;
    const auto f0 = odr_collapse_fit(pts, table, o);
    const auto fv = odr_collapse_fit(scaled_v, table, o);
    const auto fr = odr_collapse_fit(scaled_r, table, o);
    CHECK(fv.amplitude_a == doctest::Approx(c * f0.amplitude_a).epsilon(1e-6));
    CHECK(fv.amplitude_b == doctest::Approx(f0.amplitude_b).epsilon(1e-6));
    CHECK(fr.amplitude_b == doctest::Approx(f0.amplitude_b / c).epsilon(1e-6));
    CHECK(fr.amplitude_a == doctest::Approx(f0.amplitude_a).epsilon(1e-6));
  }
  SUBCASE("masked points are ignored") {
    auto bad = pts;
    std::vector<bool> mask(bad.size(), false);
    for (std::size_t i = 0; i < bad.size(); i += 9) {
      bad[i].value *= 50.0;
      mask[i] = true;
    }
    FitOptions o;
    o.mode = FitMode::amplitudes_only;
    const auto f = odr_collapse_fit(bad, table, o, mask);
    CHECK(f.amplitude_a == doctest::Approx(2.0).epsilon(1e-4));
  }
  SUBCASE("degenerate input fails") {
    std::vector<CollapsePoint> two(pts.begin(), pts.begin() + 2);
    CHECK_THROWS_AS(odr_collapse_fit(two, table), Error);
  }
  CHECK(fit_mode_from_string(to_string(FitMode::galilean_constrained)) == FitMode::galilean_constrained);
  CHECK_THROWS_AS(fit_mode_from_string("bogus"), Error);
  CHECK(collapse_start_grid().size() == 9);
}

TEST_CASE("sigma exclusion") {
  const auto table = exact_table();
  FitOptions o;
  o.mode = FitMode::amplitudes_only;
  auto pts = synthetic_points(2.0, 0.5, 0.01, 17);
  std::vector<std::size_t> planted;
  for (std::size_t i = 3; i < pts.size(); i += 20) {
    // Ten standard errors above the curve.
    pts[i].value *= std::exp(0.1);
    planted.push_back(i);
  }
  const auto f = odr_collapse_fit(pts, table, o);
  const auto ex = sigma_exclusion(pts, table, f, o, 3.0);
  for (std::size_t i : planted) CHECK(ex.mask[i]);
  std::size_t extra = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (ex.mask[i] && std::find(planted.begin(), planted.end(), i) == planted.end()) ++extra;
  CHECK(extra <= 2);
  CHECK(ex.fit.amplitude_a == doctest::Approx(2.0).epsilon(5e-3));

  SUBCASE("an infinite threshold keeps every point") {
    const auto none = sigma_exclusion(pts, table, f, o, std::numeric_limits<double>::infinity());
    for (bool b : none.mask) CHECK_FALSE(b);
    CHECK(none.n_iterations == 1);
  }
  SUBCASE("repeating from the converged fit reproduces the mask") {
    const auto again = sigma_exclusion(pts, table, ex.fit, o, 3.0);
    CHECK(again.mask == ex.mask);
  }
  SUBCASE("residuals vanish on exact data") {
    const auto clean = synthetic_points(2.0, 0.5);
    ScalingFit truth;
    truth.mode = FitMode::amplitudes_only;
    truth.beta = kBeta;
    truth.chi = kChi;
    truth.amplitude_a = 2.0;
    truth.amplitude_b = 0.5;
    for (double r : orthogonal_residuals(clean, table, truth)) CHECK(std::abs(r) < 0.05);
  }
}

TEST_CASE("finite-size roughness exponent") {
  std::vector<SaturationPoint> pts;
  for (double L : {16.0, 32.0, 64.0, 128.0}) pts.push_back({L, 3.0 * std::pow(L, 0.775), 0.01 * 3.0 * std::pow(L, 0.775)});
  const auto r = finite_size_chi(pts);
  CHECK(r.two_chi == doctest::Approx(0.775).epsilon(1e-10));
  CHECK(r.log_prefactor == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(r.stderr_ >= 0.0);

  auto scaled = pts;
  for (auto& p : scaled) {
    p.w_sat *= 5.0;
    p.err *= 5.0;
  }
  const auto s = finite_size_chi(scaled);
  CHECK(s.two_chi == doctest::Approx(r.two_chi).epsilon(1e-10));
  CHECK(s.log_prefactor == doctest::Approx(r.log_prefactor + std::log(5.0)).epsilon(1e-10));

  auto flat = pts;
  for (auto& p : flat) p = {p.side, 2.0, 0.0};
  CHECK(finite_size_chi(flat).two_chi == doctest::Approx(0.0).scale(1.0));

  std::vector<SaturationPoint> two(pts.begin(), pts.begin() + 2);
  CHECK_THROWS_AS(finite_size_chi(two), Error);
}

TEST_CASE("Galilean relation and coupling") {
  CHECK(galilean_beta(0.39) == doctest::Approx(0.2422).epsilon(1e-3));
  CHECK(galilean_beta(1.0) == 1.0);
  CHECK(galilean_beta(0.5) == doctest::Approx(1.0 / 3.0));
  CHECK(galilean_beta(0.365) == doctest::Approx(0.2232).epsilon(1e-3));
  CHECK_THROWS_AS(galilean_beta(2.0), Error);
  CHECK_THROWS_AS(galilean_beta(0.0), Error);
  CHECK(kpz_coupling(1.0, 3.0, 1.0) == 9.0);
  CHECK(kpz_coupling(1.0, 0.0, 1.0) == 0.0);
  CHECK(kpz_coupling(2.0, 3.0, 1.0) == doctest::Approx(9.0 / 8.0));
  CHECK_THROWS_AS(kpz_coupling(0.0, 3.0, 1.0), Error);
}
