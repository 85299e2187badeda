#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kpz2d/correlation.hpp"
#include "kpz2d/kpz.hpp"
#include "kpz2d/noise.hpp"
#include "kpz2d/observables.hpp"
#include "kpz2d/spectrum.hpp"

using namespace kpz2d;

namespace {

std::vector<std::vector<PhaseField>> random_ensemble(std::size_t n_real, std::size_t L, const std::vector<double>& times,
                                                     std::uint64_t seed) {
  std::vector<std::vector<PhaseField>> out;
  for (std::size_t r = 0; r < n_real; ++r) {
    NoiseStream s(seed, r);
    std::vector<PhaseField> snaps;
    for (double t : times) {
      auto f = sample_noise_field(s, L, 1.0);
      f.set_time(t);
      snaps.push_back(std::move(f));
    }
    out.push_back(std::move(snaps));
  }
  return out;
}

/// Edwards-Wilkinson trajectories feeding a real accumulator on theta and a
/// complex one on exp(i theta).
struct EwPairs {
  RealPairAccumulator real;
  ComplexPairAccumulator phase;
  void on_snapshot(std::size_t, const PhaseField& f) {
    real.add(f);
    ComplexField z(f.side(), f.spacing(), f.time());
    for (std::size_t i = 0; i < f.size(); ++i) z[i] = std::polar(1.0, f[i]);
    phase.add(z);
  }
};

struct EwRun {
  CorrelationGrid grid;
  KpzParams params;
  CorrelationMap c;
  CorrelationMap g1;
};

EwRun ew_run(std::size_t L, std::size_t n_real, std::vector<double> lags, double dr_max) {
  EwRun run;
  run.params.side = L;
  run.params.lambda = 0.0;
  run.params.dt = 0.05;
  run.params.n_realizations = n_real;
  run.params.master_seed = 2024;
  run.grid.dr_centers = populated_dr_centers(L, 1.0, dr_max, 0.5);
  run.grid.lags = std::move(lags);
  for (double t = 60.0; t <= 400.0; t += 4.0) run.grid.reference_times.push_back(t);
  run.params.t_max = run.grid.reference_times.back() + run.grid.lags.back();
  run.params.snapshot_times = correlation_snapshot_times(run.grid, run.params.dt);
  auto ens = run_ensemble(run.params, [&](std::uint64_t) {
    return EwPairs{RealPairAccumulator(run.grid, L, 1.0, run.params.dt),
                   ComplexPairAccumulator(run.grid, L, 1.0, run.params.dt)};
  });
  std::vector<RealPairAccumulator> re;
  std::vector<ComplexPairAccumulator> ph;
  for (auto& e : ens) {
    re.push_back(std::move(e.real));
    ph.push_back(std::move(e.phase));
  }
  run.c = combine_connected(re, run.grid);
  run.g1 = combine_coherence(ph, run.grid);
  return run;
}

}  // namespace

TEST_CASE("separation bins and snapshot schedule") {
  const auto c = populated_dr_centers(16, 1.0, 2.0, 0.5);
  CHECK(c == std::vector<double>{0.0, 1.0, 1.5, 2.0});
  const auto c2 = populated_dr_centers(16, 2.0, 4.0, 1.0);
  CHECK(c2 == std::vector<double>{0.0, 2.0, 3.0, 4.0});

  CorrelationGrid g{{0.0}, 0.5, {0.0, 1.0, 2.5}, {0.0, 10.0}};
  const auto t = correlation_snapshot_times(g, 0.5);
  CHECK(t == std::vector<double>{0.0, 1.0, 2.5, 10.0, 11.0, 12.5});
}

TEST_CASE("connected correlator basics") {
  const std::size_t L = 12;
  CorrelationGrid grid{populated_dr_centers(L, 1.0, 4.0, 0.5), 0.5, {0.0, 1.0}, {0.0, 1.0}};
  const auto ens = random_ensemble(3, L, {0.0, 1.0, 2.0}, 5);

  SUBCASE("origin is exactly zero and the map is non-negative") {
    const auto m = connected_correlator(ens, grid, 0.5);
    CHECK(m.kind == CorrelationKind::connected);
    CHECK(m.cell(0, 0).value.real() == 0.0);
    CHECK(m.cell(0, 0).n_samples == 3);
    for (const auto& cell : m.cells)
      if (cell.usable) CHECK(cell.value.real() >= -3.0 * cell.stderr_);
    // White noise of unit variance: C = 2 off the origin.
    for (std::size_t ir = 1; ir < m.dr_axis.size(); ++ir)
      CHECK(m.cell(ir, 0).value.real() == doctest::Approx(2.0).epsilon(0.15));
  }
  SUBCASE("per-realization offsets do not change the map") {
    auto shifted = ens;
    for (std::size_t r = 0; r < shifted.size(); ++r)
      for (auto& f : shifted[r])
        for (double& v : f.values()) v += 1.5 * static_cast<double>(r + 1);
    const auto a = connected_correlator(ens, grid, 0.5);
    const auto b = connected_correlator(shifted, grid, 0.5);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
      CHECK(b.cells[i].value.real() == doctest::Approx(a.cells[i].value.real()).epsilon(1e-10));
      CHECK(b.cells[i].stderr_ == doctest::Approx(a.cells[i].stderr_).epsilon(1e-8));
    }
  }
  SUBCASE("relabeling realizations leaves the map unchanged") {
    std::vector<std::vector<PhaseField>> perm{ens[2], ens[0], ens[1]};
    const auto a = connected_correlator(ens, grid, 0.5);
    const auto b = connected_correlator(perm, grid, 0.5);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
      CHECK(b.cells[i].value.real() == doctest::Approx(a.cells[i].value.real()).epsilon(1e-12));
      CHECK(b.cells[i].stderr_ == doctest::Approx(a.cells[i].stderr_).epsilon(1e-9));
    }
  }
  SUBCASE("direct pair sum oracle") {
    // Brute-force <d^2> - <d>^2 over all site pairs in the dr = 1 bin, lag 1.
    const long n = static_cast<long>(L);
    const auto m = connected_correlator(ens, grid, 0.5);
    double s1 = 0.0, s2 = 0.0, cnt = 0.0;
    for (const auto& snaps : ens)
      for (double t0 : grid.reference_times) {
        const auto& a = snaps[static_cast<std::size_t>(t0)];
        const auto& b = snaps[static_cast<std::size_t>(t0) + 1];
        for (long y = 0; y < n; ++y)
          for (long x = 0; x < n; ++x)
            for (auto [dx, dy] : {std::pair{1L, 0L}, {-1L, 0L}, {0L, 1L}, {0L, -1L}}) {
              const double d = a.at(x, y) - b.at(x + dx, y + dy);
              s1 += d;
              s2 += d * d;
              cnt += 1.0;
            }
      }
    const double expect = s2 / cnt - (s1 / cnt) * (s1 / cnt);
    CHECK(m.cell(static_cast<std::size_t>(m.dr_index(1.0)), 1).value.real() == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("streaming and batch forms agree") {
    std::vector<RealPairAccumulator> accs;
    for (const auto& snaps : ens) {
      RealPairAccumulator acc(grid, L, 1.0, 0.5);
      for (const auto& f : snaps) acc.add(f);
      accs.push_back(std::move(acc));
    }
    const auto a = combine_connected(accs, grid);
    const auto b = connected_correlator(ens, grid, 0.5);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].value == b.cells[i].value);
  }
  SUBCASE("empty bins are flagged, never zero") {
    CorrelationGrid g2{{0.0, 0.5, 1.0}, 0.5, {0.0}, {0.0}};
    const auto m = connected_correlator(ens, g2, 0.5);
    CHECK_FALSE(m.cell(1, 0).usable);
    CHECK(std::isnan(m.cell(1, 0).value.real()));
    CHECK(m.cell(2, 0).usable);
  }
  SUBCASE("missing snapshots are insufficient data") {
    RealPairAccumulator acc(grid, L, 1.0, 0.5);
    acc.add(ens[0][0]);
    try {
      acc.require_complete();
      FAIL("expected insufficient data");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::insufficient_data);
    }
  }
  CHECK_THROWS_AS(RealPairAccumulator(CorrelationGrid{}, L, 1.0, 0.5), Error);
  CHECK_THROWS_AS(RealPairAccumulator(grid, L, 1.0, 0.0), Error);
}

TEST_CASE("g1 estimator basics") {
  const std::size_t L = 12;
  CorrelationGrid grid{populated_dr_centers(L, 1.0, 4.0, 0.5), 0.5, {0.0, 1.0}, {0.0, 1.0}};
  SUBCASE("uniform condensate is fully coherent") {
    std::vector<std::vector<ComplexField>> ens(2);
    for (auto& snaps : ens)
      for (double t : {0.0, 1.0, 2.0}) snaps.emplace_back(L, 1.0, t, std::polar(1.7, 0.3));
    const auto m = g1_estimator(ens, grid, 0.5);
    for (const auto& cell : m.cells) CHECK(std::abs(cell.value) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("origin is exactly one and moduli are bounded") {
    std::vector<std::vector<ComplexField>> ens;
    for (std::size_t r = 0; r < 3; ++r) {
      NoiseStream s(8, r);
      std::vector<ComplexField> snaps;
      for (double t : {0.0, 1.0, 2.0}) {
        ComplexField f(L, 1.0, t);
        for (auto& v : f.values()) v = {1.0 + 0.3 * s.standard_normal(), 0.3 * s.standard_normal()};
        snaps.push_back(std::move(f));
      }
      ens.push_back(std::move(snaps));
    }
    const auto m = g1_estimator(ens, grid, 0.5);
    CHECK(m.cell(0, 0).value == std::complex<double>(1.0, 0.0));
    for (const auto& cell : m.cells) CHECK(std::abs(cell.value) <= 1.0 + 3.0 * cell.stderr_ + 1e-15);
  }
}

TEST_CASE("Edwards-Wilkinson lattice Green function and the Gaussian-phase identity") {
  const std::size_t L = 16;
  const auto run = ew_run(L, 8, {0.0, 0.5, 1.0, 2.0, 4.0}, 5.0);
  const auto& p = run.params;

  SUBCASE("stationary C(dr, 0) matches the mode sum") {
    // C(d) = 2 sum_k S_k (1 - cos k.d), S_k = D / (L^2 nu k2 (1 - nu dt k2 / 2)),
    // averaged over the displacements that fall in each bin.
    const auto k2 = mode_eigenvalues(L, 1.0);
    auto c_of = [&](long dx, long dy) {
      double s = 0.0;
      for (std::size_t n = 0; n < L; ++n)
        for (std::size_t m = 0; m < L; ++m) {
          if (n == 0 && m == 0) continue;
          const double kk = k2[n * L + m];
          const double sk = p.noise_strength / (double(L * L) * p.nu * kk * (1.0 - 0.5 * p.nu * p.dt * kk));
          const double phase = 2.0 * std::numbers::pi * (double(m) * dx + double(n) * dy) / double(L);
          s += 2.0 * sk * (1.0 - std::cos(phase));
        }
      return s;
    };
    const long h = static_cast<long>(L / 2);
    for (std::size_t ir = 1; ir < run.c.dr_axis.size(); ++ir) {
      const double centre = run.c.dr_axis[ir];
      double sum = 0.0, count = 0.0;
      for (long dy = -h + 1; dy <= h; ++dy)
        for (long dx = -h + 1; dx <= h; ++dx) {
          const double len = std::hypot(double(dx), double(dy));
          if (std::abs(len - centre) <= 0.25 + 1e-12) {
            sum += c_of(dx, dy);
            count += 1.0;
          }
        }
      REQUIRE(count > 0.0);
      const auto& cell = run.c.cell(ir, 0);
      CAPTURE(centre);
      CHECK(std::abs(cell.value.real() - sum / count) < 4.0 * cell.stderr_);
      CHECK(cell.value.real() == doctest::Approx(sum / count).epsilon(0.05));
    }
  }
  SUBCASE("-2 log|g1| equals C within errors") {
    std::size_t ok = 0, total = 0;
    for (std::size_t i = 0; i < run.c.cells.size(); ++i) {
      const auto& c = run.c.cells[i];
      const auto& g = run.g1.cells[i];
      if (!c.usable || !g.usable) continue;
      const double lhs = -2.0 * std::log(std::abs(g.value));
      const double err = std::hypot(c.stderr_, 2.0 * g.stderr_ / std::abs(g.value));
      ++total;
      if (std::abs(lhs - c.value.real()) <= 3.0 * err + 1e-12) ++ok;
    }
    REQUIRE(total > 20);
    CHECK(double(ok) >= 0.95 * double(total));
  }
  SUBCASE("-log|g1(0, dt)| is half of C(0, dt)") {
    const auto mlg = minus_log_g1(run.g1);
    for (std::size_t it = 1; it < run.c.dt_axis.size(); ++it) {
      const double half_c = 0.5 * run.c.cell(0, it).value.real();
      const auto& cell = mlg.cell(0, it);
      CHECK(std::abs(cell.value.real() - half_c) <= 3.0 * std::hypot(cell.stderr_, 0.5 * run.c.cell(0, it).stderr_));
    }
  }
}
