#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "kpz2d/fft.hpp"
#include "kpz2d/kernels.hpp"
#include "kpz2d/noise.hpp"
#include "kpz2d/operators.hpp"
#include "kpz2d/spectrum.hpp"
#include "support.hpp"

using namespace kpz2d;

namespace {

PhaseField random_field(std::size_t side, std::uint64_t seed, double spacing = 1.0) {
  NoiseStream s(seed, 0);
  return sample_noise_field(s, side, 1.0, spacing);
}

double max_abs_diff(const PhaseField& a, const PhaseField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("lattice field storage and periodic access") {
  PhaseField f(4, 0.5, 2.0);
  CHECK(f.size() == 16);
  CHECK(f.spacing() == 0.5);
  CHECK(f.time() == 2.0);
  f.at(0, 0) = 7.0;
  CHECK(f.at(4, -4) == 7.0);
  CHECK(f.at(-1, 0) == f[f.index(3, 0)]);
  CHECK_THROWS_AS(PhaseField(0), Error);
  CHECK_THROWS_AS(PhaseField(4, 0.0), Error);
}

TEST_CASE("laplacian examples") {
  SUBCASE("constant field vanishes") {
    PhaseField f(8, 1.0, 0.0, 3.25);
    const auto l = laplacian(f);
    for (double v : l.values()) CHECK(v == 0.0);
  }
  SUBCASE("unit spike on 4x4") {
    PhaseField f(4);
    f.at(1, 2) = 1.0;
    const auto l = laplacian(f);
    for (long y = 0; y < 4; ++y)
      for (long x = 0; x < 4; ++x) {
        double expect = 0.0;
        if (x == 1 && y == 2) expect = -4.0;
        if ((std::abs(x - 1) == 1 && y == 2) || (x == 1 && std::abs(y - 2) == 1)) expect = 1.0;
        CHECK(l.at(x, y) == doctest::Approx(expect));
      }
  }
  SUBCASE("spike at the corner wraps to the far edges") {
    PhaseField f(4);
    f.at(0, 0) = 1.0;
    const auto l = laplacian(f);
    CHECK(l.at(3, 0) == 1.0);
    CHECK(l.at(0, 3) == 1.0);
    CHECK(l.at(1, 0) == 1.0);
    CHECK(l.at(0, 1) == 1.0);
    CHECK(l.at(0, 0) == -4.0);
    CHECK(l.at(2, 2) == 0.0);
  }
  SUBCASE("sine is an eigenfield with the discrete eigenvalue") {
    for (double a : {1.0, 0.5}) {
      const std::size_t L = 64;
      const auto f = test::sine_field(L, a);
      const auto l = laplacian(f);
      const double k2 = 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi / L)) / (a * a);
      CHECK(k2 == doctest::Approx(mode_eigenvalue(1, 0, L, a)).epsilon(1e-14));
      for (std::size_t i = 0; i < f.size(); ++i) CHECK(l[i] == doctest::Approx(-k2 * f[i]).epsilon(1e-9).scale(1.0));
    }
  }
  SUBCASE("output time equals input time") {
    PhaseField f(4, 1.0, 3.5);
    CHECK(laplacian(f).time() == 3.5);
  }
  CHECK_THROWS_AS(laplacian(PhaseField(2)), Error);
}

TEST_CASE("grad_squared examples") {
  SUBCASE("constant field") {
    const auto g = grad_squared(PhaseField(8, 1.0, 0.0, -2.0));
    for (double v : g.values()) CHECK(v == 0.0);
  }
  SUBCASE("sampled sine, central differences") {
    const std::size_t L = 32;
    const double a = 0.5;
    const auto f = test::sine_field(L, a);
    const auto g = grad_squared(f);
    for (std::size_t x = 0; x < L; ++x) {
      const double expect =
          std::pow(std::cos(2.0 * std::numbers::pi * x / L) * std::sin(2.0 * std::numbers::pi / L) / a, 2);
      CHECK(g.at(static_cast<long>(x), 5) == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
    }
  }
  SUBCASE("checkerboard vanishes under central differences") {
    PhaseField f(8);
    for (long y = 0; y < 8; ++y)
      for (long x = 0; x < 8; ++x) f.at(x, y) = ((x + y) % 2) ? 1.0 : -1.0;
    const auto g = grad_squared(f);
    for (double v : g.values()) CHECK(v == 0.0);
  }
  SUBCASE("lam-shin form is exact on a linear ramp in one direction") {
    // f = b = s for a uniform slope away from the wrap seam.
    PhaseField f(16);
    for (long y = 0; y < 16; ++y)
      for (long x = 0; x < 16; ++x) f.at(x, y) = 0.3 * static_cast<double>(y);
    const auto g = grad_squared(f, kernels::Nonlinearity::lam_shin);
    CHECK(g.at(4, 6) == doctest::Approx(0.09));
  }
  CHECK_THROWS_AS(grad_squared(PhaseField(2)), Error);
}

TEST_CASE("stencil properties on random fields") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    const auto f = random_field(16, seed);
    const auto g = random_field(16, seed + 100);
    const long dx = static_cast<long>(seed * 3), dy = -static_cast<long>(seed);

    // translation equivariance
    CHECK(max_abs_diff(laplacian(cyclic_shift(f, dx, dy)), cyclic_shift(laplacian(f), dx, dy)) == 0.0);
    for (auto nl : {kernels::Nonlinearity::central, kernels::Nonlinearity::lam_shin})
      CHECK(max_abs_diff(grad_squared(cyclic_shift(f, dx, dy), nl), cyclic_shift(grad_squared(f, nl), dx, dy)) ==
            0.0);

    // linearity
    PhaseField comb(16);
    for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = 2.5 * f[i] - 0.75 * g[i];
    const auto lf = laplacian(f), lg = laplacian(g), lc = laplacian(comb);
    for (std::size_t i = 0; i < comb.size(); ++i)
      CHECK(lc[i] == doctest::Approx(2.5 * lf[i] - 0.75 * lg[i]).epsilon(1e-12).scale(1.0));

    // telescoping sum
    double sum = 0.0, mx = 0.0;
    for (double v : lf.values()) sum += v;
    for (double v : f.values()) mx = std::max(mx, std::abs(v));
    CHECK(std::abs(sum) < 1e-10 * 256.0 * mx);

    for (auto nl : {kernels::Nonlinearity::central, kernels::Nonlinearity::lam_shin}) {
      const auto g2 = grad_squared(f, nl);
      for (double v : g2.values()) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("parallel kernels agree bit for bit with the serial reference") {
  for (std::size_t L : {3u, 5u, 16u, 67u}) {
    for (double a : {1.0, 0.7}) {
      const auto f = random_field(L, L, a);
      const auto inc = random_field(L, L + 1, a);
      const kernels::StencilGeometry g{L, a};
      std::vector<double> r(f.size()), p(f.size());
      kernels::laplacian_reference(f.values(), r, g);
      kernels::laplacian(f.values(), p, g);
      CHECK(r == p);
      for (auto nl : {kernels::Nonlinearity::central, kernels::Nonlinearity::lam_shin}) {
        kernels::grad_squared_reference(f.values(), r, g, nl);
        kernels::grad_squared(f.values(), p, g, nl);
        CHECK(r == p);
        const kernels::KpzCoefficients c{0.05, 1.0, 1.5, nl};
        CHECK(kernels::kpz_update_reference(f.values(), inc.values(), r, g, c));
        CHECK(kernels::kpz_update(f.values(), inc.values(), p, g, c));
        CHECK(r == p);
      }
    }
  }
}

TEST_CASE("kpz_update reports non-finite output") {
  const std::size_t L = 4;
  std::vector<double> in(L * L, 0.0), inc(L * L, 0.0), out(L * L);
  in[5] = std::numeric_limits<double>::infinity();
  const kernels::KpzCoefficients c{0.01, 1.0, 1.5, kernels::Nonlinearity::lam_shin};
  CHECK_FALSE(kernels::kpz_update_reference(in, inc, out, {L, 1.0}, c));
  CHECK_FALSE(kernels::kpz_update(in, inc, out, {L, 1.0}, c));
}

TEST_CASE("noise stream determinism and statistics") {
  SUBCASE("same ids give identical fields, different ids do not") {
    NoiseStream a(42, 3), b(42, 3), c(42, 4), d(43, 3);
    const auto fa = sample_noise_field(a, 32, 1.0);
    const auto fb = sample_noise_field(b, 32, 1.0);
    const auto fc = sample_noise_field(c, 32, 1.0);
    const auto fd = sample_noise_field(d, 32, 1.0);
    CHECK(fa == fb);
    CHECK_FALSE(fa == fc);
    CHECK_FALSE(fa == fd);
    CHECK(a.counter() == 32 * 32);
  }
  SUBCASE("variance 1 on L = 256") {
    NoiseStream s(7, 0);
    const auto f = sample_noise_field(s, 256, 1.0);
    double m = 0.0, v = 0.0;
    for (double x : f.values()) m += x;
    m /= static_cast<double>(f.size());
    for (double x : f.values()) v += (x - m) * (x - m);
    v /= static_cast<double>(f.size() - 1);
    CHECK(std::abs(m) < 4.0 / 256.0);
    CHECK(v == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("variance 2 D dt over 1e6 samples") {
    NoiseStream s(11, 2);
    const double var = 2.0 * 1.0 * 0.01;
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (int k = 0; k < 16; ++k) {
      const auto f = sample_noise_field(s, 250, var);
      for (double x : f.values()) {
        sum += x;
        sum2 += x * x;
        ++n;
      }
    }
    const double mean = sum / n;
    CHECK(n == 1000000);
    CHECK((sum2 / n - mean * mean) == doctest::Approx(var).epsilon(0.05));
  }
  SUBCASE("streams with neighbouring ids are uncorrelated") {
    NoiseStream a(5, 0), b(5, 1);
    double sab = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sab += a.standard_normal() * b.standard_normal();
    CHECK(std::abs(sab / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("poisson draws") {
    NoiseStream s(9, 9);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(s.poisson(30.0));
      sum += k;
      sum2 += k * k;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(30.0).epsilon(0.01));
    CHECK((sum2 / n - mean * mean) == doctest::Approx(30.0).epsilon(0.05));
    CHECK(s.poisson(0.0) == 0);
  }
  NoiseStream s(1, 1);
  CHECK_THROWS_AS(sample_noise_field(s, 8, 0.0), Error);
  CHECK_THROWS_AS(sample_noise_field(s, 8, -1.0), Error);
}

TEST_CASE("fft matches the direct transform") {
  const std::size_t nx = 6, ny = 4;
  std::vector<std::complex<double>> data(nx * ny);
  NoiseStream s(3, 0);
  for (auto& v : data) v = {s.standard_normal(), s.standard_normal()};
  auto out = data;
  Fft2d fft(nx, ny);
  fft.forward(out);
  for (std::size_t n = 0; n < ny; ++n)
    for (std::size_t m = 0; m < nx; ++m) {
      std::complex<double> sum{};
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x)
          sum += data[y * nx + x] * std::polar(1.0, -2.0 * std::numbers::pi * (double(m * x) / nx + double(n * y) / ny));
      CHECK(std::abs(out[n * nx + m] - sum) < 1e-12);
    }
  fft.inverse(out);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(std::abs(out[i] / double(nx * ny) - data[i]) < 1e-14);
  CHECK(signed_frequency(0, 8) == 0);
  CHECK(signed_frequency(4, 8) == 4);
  CHECK(signed_frequency(5, 8) == -3);
}

TEST_CASE("power spectrum") {
  SUBCASE("constant field has no power off the zero mode") {
    const auto spec = power_spectrum(PhaseField(16, 1.0, 0.0, 4.0));
    for (const auto& b : spec.bins) CHECK(b.mean_power == 0.0);
  }
  SUBCASE("single sine mode") {
    const std::size_t L = 16;
    const auto f = test::sine_field(L);
    const auto p = mode_power(f);
    double total = 0.0;
    for (std::size_t n = 0; n < L; ++n)
      for (std::size_t m = 0; m < L; ++m) {
        const double v = p[n * L + m];
        total += v;
        if (n == 0 && (m == 1 || m == L - 1))
          CHECK(v == doctest::Approx(0.25));
        else
          CHECK(v < 1e-28);
      }
    CHECK(total == doctest::Approx(0.5));
  }
  SUBCASE("parseval and the direct-sum definition on 8x8") {
    const std::size_t L = 8;
    const auto f = random_field(L, 77);
    const auto p = mode_power(f);
    double lhs = 0.0, rhs = 0.0;
    for (double v : p) lhs += v;
    for (double v : f.values()) rhs += v * v;
    CHECK(lhs == doctest::Approx(rhs / double(L * L)));
    for (std::size_t n = 0; n < L; ++n)
      for (std::size_t m = 0; m < L; ++m) {
        std::complex<double> sum{};
        for (std::size_t y = 0; y < L; ++y)
          for (std::size_t x = 0; x < L; ++x)
            sum += f[f.index(x, y)] * std::polar(1.0, -2.0 * std::numbers::pi * double(m * x + n * y) / double(L));
        sum /= double(L * L);
        CHECK(p[n * L + m] == doctest::Approx(std::norm(sum)).epsilon(1e-10));
      }
  }
  SUBCASE("white noise gives a flat spectrum") {
    // Per mode, <|hat|^2> = variance / L^2.
    const std::size_t L = 8;
    std::vector<double> acc(L * L, 0.0);
    const int n = 4000;
    NoiseStream s(8, 8);
    for (int k = 0; k < n; ++k) {
      const auto p = mode_power(sample_noise_field(s, L, 1.0));
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i] / n;
    }
    const auto spec = bin_mode_values(acc, L, 1.0);
    for (const auto& b : spec.bins) {
      const double target = 1.0 / double(L * L);
      const double se = target / std::sqrt(double(n * b.n_modes) / 2.0);
      CHECK(std::abs(b.mean_power - target) < 4.0 * se);
    }
  }
  SUBCASE("exact and uniform binning") {
    const auto k2 = mode_eigenvalues(16, 1.0);
    const auto exact = bin_mode_values(k2, 16, 1.0);
    for (const auto& b : exact.bins) {
      CHECK(b.k2_min == doctest::Approx(b.k2_max));
      CHECK(b.mean_power == doctest::Approx(b.k2_mean));
    }
    std::size_t modes = 0;
    const auto uni = bin_mode_values(k2, 16, 1.0, {SpectrumBinning::Kind::uniform, 8});
    for (const auto& b : uni.bins) modes += b.n_modes;
    CHECK(modes == 16 * 16 - 1);
    CHECK(uni.bins.size() <= 8);
  }
  CHECK(power_spectrum(PhaseField(4)).normalization == std::string(kSpectrumNormalization));
}
