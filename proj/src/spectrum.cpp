#include "kpz2d/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "kpz2d/fft.hpp"

namespace kpz2d {

double mode_eigenvalue(std::size_t m, std::size_t n, std::size_t side, double spacing) {
  const double w = 2.0 * std::numbers::pi / static_cast<double>(side);
  return (2.0 / (spacing * spacing)) *
         (2.0 - std::cos(w * static_cast<double>(m)) - std::cos(w * static_cast<double>(n)));
}

std::vector<double> mode_eigenvalues(std::size_t side, double spacing) {
  std::vector<double> k2(side * side);
  for (std::size_t n = 0; n < side; ++n)
    for (std::size_t m = 0; m < side; ++m) k2[n * side + m] = mode_eigenvalue(m, n, side, spacing);
  return k2;
}

std::vector<double> mode_power(const PhaseField& field) {
  const std::size_t L = field.side();
  std::vector<std::complex<double>> buf(field.values().begin(), field.values().end());
  Fft2d fft(L, L);
  fft.forward(buf);
  const double norm = 1.0 / static_cast<double>(L * L);
  std::vector<double> power(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) power[i] = std::norm(buf[i] * norm);
  return power;
}

PowerSpectrum bin_mode_values(std::span<const double> per_mode, std::size_t side, double spacing,
                              SpectrumBinning binning) {
  if (per_mode.size() != side * side) throw_error(ErrorKind::invalid_lattice, "per-mode array size mismatch");
  struct Acc {
    double k2_min = 1e300, k2_max = -1e300, k2_sum = 0.0, sum = 0.0;
    std::size_t count = 0;
  };
  // Ordered keys make the bin order (and thus output) deterministic.
  std::map<std::pair<long, long>, Acc> exact;
  std::vector<Acc> uniform(binning.kind == SpectrumBinning::Kind::uniform ? binning.n_bins : 0);
  if (binning.kind == SpectrumBinning::Kind::uniform && binning.n_bins == 0)
    throw_error(ErrorKind::parameter, "uniform spectrum binning needs n_bins > 0");
  const double k2_top = 8.0 / (spacing * spacing);

  for (std::size_t n = 0; n < side; ++n) {
    for (std::size_t m = 0; m < side; ++m) {
      if (m == 0 && n == 0) continue;
      const double k2 = mode_eigenvalue(m, n, side, spacing);
      Acc* acc = nullptr;
      if (binning.kind == SpectrumBinning::Kind::exact) {
        const long a = std::labs(signed_frequency(m, side));
        const long b = std::labs(signed_frequency(n, side));
        acc = &exact[{std::min(a, b), std::max(a, b)}];
      } else {
        auto idx = static_cast<std::size_t>(k2 / k2_top * static_cast<double>(binning.n_bins));
        idx = std::min(idx, binning.n_bins - 1);
        acc = &uniform[idx];
      }
      acc->k2_min = std::min(acc->k2_min, k2);
      acc->k2_max = std::max(acc->k2_max, k2);
      acc->k2_sum += k2;
      acc->sum += per_mode[n * side + m];
      ++acc->count;
    }
  }

  PowerSpectrum out;
  auto emit = [&](const Acc& a) {
    if (a.count == 0) return;
    const double c = static_cast<double>(a.count);
    out.bins.push_back({a.k2_min, a.k2_max, a.k2_sum / c, a.sum / c, a.count});
  };
  if (binning.kind == SpectrumBinning::Kind::exact) {
    for (const auto& [key, acc] : exact) emit(acc);
    std::stable_sort(out.bins.begin(), out.bins.end(),
                     [](const SpectrumBin& x, const SpectrumBin& y) { return x.k2_mean < y.k2_mean; });
  } else {
    for (const auto& acc : uniform) emit(acc);
  }
  return out;
}

PowerSpectrum power_spectrum(const PhaseField& field, SpectrumBinning binning) {
  if (field.side() < 4)
    throw_error(ErrorKind::invalid_lattice, "power spectrum needs L >= 4");
  const auto power = mode_power(field);
  return bin_mode_values(power, field.side(), field.spacing(), binning);
}

}  // namespace kpz2d
