#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kpz2d/lattice.hpp"

namespace kpz2d {

/// Convention for the transform used by the spectral utilities:
///   hat(k) = (1/L^2) sum_r theta(r) exp(-i k.r),
/// so that sum_k |hat(k)|^2 = sum_r theta(r)^2 / L^2.
inline constexpr const char* kSpectrumNormalization =
    "hat(k) = L^-2 sum_r theta(r) exp(-i k.r); sum_k |hat(k)|^2 = L^-2 sum_r theta(r)^2";

/// Discrete Laplacian eigenvalue of mode (m, n):
/// k2 = (2/a^2) (2 - cos(2 pi m/L) - cos(2 pi n/L)).
double mode_eigenvalue(std::size_t m, std::size_t n, std::size_t side, double spacing = 1.0);

/// k2 for every mode, row-major over (n, m) like the field itself.
std::vector<double> mode_eigenvalues(std::size_t side, double spacing = 1.0);

/// |hat(k)|^2 for every mode, row-major.
std::vector<double> mode_power(const PhaseField& field);

struct SpectrumBinning {
  enum class Kind {
    exact,    ///< one bin per symmetry class of (|m|, |n|), i.e. per eigenvalue
    uniform,  ///< equal-width bins in k2 over (0, 8/a^2]
  };
  Kind kind = Kind::exact;
  std::size_t n_bins = 32;
};

struct SpectrumBin {
  double k2_min = 0.0;
  double k2_max = 0.0;
  double k2_mean = 0.0;
  double mean_power = 0.0;
  std::size_t n_modes = 0;
};

struct PowerSpectrum {
  std::vector<SpectrumBin> bins;  ///< sorted by k2, empty bins dropped
  std::string normalization = kSpectrumNormalization;
};

/// Bins arbitrary per-mode values (power, oracle values, ...) the same way
/// power_spectrum bins |hat(k)|^2. The zero mode is excluded.
PowerSpectrum bin_mode_values(std::span<const double> per_mode, std::size_t side, double spacing,
                              SpectrumBinning binning = {});

/// Requires L >= 4.
PowerSpectrum power_spectrum(const PhaseField& field, SpectrumBinning binning = {});

}  // namespace kpz2d
