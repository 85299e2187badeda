#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "kpz2d/correlation.hpp"
#include "kpz2d/ensemble.hpp"
#include "kpz2d/noise.hpp"

namespace kpz2d {

/// Row-major W x H pixel grid, index y * W + x.
template <class T>
struct PixelGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<T> data;

  PixelGrid() = default;
  PixelGrid(std::size_t w, std::size_t h, T fill = T{}) : width(w), height(h), data(w * h, fill) {}
  std::size_t size() const noexcept { return data.size(); }
  T& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  const T& at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
  bool same_shape(std::size_t w, std::size_t h) const { return width == w && height == h; }
};

using Image = PixelGrid<double>;
using ComplexImage = PixelGrid<std::complex<double>>;
using Mask = PixelGrid<std::uint8_t>;

/// Carrier wavevector in radians per pixel.
struct Carrier {
  double kx = 0.0;
  double ky = 0.0;
  double norm() const;
};

/// |k_c| must lie in (8 pi / min(W, H), 0.8 pi).
bool carrier_resolvable(const Carrier& k, std::size_t width, std::size_t height);

struct Interferogram {
  Image intensity;
  Image arm1;
  Image arm2;
  Carrier carrier;
  double counts_scale = 1.0;  ///< expected photons per unit intensity
};

/// I(p) = I1 + I2 + 2 sqrt(I1 I2) Re[g1(p) exp(i k_c . p)] with p the pixel
/// coordinates (x, y). Domain error if |g1| > 1 or a profile is negative;
/// parameter error for mismatched shapes or an unresolvable carrier.
Interferogram synthesize(const ComplexImage& g1, const Image& arm1, const Image& arm2, Carrier carrier,
                         double counts_scale = 1.0);

struct DemodulationOptions {
  double window_fraction = 0.5;  ///< flat-top radius r = window_fraction |k_c|
  double edge_fraction = 0.2;    ///< raised-cosine edge from r to (1 + edge_fraction) r
  double intensity_floor = 1e-6; ///< pixels with I1 I2 below floor * max(I1 I2) are masked
  /// Estimate the arms from the low-pass baseband (I1 = I2 = baseband / 2)
  /// instead of using the supplied profiles.
  bool estimate_arms = false;
};

struct Demodulated {
  ComplexImage g1;
  Mask valid;
};

/// Sideband demodulation: FFT of I (minus I1 + I2 when the arms are supplied),
/// window around +k_c, inverse FFT, shift to
/// baseband by exp(-i k_c . p) and divide by sqrt(I1 I2). The +k_c sideband
/// carries sqrt(I1 I2) g1, half of the fringe term's 2 sqrt(I1 I2) amplitude.
/// Configuration error if the window reaches the origin (outer radius >= |k_c|).
Demodulated demodulate(const Interferogram& ig, const DemodulationOptions& options = {});

/// One Poisson resample of the counts: I' = Poisson(counts_scale I) / counts_scale.
Image add_shot_noise(const Image& intensity, double counts_scale, NoiseStream& stream);

struct ShotNoiseResult {
  Image sigma_abs_g1;  ///< per-pixel standard deviation of |g1| over resamples
  Image mean_abs_g1;
  std::size_t n_mc = 0;
};

/// Minimum number of resamples accepted by shot_noise_mc.
inline constexpr std::size_t kMinShotNoiseSamples = 50;

/// n_mc Poisson resamples of the observed intensity, each demodulated with
/// the supplied arms; resample r draws from NoiseStream(seed, r) and results
/// are reduced in resample order.
ShotNoiseResult shot_noise_mc(const Interferogram& ig, std::size_t n_mc, std::uint64_t seed,
                              ExecutionPolicy exec = {}, const DemodulationOptions& options = {});

/// Radial profile of a g1 image about the point-reflection centre (cx, cy):
/// pixel p contributes at separation dr = 2 |p - c| (it pairs with its mirror
/// image), binned with the given width. Value is the mean complex g1 of the
/// valid pixels, stderr the spatial standard error of |g1|, n_samples the
/// pixel count. The dt axis holds the single delay `dt`.
CorrelationMap radial_profile(const ComplexImage& g1, const Mask& valid, double cx, double cy, double bin_width,
                              double dt);

}  // namespace kpz2d
