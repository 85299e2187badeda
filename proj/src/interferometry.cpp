#include "kpz2d/interferometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kpz2d/fft.hpp"

namespace kpz2d {

double Carrier::norm() const { return std::hypot(kx, ky); }

bool carrier_resolvable(const Carrier& k, std::size_t width, std::size_t height) {
  const double lo = 8.0 * std::numbers::pi / static_cast<double>(std::min(width, height));
  const double kn = k.norm();
  return kn > lo && kn < 0.8 * std::numbers::pi;
}

namespace {

void require_shape(const Image& im, std::size_t w, std::size_t h, const char* what) {
  if (!im.same_shape(w, h) || im.size() != w * h)
    throw_error(ErrorKind::parameter, std::string(what) + " does not match the image shape");
}

void require_carrier(const Carrier& k, std::size_t w, std::size_t h) {
  if (!carrier_resolvable(k, w, h)) {
    std::ostringstream os;
    os << "carrier |k_c| = " << k.norm() << " rad/pixel outside the resolvable window (8 pi / min(W, H), 0.8 pi)";
    throw_error(ErrorKind::parameter, os.str());
  }
}

double frequency(std::size_t m, std::size_t n) {
  return 2.0 * std::numbers::pi * static_cast<double>(signed_frequency(m, n)) / static_cast<double>(n);
}

/// 1 inside r, raised cosine down to 0 at (1 + edge) r.
double window_weight(double dist, double r, double edge) {
  if (dist <= r) return 1.0;
  const double outer = (1.0 + edge) * r;
  if (dist >= outer || edge <= 0.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (dist - r) / (outer - r)));
}

/// Inverse transform of spectrum * window centred at (cx, cy), normalized.
std::vector<std::complex<double>> filtered(const std::vector<std::complex<double>>& spectrum, const Fft2d& fft,
                                           std::size_t w, std::size_t h, double cx, double cy, double r,
                                           double edge) {
  std::vector<std::complex<double>> out(spectrum.size());
  for (std::size_t n = 0; n < h; ++n) {
    const double ky = frequency(n, h);
    for (std::size_t m = 0; m < w; ++m) {
      const double kx = frequency(m, w);
      const double wgt = window_weight(std::hypot(kx - cx, ky - cy), r, edge);
      out[n * w + m] = wgt == 0.0 ? std::complex<double>{} : spectrum[n * w + m] * wgt;
    }
  }
  fft.inverse(out);
  const double inv = 1.0 / static_cast<double>(w * h);
  for (auto& v : out) v *= inv;
  return out;
}

}  // namespace

Interferogram synthesize(const ComplexImage& g1, const Image& arm1, const Image& arm2, Carrier carrier,
                         double counts_scale) {
  const std::size_t w = g1.width, h = g1.height;
  if (w == 0 || h == 0 || g1.size() != w * h) throw_error(ErrorKind::parameter, "empty or malformed g1 image");
  require_shape(arm1, w, h, "arm 1 profile");
  require_shape(arm2, w, h, "arm 2 profile");
  require_carrier(carrier, w, h);
  if (!(counts_scale > 0.0)) throw_error(ErrorKind::parameter, "counts_scale must be > 0");
  Interferogram ig{Image(w, h), arm1, arm2, carrier, counts_scale};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      const std::complex<double> g = g1.data[i];
      if (std::abs(g) > 1.0 + 1e-12) throw_error(ErrorKind::domain, "|g1| > 1 in the input map");
      const double i1 = arm1.data[i], i2 = arm2.data[i];
      if (!(i1 >= 0.0) || !(i2 >= 0.0)) throw_error(ErrorKind::domain, "arm profiles must be non-negative");
      const double phase = carrier.kx * static_cast<double>(x) + carrier.ky * static_cast<double>(y);
      const double fringe = g.real() * std::cos(phase) - g.imag() * std::sin(phase);
      ig.intensity.data[i] = std::max(0.0, i1 + i2 + 2.0 * std::sqrt(i1 * i2) * fringe);
    }
  return ig;
}

Demodulated demodulate(const Interferogram& ig, const DemodulationOptions& options) {
  const std::size_t w = ig.intensity.width, h = ig.intensity.height;
  if (w == 0 || h == 0 || ig.intensity.size() != w * h) throw_error(ErrorKind::parameter, "empty interferogram");
  require_carrier(ig.carrier, w, h);
  const double kc = ig.carrier.norm();
  const double r = options.window_fraction * kc;
  if (!(r > 0.0) || !(options.edge_fraction >= 0.0))
    throw_error(ErrorKind::config, "sideband window radius and edge must be positive");
  if ((1.0 + options.edge_fraction) * r >= kc)
    throw_error(ErrorKind::config, "sideband window overlaps the baseband: outer radius must stay below |k_c|");
  if (!options.estimate_arms) {
    require_shape(ig.arm1, w, h, "arm 1 profile");
    require_shape(ig.arm2, w, h, "arm 2 profile");
  }

  const Fft2d fft(w, h);
  std::vector<std::complex<double>> spectrum(ig.intensity.data.begin(), ig.intensity.data.end());
  // Known arms: drop the fringe-free pedestal so its edge kinks cannot leak
  // into the sideband window.
  if (!options.estimate_arms)
    for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] -= ig.arm1.data[i] + ig.arm2.data[i];
  fft.forward(spectrum);
  const auto side = filtered(spectrum, fft, w, h, ig.carrier.kx, ig.carrier.ky, r, options.edge_fraction);

  std::vector<double> amp(w * h);
  if (options.estimate_arms) {
    const auto base = filtered(spectrum, fft, w, h, 0.0, 0.0, r, options.edge_fraction);
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::max(0.0, 0.5 * base[i].real());
  } else {
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::sqrt(ig.arm1.data[i] * ig.arm2.data[i]);
  }
  const double amp_max = *std::max_element(amp.begin(), amp.end());
  const double floor = std::sqrt(options.intensity_floor) * amp_max;

  Demodulated out{ComplexImage(w, h), Mask(w, h, 0)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (!(amp[i] > floor) || amp[i] <= 0.0) continue;
      const double phase = ig.carrier.kx * static_cast<double>(x) + ig.carrier.ky * static_cast<double>(y);
      out.g1.data[i] = side[i] * std::polar(1.0, -phase) / amp[i];
      out.valid.data[i] = 1;
    }
  return out;
}

Image add_shot_noise(const Image& intensity, double counts_scale, NoiseStream& stream) {
  if (!(counts_scale > 0.0)) throw_error(ErrorKind::parameter, "counts_scale must be > 0");
  Image out(intensity.width, intensity.height);
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    const double mean = counts_scale * intensity.data[i];
    if (!(mean >= 0.0)) throw_error(ErrorKind::domain, "intensities must be non-negative");
    out.data[i] = static_cast<double>(stream.poisson(mean)) / counts_scale;
  }
  return out;
}

ShotNoiseResult shot_noise_mc(const Interferogram& ig, std::size_t n_mc, std::uint64_t seed, ExecutionPolicy exec,
                              const DemodulationOptions& options) {
  if (n_mc < kMinShotNoiseSamples)
    throw_error(ErrorKind::insufficient_data, "shot-noise Monte Carlo needs n_mc >= " +
                                                  std::to_string(kMinShotNoiseSamples) + ", got " +
                                                  std::to_string(n_mc));
  if (!(ig.counts_scale > 0.0)) throw_error(ErrorKind::parameter, "counts_scale must be > 0");
  const std::size_t w = ig.intensity.width, h = ig.intensity.height, n = w * h;
  // Welford accumulation in resample order, batch by batch.
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  const std::size_t batch = 16;
  std::size_t done = 0;
  while (done < n_mc) {
    const std::size_t count = std::min(batch, n_mc - done);
    auto results = run_indexed<std::vector<double>>(count, exec, [&](std::uint64_t j) {
      NoiseStream stream(seed, done + j);
      Interferogram noisy = ig;
      noisy.intensity = add_shot_noise(ig.intensity, ig.counts_scale, stream);
      const auto d = demodulate(noisy, options);
      std::vector<double> mag(n);
      for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(d.g1.data[i]);
      return mag;
    });
    for (const auto& mag : results) {
      ++done;
      const double k = static_cast<double>(done);
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = mag[i] - mean[i];
        mean[i] += delta / k;
        m2[i] += delta * (mag[i] - mean[i]);
      }
    }
  }
  ShotNoiseResult res{Image(w, h), Image(w, h), n_mc};
  for (std::size_t i = 0; i < n; ++i) {
    res.mean_abs_g1.data[i] = mean[i];
    res.sigma_abs_g1.data[i] = std::sqrt(m2[i] / static_cast<double>(n_mc - 1));
  }
  return res;
}

CorrelationMap radial_profile(const ComplexImage& g1, const Mask& valid, double cx, double cy, double bin_width,
                              double dt) {
  if (!(bin_width > 0.0)) throw_error(ErrorKind::parameter, "bin_width must be > 0");
  if (!valid.same_shape(g1.width, g1.height)) throw_error(ErrorKind::parameter, "mask does not match the image");
  std::vector<std::complex<double>> sum;
  std::vector<double> sum_abs, sum_abs2;
  std::vector<std::size_t> count;
  for (std::size_t y = 0; y < g1.height; ++y)
    for (std::size_t x = 0; x < g1.width; ++x) {
      if (!valid.at(x, y)) continue;
      const double dr = 2.0 * std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
      const auto b = static_cast<std::size_t>(std::lround(dr / bin_width));
      if (b >= count.size()) {
        sum.resize(b + 1);
        sum_abs.resize(b + 1, 0.0);
        sum_abs2.resize(b + 1, 0.0);
        count.resize(b + 1, 0);
      }
      const auto g = g1.at(x, y);
      sum[b] += g;
      sum_abs[b] += std::abs(g);
      sum_abs2[b] += std::norm(g);
      ++count[b];
    }
  std::vector<double> dr_axis;
  std::vector<std::size_t> bins;
  for (std::size_t b = 0; b < count.size(); ++b)
    if (count[b] > 0) {
      dr_axis.push_back(static_cast<double>(b) * bin_width);
      bins.push_back(b);
    }
  CorrelationMap map(CorrelationKind::coherence, dr_axis, {dt});
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const std::size_t b = bins[k];
    const double nb = static_cast<double>(count[b]);
    auto& cell = map.cell(k, 0);
    cell.value = sum[b] / nb;
    cell.n_samples = count[b];
    if (count[b] > 1) {
      const double mean_abs = sum_abs[b] / nb;
      const double var = std::max(0.0, (sum_abs2[b] - nb * mean_abs * mean_abs) / (nb - 1.0));
      cell.stderr_ = std::sqrt(var / nb);
    }
    cell.usable = true;
  }
  return map;
}

}  // namespace kpz2d
