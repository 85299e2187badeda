#pragma once

// Periodic-lattice stencil kernels.
//
// Every kernel comes in two flavours with identical per-site arithmetic:
//   *_reference  straightforward serial loops with modular indexing, kept as
//                the ground truth for tests;
//   (unsuffixed) row-blocked OpenMP version used by the integrators.
// The two are required to agree bit for bit.

#include <cstddef>
#include <span>

namespace kpz2d::kernels {

enum class Nonlinearity {
  central,   ///< ((t[+d] - t[-d]) / 2a)^2 summed over x, y
  lam_shin,  ///< (f^2 + f b + b^2) / (3 a^2) with forward/backward differences f, b
};

struct StencilGeometry {
  std::size_t side = 0;
  double spacing = 1.0;
};

struct KpzCoefficients {
  double dt = 0.0;
  double nu = 0.0;
  double half_lambda = 0.0;
  Nonlinearity nonlinearity = Nonlinearity::central;
};

void laplacian_reference(std::span<const double> in, std::span<double> out, StencilGeometry g);
void laplacian(std::span<const double> in, std::span<double> out, StencilGeometry g);

void grad_squared_reference(std::span<const double> in, std::span<double> out, StencilGeometry g,
                            Nonlinearity nl = Nonlinearity::central);
void grad_squared(std::span<const double> in, std::span<double> out, StencilGeometry g,
                  Nonlinearity nl = Nonlinearity::central);

/// out = in + dt * (nu * lap(in) + half_lambda * grad2(in)) + increment.
/// `increment` already carries the noise scale. Returns false if any output
/// value is non-finite.
bool kpz_update_reference(std::span<const double> in, std::span<const double> increment,
                          std::span<double> out, StencilGeometry g, const KpzCoefficients& c);
bool kpz_update(std::span<const double> in, std::span<const double> increment, std::span<double> out,
                StencilGeometry g, const KpzCoefficients& c);

}  // namespace kpz2d::kernels
