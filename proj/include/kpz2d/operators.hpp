#pragma once

#include "kpz2d/kernels.hpp"
#include "kpz2d/lattice.hpp"

namespace kpz2d {

/// 5-point Laplacian with periodic wrap. Output time equals input time.
PhaseField laplacian(const PhaseField& field);

/// Squared gradient per site. `central` is the plain central-difference form;
/// `lam_shin` is the forward/backward average used by the KPZ integrator.
PhaseField grad_squared(const PhaseField& field,
                        kernels::Nonlinearity nl = kernels::Nonlinearity::central);

}  // namespace kpz2d
