#include "kpz2d/operators.hpp"

namespace kpz2d {

PhaseField laplacian(const PhaseField& field) {
  require_stencil_lattice(field.side());
  PhaseField out(field.side(), field.spacing(), field.time());
  kernels::laplacian(field.values(), out.values(), {field.side(), field.spacing()});
  return out;
}

PhaseField grad_squared(const PhaseField& field, kernels::Nonlinearity nl) {
  require_stencil_lattice(field.side());
  PhaseField out(field.side(), field.spacing(), field.time());
  kernels::grad_squared(field.values(), out.values(), {field.side(), field.spacing()}, nl);
  return out;
}

}  // namespace kpz2d
