#include "kpz2d/kernels.hpp"

#include <cmath>
#include <limits>

#include "kpz2d/errors.hpp"

namespace kpz2d::kernels {

namespace {

struct Constants {
  double inv_a2;
  double half_inv_a;
  double third_inv_a2;
};

Constants constants_for(const StencilGeometry& g) {
  return {1.0 / (g.spacing * g.spacing), 0.5 / g.spacing, 1.0 / (3.0 * g.spacing * g.spacing)};
}

void check_sizes(std::span<const double> in, std::span<double> out, const StencilGeometry& g) {
  if (g.side < 3) throw_error(ErrorKind::invalid_lattice, "stencil operations need L >= 3");
  if (in.size() != g.side * g.side || out.size() != in.size())
    throw_error(ErrorKind::invalid_lattice, "field size does not match lattice side");
}

// Per-site formulas shared by the reference and the blocked kernels.
inline double site_laplacian(double c, double e, double w, double n, double s, const Constants& k) {
  return ((e + w) + (n + s) - 4.0 * c) * k.inv_a2;
}

inline double site_grad2(double c, double e, double w, double n, double s, const Constants& k,
                         Nonlinearity nl) {
  if (nl == Nonlinearity::central) {
    const double gx = (e - w) * k.half_inv_a;
    const double gy = (n - s) * k.half_inv_a;
    return gx * gx + gy * gy;
  }
  const double fx = e - c, bx = c - w;
  const double fy = n - c, by = c - s;
  return ((fx * fx + fx * bx + bx * bx) + (fy * fy + fy * by + by * by)) * k.third_inv_a2;
}

inline double site_kpz(double c, double e, double w, double n, double s, double inc, const Constants& k,
                       const KpzCoefficients& co) {
  return c + co.dt * (co.nu * site_laplacian(c, e, w, n, s, k) +
                      co.half_lambda * site_grad2(c, e, w, n, s, k, co.nonlinearity)) +
         inc;
}

inline bool finite_value(double v) { return std::abs(v) <= std::numeric_limits<double>::max(); }

// Applies `op(c, e, w, n, s, i)` to every site of one row with explicit
// wrap at the two row ends so the interior loop is branch-free.
template <class Op>
inline void for_row(const double* rows_c, const double* rows_n, const double* rows_s, std::size_t L,
                    Op&& op) {
  op(rows_c[0], rows_c[1], rows_c[L - 1], rows_n[0], rows_s[0], std::size_t{0});
  for (std::size_t x = 1; x + 1 < L; ++x)
    op(rows_c[x], rows_c[x + 1], rows_c[x - 1], rows_n[x], rows_s[x], x);
  op(rows_c[L - 1], rows_c[0], rows_c[L - 2], rows_n[L - 1], rows_s[L - 1], L - 1);
}

// Row y's "north" neighbour is row y+1 and "south" is row y-1 (periodic).
template <class RowOp>
void for_rows_parallel(std::span<const double> in, std::size_t L, RowOp&& row_op) {
  const long n = static_cast<long>(L);
#pragma omp parallel for schedule(static)
  for (long y = 0; y < n; ++y) {
    const std::size_t yy = static_cast<std::size_t>(y);
    const std::size_t yn = (yy + 1 == L) ? 0 : yy + 1;
    const std::size_t ys = (yy == 0) ? L - 1 : yy - 1;
    row_op(yy, in.data() + yy * L, in.data() + yn * L, in.data() + ys * L);
  }
}

template <class SiteOp>
void for_sites_reference(std::span<const double> in, std::size_t L, SiteOp&& op) {
  for (std::size_t y = 0; y < L; ++y) {
    for (std::size_t x = 0; x < L; ++x) {
      const double c = in[y * L + x];
      const double e = in[y * L + (x + 1) % L];
      const double w = in[y * L + (x + L - 1) % L];
      const double n = in[((y + 1) % L) * L + x];
      const double s = in[((y + L - 1) % L) * L + x];
      op(c, e, w, n, s, y * L + x);
    }
  }
}

}  // namespace

void laplacian_reference(std::span<const double> in, std::span<double> out, StencilGeometry g) {
  check_sizes(in, out, g);
  const Constants k = constants_for(g);
  for_sites_reference(in, g.side, [&](double c, double e, double w, double n, double s, std::size_t i) {
    out[i] = site_laplacian(c, e, w, n, s, k);
  });
}

void laplacian(std::span<const double> in, std::span<double> out, StencilGeometry g) {
  check_sizes(in, out, g);
  const Constants k = constants_for(g);
  const std::size_t L = g.side;
  for_rows_parallel(in, L, [&](std::size_t y, const double* rc, const double* rn, const double* rs) {
    double* o = out.data() + y * L;
    for_row(rc, rn, rs, L, [&](double c, double e, double w, double n, double s, std::size_t x) {
      o[x] = site_laplacian(c, e, w, n, s, k);
    });
  });
}

void grad_squared_reference(std::span<const double> in, std::span<double> out, StencilGeometry g,
                            Nonlinearity nl) {
  check_sizes(in, out, g);
  const Constants k = constants_for(g);
  for_sites_reference(in, g.side, [&](double c, double e, double w, double n, double s, std::size_t i) {
    out[i] = site_grad2(c, e, w, n, s, k, nl);
  });
}

void grad_squared(std::span<const double> in, std::span<double> out, StencilGeometry g, Nonlinearity nl) {
  check_sizes(in, out, g);
  const Constants k = constants_for(g);
  const std::size_t L = g.side;
  for_rows_parallel(in, L, [&](std::size_t y, const double* rc, const double* rn, const double* rs) {
    double* o = out.data() + y * L;
    for_row(rc, rn, rs, L, [&](double c, double e, double w, double n, double s, std::size_t x) {
      o[x] = site_grad2(c, e, w, n, s, k, nl);
    });
  });
}

bool kpz_update_reference(std::span<const double> in, std::span<const double> increment,
                          std::span<double> out, StencilGeometry g, const KpzCoefficients& co) {
  check_sizes(in, out, g);
  if (increment.size() != in.size()) throw_error(ErrorKind::invalid_lattice, "noise size mismatch");
  const Constants k = constants_for(g);
  bool ok = true;
  for_sites_reference(in, g.side, [&](double c, double e, double w, double n, double s, std::size_t i) {
    out[i] = site_kpz(c, e, w, n, s, increment[i], k, co);
    ok = ok && finite_value(out[i]);
  });
  return ok;
}

namespace {

template <Nonlinearity NL>
bool kpz_update_blocked(std::span<const double> in, std::span<const double> increment, std::span<double> out,
                        std::size_t L, const Constants& k, KpzCoefficients co) {
  co.nonlinearity = NL;  // lets the compiler drop the stencil branch
  int ok = 1;
  const long n = static_cast<long>(L);
#pragma omp parallel for schedule(static) reduction(&& : ok)
  for (long y = 0; y < n; ++y) {
    const std::size_t yy = static_cast<std::size_t>(y);
    const std::size_t yn = (yy + 1 == L) ? 0 : yy + 1;
    const std::size_t ys = (yy == 0) ? L - 1 : yy - 1;
    const double* rc = in.data() + yy * L;
    const double* rn = in.data() + yn * L;
    const double* rs = in.data() + ys * L;
    const double* inc = increment.data() + yy * L;
    double* o = out.data() + yy * L;
    for_row(rc, rn, rs, L, [&](double c, double e, double w, double nn, double s, std::size_t x) {
      o[x] = site_kpz(c, e, w, nn, s, inc[x], k, co);
    });
    int row_ok = 1;
    for (std::size_t x = 0; x < L; ++x) row_ok &= static_cast<int>(finite_value(o[x]));
    ok = ok && row_ok;
  }
  return ok != 0;
}

}  // namespace

bool kpz_update(std::span<const double> in, std::span<const double> increment, std::span<double> out,
                StencilGeometry g, const KpzCoefficients& co) {
  check_sizes(in, out, g);
  if (increment.size() != in.size()) throw_error(ErrorKind::invalid_lattice, "noise size mismatch");
  const Constants k = constants_for(g);
  if (co.nonlinearity == Nonlinearity::central)
    return kpz_update_blocked<Nonlinearity::central>(in, increment, out, g.side, k, co);
  return kpz_update_blocked<Nonlinearity::lam_shin>(in, increment, out, g.side, k, co);
}

}  // namespace kpz2d::kernels
