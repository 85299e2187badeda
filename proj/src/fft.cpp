#include "kpz2d/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "kpz2d/errors.hpp"

namespace kpz2d {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft2d::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Fft2d::Fft2d(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), plans_(std::make_unique<Plans>()) {
  if (nx == 0 || ny == 0) throw_error(ErrorKind::invalid_lattice, "FFT grid must be non-empty");
  std::vector<std::complex<double>> scratch(nx * ny);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf, buf, FFTW_FORWARD, flags);
  plans_->backward = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), buf, buf, FFTW_BACKWARD, flags);
  if (!plans_->forward || !plans_->backward) throw_error(ErrorKind::io, "FFTW planning failed");
}

Fft2d::~Fft2d() = default;
Fft2d::Fft2d(Fft2d&&) noexcept = default;
Fft2d& Fft2d::operator=(Fft2d&&) noexcept = default;

void Fft2d::forward(std::span<std::complex<double>> data) const {
  if (data.size() != size()) throw_error(ErrorKind::invalid_lattice, "FFT buffer size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->forward, p, p);
}

void Fft2d::inverse(std::span<std::complex<double>> data) const {
  if (data.size() != size()) throw_error(ErrorKind::invalid_lattice, "FFT buffer size mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->backward, p, p);
}

}  // namespace kpz2d
