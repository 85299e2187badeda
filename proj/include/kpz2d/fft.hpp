#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace kpz2d {

/// Unnormalized 2D complex DFT on an nx-by-ny row-major grid (index y*nx + x),
/// backed by FFTW. Plans are created with FFTW_ESTIMATE so results do not
/// depend on timing measurements; execution is thread-safe.
///
/// forward:  F(k) = sum_p f(p) exp(-i k.p)
/// inverse:  f(p) = sum_k F(k) exp(+i k.p)   (no 1/N factor)
class Fft2d {
 public:
  Fft2d(std::size_t nx, std::size_t ny);
  ~Fft2d();
  Fft2d(Fft2d&&) noexcept;
  Fft2d& operator=(Fft2d&&) noexcept;
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return nx_ * ny_; }

  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  struct Plans;
  std::size_t nx_;
  std::size_t ny_;
  std::unique_ptr<Plans> plans_;
};

/// Signed integer frequency index for DFT bin m of an n-point transform,
/// in (-n/2, n/2].
inline long signed_frequency(std::size_t m, std::size_t n) {
  const long mm = static_cast<long>(m);
  const long nn = static_cast<long>(n);
  return (2 * mm > nn) ? mm - nn : mm;
}

}  // namespace kpz2d
