#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "kpz2d/lattice.hpp"

namespace kpz2d {

/// Reproducible Gaussian/Poisson source for one trajectory.
///
/// The engine state is derived from (master_seed, stream_id) through
/// std::seed_seq, so equal pairs give identical sequences and distinct stream
/// ids give decorrelated ones. `counter()` is the number of variates drawn.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  double standard_normal();
  /// Fills `out` with i.i.d. N(0, stddev^2) samples.
  void fill_normal(std::span<double> out, double stddev);
  double uniform();
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// i.i.d. Gaussian field with the given per-site variance. Throws parameter
/// error for variance <= 0.
PhaseField sample_noise_field(NoiseStream& stream, std::size_t side, double variance,
                              double spacing = 1.0);

}  // namespace kpz2d
