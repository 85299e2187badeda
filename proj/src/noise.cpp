#include "kpz2d/noise.hpp"

#include <cmath>
#include <string>

#include <boost/random/poisson_distribution.hpp>

namespace kpz2d {

namespace {

boost::random::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream_id) {
  // Fixed tag word keeps this family of streams apart from other seed_seq users.
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                    0x6b707a32u};
  return boost::random::mt19937_64(seq);
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id), engine_(seeded_engine(master_seed, stream_id)) {}

double NoiseStream::standard_normal() {
  ++counter_;
  return normal_(engine_);
}

void NoiseStream::fill_normal(std::span<double> out, double stddev) {
  for (double& v : out) v = stddev * normal_(engine_);
  counter_ += out.size();
}

double NoiseStream::uniform() {
  ++counter_;
  return std::generate_canonical<double, 53>(engine_);
}

std::uint64_t NoiseStream::poisson(double mean) {
  ++counter_;
  if (mean <= 0.0) return 0;
  boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
  return dist(engine_);
}

PhaseField sample_noise_field(NoiseStream& stream, std::size_t side, double variance, double spacing) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw_error(ErrorKind::parameter, "noise variance must be positive, got " + std::to_string(variance));
  PhaseField field(side, spacing);
  stream.fill_normal(field.values(), std::sqrt(variance));
  return field;
}

}  // namespace kpz2d
