#pragma once

#include <span>
#include <string>
#include <vector>

#include "kpz2d/correlation.hpp"
#include "kpz2d/gpe.hpp"
#include "kpz2d/lattice.hpp"

namespace kpz2d {

/// Spatial variance: mean over sites of (theta - spatial mean)^2.
double roughness(const PhaseField& field);

/// Per-trajectory roughness at each snapshot.
struct RoughnessReducer {
  std::vector<double> times;
  std::vector<double> values;
  void on_snapshot(std::size_t, const PhaseField& f) {
    times.push_back(f.time());
    values.push_back(roughness(f));
  }
};

/// Streaming adapters feeding snapshots into pair accumulators.
struct PhasePairReducer {
  RealPairAccumulator pairs;
  void on_snapshot(std::size_t, const PhaseField& f) { pairs.add(f); }
};
struct CondensatePairReducer {
  ComplexPairAccumulator pairs;
  void on_snapshot(std::size_t, const CondensateState& s) { pairs.add(s.psi); }
};

struct MeanWithError {
  double mean = 0.0;
  double stderr_ = 0.0;  ///< standard error of the mean (0 for a single sample)
};
MeanWithError mean_with_error(std::span<const double> samples);

/// Element-wise mean and standard error over equal-length series.
std::vector<MeanWithError> ensemble_mean(std::span<const std::vector<double>> series);

enum class ExponentQuality { interior, endpoint, masked };
std::string to_string(ExponentQuality q);

struct ExponentPoint {
  double axis_value = 0.0;
  double exponent = 0.0;
  double stderr_ = 0.0;
  ExponentQuality quality = ExponentQuality::interior;
};
using ExponentSeries = std::vector<ExponentPoint>;

/// d log y / d log x on a (possibly non-uniform) grid, x > 0. Interior points
/// use the second-order three-point stencil in log coordinates, endpoints a
/// one-sided two-point stencil. Points with y <= 0 are masked and split the
/// series into independent segments. Errors assume independent y errors.
ExponentSeries log_slope(std::span<const double> x, std::span<const double> y, std::span<const double> y_err);

/// beta~(dt) = (1/2) d log C(0, dt) / d log dt along the dr = 0 row,
/// skipping dt = 0. Throws insufficient_data with fewer than 3 points.
ExponentSeries growth_exponent_series(const CorrelationMap& map);
/// chi~(dr) = (1/2) d log C(dr, 0) / d log dr along the dt = 0 column.
ExponentSeries roughness_exponent_series(const CorrelationMap& map);

struct RunningExponents {
  ExponentSeries beta;  ///< empty if the map has fewer than 3 usable dt > 0 points
  ExponentSeries chi;   ///< empty if the map has fewer than 3 usable dr > 0 points
};
/// Both series where available; throws insufficient_data if neither is.
RunningExponents running_exponents(const CorrelationMap& map);

struct Plateau {
  double value = 0.0;  ///< inverse-variance weighted mean over the window
  double stderr_ = 0.0;
  double spread = 0.0;  ///< max - min of the exponent inside the window
  double axis_min = 0.0;
  double axis_max = 0.0;
  std::size_t n_points = 0;
};

/// The widest window of consecutive unmasked points (at least `min_decades`
/// of the axis) whose exponents are consistent with a constant: chi^2 about
/// the inverse-variance mean within the 95% quantile. Ties go to the later
/// window. The stderr is the weighted-mean error scaled by sqrt(chi^2 / dof)
/// when that exceeds 1.
/// Throws insufficient_data if no such window exists.
Plateau find_plateau(const ExponentSeries& series, double min_decades = 1.0);

/// -log|g1| with stderr / |g1|; cells with |g1| <= stderr or |g1| == 0 are
/// flagged unusable.
CorrelationMap minus_log_g1(const CorrelationMap& coherence);

}  // namespace kpz2d
