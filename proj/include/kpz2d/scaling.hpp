#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <math.h>  // pchip.hpp (Boost 1.74) calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>

#include "kpz2d/correlation.hpp"
#include "kpz2d/errors.hpp"

namespace kpz2d {

/// Closed ranges of the (dr, dt) cells used for tabulation or fitting.
struct ScalingWindow {
  double dr_min = 0.0;
  double dr_max = 1e300;
  double dt_min = 0.0;
  double dt_max = 1e300;
  bool contains(double dr, double dt) const { return dr >= dr_min && dr <= dr_max && dt >= dt_min && dt <= dt_max; }
};

struct TableProvenance {
  std::string source;
  double beta = 0.0;
  double chi = 0.0;
  double amplitude = 1.0;  ///< A0 from the dr = 0 axis
  ScalingWindow window;
  std::size_t n_points = 0;
};

/// Tabulated universal scaling function C(y) with C(0) = 1, non-decreasing.
///
/// Nodes y_1 < ... < y_m (m >= 4) are interpolated by PCHIP in
/// (log y, log C). Below y_1, log C = log C(y_1) (y / y_1)^(2 chi) so C -> 1
/// at y -> 0; above y_m the fitted tail power law y^tail_slope continues.
class ScalingFunctionTable {
 public:
  ScalingFunctionTable() = default;
  /// Nodes without the y = 0 anchor; values must be >= 1 and non-decreasing.
  static ScalingFunctionTable from_nodes(std::vector<double> y, std::vector<double> values,
                                         std::vector<std::size_t> counts, TableProvenance provenance);

  /// Node abscissae and values including the y = 0 anchor at index 0.
  std::vector<double> y_grid() const;
  std::vector<double> value_grid() const;
  const std::vector<double>& node_y() const noexcept { return y_; }
  const std::vector<double>& node_values() const noexcept { return c_; }
  const std::vector<std::size_t>& node_counts() const noexcept { return counts_; }
  const TableProvenance& provenance() const noexcept { return prov_; }
  /// Slope of log C against log y fitted over the upper third of the nodes.
  double tail_slope() const noexcept { return tail_slope_; }

  double operator()(double y) const;
  /// F(u) = log C(e^u) and its derivative.
  double log_value(double u) const;
  double log_derivative(double u) const;

 private:
  std::vector<double> y_, c_;
  std::vector<std::size_t> counts_;
  TableProvenance prov_;
  double tail_slope_ = 0.0;
  double small_y_power_ = 1.0;
  std::vector<double> u_, f_;
  std::optional<boost::math::interpolators::pchip<std::vector<double>>> interp_;  // over (u_, f_)
};

/// A0 = exp(mean over in-window dt > 0 of log C(0, dt) - 2 beta log dt).
double scaling_anchor_amplitude(const CorrelationMap& map, double beta, const ScalingWindow& window);

/// Maps in-window cells with dr, dt > 0 to y = dr dt^(-beta/chi),
/// c = C / (A0 dt^(2 beta)), bins them in log y (n_bins equal bins between the
/// extreme y), and makes the bin means non-decreasing by weighted isotonic
/// regression with a floor at the C(0) = 1 anchor. Node abscissae are the bin
/// centroids in log y. Fewer than 5 populated bins is insufficient data.
ScalingFunctionTable tabulate_scaling_function(const CorrelationMap& map, double beta, double chi,
                                               const ScalingWindow& window, std::size_t n_bins = 24,
                                               const std::string& source = "");

/// One data point of a collapse fit.
struct CollapsePoint {
  double dr = 0.0;
  double dt = 0.0;
  double value = 0.0;
  double value_err = 0.0;  ///< absolute standard error of value
  double dr_err = 0.0;     ///< absolute uncertainty of dr (bin width / sqrt(12) for binned maps)
};

/// Usable cells with dr, dt > 0 and value > 0 inside the window.
std::vector<CollapsePoint> collapse_points(const CorrelationMap& map, const ScalingWindow& window, double bin_width);

enum class FitMode { amplitudes_only, free_exponents, galilean_constrained };
std::string to_string(FitMode mode);
FitMode fit_mode_from_string(const std::string& s);

struct ScalingFit {
  FitMode mode = FitMode::free_exponents;
  double beta = 0.0;
  double chi = 0.0;
  double amplitude_a = 1.0;
  double amplitude_b = 1.0;
  /// Order (A, B, beta, chi); rows of held parameters are zero.
  std::array<std::array<double, 4>, 4> covariance{};
  std::vector<bool> excluded_mask;
  std::size_t n_iterations = 0;
  double residual_rms = 0.0;
  double cost = 0.0;  ///< sum of squared normalized residuals
  bool converged = false;

  double z() const { return chi / beta; }
  double stderr_of(std::size_t i) const;
};

struct FitOptions {
  FitMode mode = FitMode::free_exponents;
  /// Exponents held fixed (amplitudes_only) or used as the starting point.
  /// Defaults to the table's provenance exponents.
  std::optional<double> beta;
  std::optional<double> chi;
  std::size_t max_iterations = 500;
  /// Relative errors below this floor are raised to it.
  double min_relative_error = 1e-9;
};

/// Multi-start grid for log10 B: -2, -1.5, ..., 2.
std::vector<double> collapse_start_grid();

/// Weighted orthogonal-distance fit of
///   log(value dt^(-2 beta)) = log A + F(log(dr dt^(-beta/chi)) + log B)
/// with latent corrections to the log x coordinate, by Levenberg-Marquardt
/// on the joint system with the per-point corrections eliminated by a Schur
/// complement. Points with mask[i] set are skipped. Throws FitFailure.
ScalingFit odr_collapse_fit(std::span<const CollapsePoint> data, const ScalingFunctionTable& table,
                            const FitOptions& options = {}, const std::vector<bool>& mask = {});

class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, ScalingFit best) : Error(ErrorKind::fit_failure, what), best_(std::move(best)) {}
  const ScalingFit& best_iterate() const noexcept { return best_; }

 private:
  ScalingFit best_;
};

/// Signed normalized orthogonal residual of every point under `fit`
/// (sign of the vertical residual, magnitude of the full weighted distance
/// with the optimal x correction).
std::vector<double> orthogonal_residuals(std::span<const CollapsePoint> data, const ScalingFunctionTable& table,
                                         const ScalingFit& fit, double min_relative_error = 1e-9);

struct ExclusionResult {
  std::vector<bool> mask;
  ScalingFit fit;
  std::size_t n_iterations = 0;
};

/// Iterated exclusion of points with |residual| > threshold * sigma, sigma =
/// 1.4826 * MAD of all residuals (floored at 1e-6), refitting on survivors
/// until the mask repeats or 10 iterations. Excluding every point is an
/// insufficient-data error.
ExclusionResult sigma_exclusion(std::span<const CollapsePoint> data, const ScalingFunctionTable& table,
                                const ScalingFit& fit, const FitOptions& options = {}, double threshold = 3.0);

struct SaturationPoint {
  double side = 0.0;
  double w_sat = 0.0;
  double err = 0.0;
};
struct FiniteSizeResult {
  double two_chi = 0.0;
  double stderr_ = 0.0;
  double log_prefactor = 0.0;
};
/// Weighted least-squares slope of log W_sat against log L (weights from the
/// relative errors; unweighted with residual-scaled errors when all errors are 0).
FiniteSizeResult finite_size_chi(std::span<const SaturationPoint> points);

/// beta = chi / (2 - chi); domain error unless 0 < chi < 2.
double galilean_beta(double chi);
/// g = lambda^2 D / nu^3; domain error for nu <= 0.
double kpz_coupling(double nu, double lambda, double noise_strength);

}  // namespace kpz2d
