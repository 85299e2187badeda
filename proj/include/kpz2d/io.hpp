#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpz2d/correlation.hpp"
#include "kpz2d/interferometry.hpp"
#include "kpz2d/lattice.hpp"
#include "kpz2d/observables.hpp"
#include "kpz2d/scaling.hpp"

namespace kpz2d::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip text for a double ("%.17g"); non-finite as "nan"/"inf".
std::string format_double(double v);

/// Flat binary field: uint64 L, double a, double time, then L*L values
/// (complex fields interleave re, im), all little-endian.
void write_field_binary(const std::filesystem::path& path, const PhaseField& field);
void write_field_binary(const std::filesystem::path& path, const ComplexField& field);
PhaseField read_phase_field_binary(const std::filesystem::path& path);
ComplexField read_complex_field_binary(const std::filesystem::path& path);
/// CSV with header x,y,value (or x,y,re,im).
void write_field_csv(const std::filesystem::path& path, const PhaseField& field);
void write_field_csv(const std::filesystem::path& path, const ComplexField& field);

/// Flat binary image: uint64 W, uint64 H, then W*H little-endian doubles.
void write_image_binary(const std::filesystem::path& path, const Image& image);
Image read_image_binary(const std::filesystem::path& path);
/// CSV with header x,y,value.
void write_image_csv(const std::filesystem::path& path, const Image& image);
void write_complex_image_csv(const std::filesystem::path& path, const ComplexImage& image, const Mask& valid);

/// Coherence maps: dr,dt,re_g1,im_g1,abs_g1,stderr,n_samples. Connected and
/// -log|g1| maps: dr,dt,C (or minus_log_g1),stderr,n_samples. Missing or
/// unusable cells carry nan values.
void write_correlation_csv(const std::filesystem::path& path, const CorrelationMap& map);
CorrelationMap read_correlation_csv(const std::filesystem::path& path);

/// axis_value,exponent,stderr,quality_flag
void write_exponent_csv(const std::filesystem::path& path, const ExponentSeries& series);

/// y,C_of_y including the y = 0 anchor.
void write_table_csv(const std::filesystem::path& path, const ScalingFunctionTable& table);
Json table_to_json(const ScalingFunctionTable& table);
ScalingFunctionTable table_from_json(const Json& doc);

Json fit_to_json(const ScalingFit& fit);

/// x_rescaled,y_rescaled,err_x,err_y,excluded_flag,dr,dt with
/// x = B dr dt^(-beta/chi), y = value / (A dt^(2 beta)).
void write_collapse_csv(const std::filesystem::path& path, const std::vector<CollapsePoint>& data,
                        const ScalingFit& fit);

void write_json(const std::filesystem::path& path, const Json& doc);
Json read_json(const std::filesystem::path& path);

/// Whole-file read; io error if missing.
std::string read_text(const std::filesystem::path& path);

}  // namespace kpz2d::io
