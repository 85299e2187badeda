#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kpz2d/errors.hpp"
#include "kpz2d/gpe.hpp"
#include "kpz2d/io.hpp"
#include "kpz2d/kpz.hpp"

namespace kpz2d::cli {

enum class Subcommand {
  simulate_kpz,
  simulate_gpe,
  analyze_correlations,
  tabulate_scaling,
  collapse_fit,
  finite_size,
  fringe_synthesize,
  fringe_demodulate,
  fringe_noise,
};
std::string to_string(Subcommand s);
std::optional<Subcommand> subcommand_from_string(const std::string& s);

/// Exit codes, fixed so shell pipelines can branch on the failure class.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;  ///< also parameter, domain and lattice errors
inline constexpr int blow_up = 3;
inline constexpr int insufficient_data = 4;
inline constexpr int fit_failure = 5;
inline constexpr int io = 6;
}  // namespace exit_code
int exit_code_for(ErrorKind kind);

struct RunConfig {
  Subcommand subcommand = Subcommand::simulate_kpz;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  io::Json parameters;  ///< normalized: every default written out

  io::Json to_json() const;
};

struct ConfigResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;  ///< all problems found, empty on success
};

/// Type-checks the document
///   {"subcommand", "output_dir", "seed", "workers" = 1, "parameters" = {}}
/// and the subcommand's parameter block, materializing every default.
ConfigResult validate_config(const io::Json& doc);

/// Parameter structs from a normalized block (as produced by validate_config).
KpzParams kpz_params(const RunConfig& cfg);
GpeParams gpe_params(const RunConfig& cfg);

struct RunOutcome {
  int exit_code = exit_code::ok;
  std::string message;
  std::vector<std::filesystem::path> results;
};

/// Writes manifest.json, runs the pipeline, writes the result files and
/// rewrites the manifest with status and timings. Failures produce
/// error.json and the matching exit code; nothing is thrown.
RunOutcome run(const RunConfig& cfg);

/// validate_config + run; invalid documents yield error.json (when an output
/// directory is known) and the config exit code.
RunOutcome run_document(const io::Json& doc);

std::vector<std::string> recipe_names();
/// Multi-step reproduction recipes, each step in its own subdirectory of
/// `output`. `overrides` maps step names to parameter objects merged over
/// the recipe defaults.
RunOutcome run_recipe(const std::string& name, const std::filesystem::path& output, std::uint64_t seed, int workers,
                      const io::Json& overrides = io::Json::object());

}  // namespace kpz2d::cli
