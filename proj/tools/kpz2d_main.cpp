#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kpz2d/cli.hpp"

using kpz2d::io::Json;
namespace cli = kpz2d::cli;

int main(int argc, char** argv) {
  CLI::App app{"KPZ / driven-condensate simulation and analysis toolkit"};
  std::string config_path, output, recipe;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  app.add_option("--config", config_path, "JSON run configuration (with --recipe: per-step overrides)");
  app.add_option("--output", output, "Output directory (overrides output_dir)");
  app.add_option("--seed", seed, "Master seed (overrides seed)");
  app.add_option("--workers", workers, "Worker threads (overrides workers)")->check(CLI::PositiveNumber);
  app.add_option("--recipe", recipe, "Reproduction recipe")->check(CLI::IsMember(cli::recipe_names()));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::exit_code::config;
  }

  Json doc = Json::object();
  if (!config_path.empty()) {
    try {
      doc = kpz2d::io::read_json(config_path);
    } catch (const kpz2d::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return cli::exit_code_for(e.kind());
    }
  }

  cli::RunOutcome outcome;
  if (!recipe.empty()) {
    if (output.empty()) {
      std::cerr << "error: --recipe needs --output\n";
      return cli::exit_code::config;
    }
    outcome = cli::run_recipe(recipe, output, seed.value_or(0), workers.value_or(1), doc);
  } else {
    if (config_path.empty()) {
      std::cerr << "error: --config is required without --recipe\n";
      return cli::exit_code::config;
    }
    if (doc.is_object()) {
      if (!output.empty()) doc["output_dir"] = output;
      if (seed) doc["seed"] = *seed;
      if (workers) doc["workers"] = *workers;
    }
    outcome = cli::run_document(doc);
  }
  if (outcome.exit_code != cli::exit_code::ok) {
    std::cerr << "error: " << outcome.message << '\n';
  } else {
    for (const auto& r : outcome.results) std::cout << r.string() << '\n';
  }
  return outcome.exit_code;
}
