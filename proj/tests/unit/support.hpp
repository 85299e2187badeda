#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

#include "kpz2d/lattice.hpp"

namespace test {

inline kpz2d::PhaseField sine_field(std::size_t side, double spacing = 1.0, int mode = 1) {
  kpz2d::PhaseField f(side, spacing);
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x)
      f[f.index(x, y)] = std::sin(2.0 * std::numbers::pi * mode * static_cast<double>(x) / static_cast<double>(side));
  return f;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("kpz2d_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace test
