#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "evoglm/rng.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm::test {

// Fresh scratch directory under the system temp dir, one per test name.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("evoglm_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline LineTriangle random_triangle(int dim, std::uint64_t seed, double lo = 1.0, double hi = 100.0) {
  RandomStream rng(seed, {0});
  LineTriangle t(dim, "random");
  for (int i = 1; i <= dim; ++i) {
    t.set_exposure(i, 1000.0 + 100.0 * rng.uniform());
    for (int j = 1; j <= dim - i + 1; ++j) t.set(i, j, lo + (hi - lo) * rng.uniform());
  }
  return t;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(EVOGLM_TEST_FIXTURES) / name;
}

}  // namespace evoglm::test
