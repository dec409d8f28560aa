#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "evoglm/serialization.hpp"

namespace evoglm::cli {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Everything needed to re-run one command and check its outputs.
class RunRecord {
 public:
  RunRecord(std::string command, std::vector<std::string> argv);

  void input(const std::filesystem::path& path);
  void seed(const std::string& name, std::uint64_t value);
  void config(Json config) { config_ = std::move(config); }

  /// Writes manifest.json into `out` with digests of every other file there.
  void finish(const std::filesystem::path& out) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  Json seeds_ = Json::object();
  Json config_ = Json::object();
  std::chrono::steady_clock::time_point start_;
};

/// Digests of the files below `dir` (relative path -> sha256), skipping
/// manifest.json files, which carry timings.
std::vector<std::pair<std::string, std::string>> output_digests(const std::filesystem::path& dir);

}  // namespace evoglm::cli
