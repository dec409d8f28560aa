#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoglm/dual_kalman.hpp"
#include "evoglm/particle_filter.hpp"
#include "evoglm/simulator.hpp"
#include "evoglm/state_space.hpp"
#include "evoglm/triangle.hpp"

namespace evoglm {

using Json = nlohmann::json;

/// Parse errors name the offending field, e.g. "lines[1].phi: must be > 0".
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& value);

Json to_json(const ModelParams& params);
ModelParams model_params_from_json(const Json& j);

Json to_json(const FactorState& state);
FactorState factor_state_from_json(const Json& j);

Json to_json(const PriorSpec& prior);
/// Per-line gamma_mean/gamma_cov may be omitted; `has_gamma_prior` reports
/// whether every line supplied them.
PriorSpec prior_spec_from_json(const Json& j, bool* has_gamma_prior = nullptr);

Json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j);

Json to_json(const TrianglePanel& panel);
TrianglePanel panel_from_json(const Json& j);

Json to_json(const TruthRecord& truth);
TruthRecord truth_from_json(const Json& j);

/// Rectangular text table written as CSV. Numbers use the shortest decimal
/// form that round-trips, and NaN is written as NA.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add(std::vector<std::string> row);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  void write(const std::filesystem::path& path) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string num(double v);
std::string num(int v);

/// Reads a CSV written by CsvTable (no quoting).
CsvTable read_csv_table(const std::filesystem::path& path);

}  // namespace evoglm
