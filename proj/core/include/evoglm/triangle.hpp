#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace evoglm {

enum class ClaimKind { incremental, cumulative };
enum class ClaimScale { raw, loss_ratio };

/// One line of business: an I x I grid of claims with an observation mask
/// and a premium (exposure) per accident year. Indices are 1-based.
class LineTriangle {
 public:
  LineTriangle() = default;
  explicit LineTriangle(int dim, std::string name = {});

  int dim() const noexcept { return dim_; }
  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  double value(int i, int j) const;
  bool observed(int i, int j) const;
  void set(int i, int j, double v);
  void mark_missing(int i, int j);

  double exposure(int i) const;
  bool has_exposure() const noexcept { return has_exposure_; }
  void set_exposure(int i, double premium);
  void set_exposures(const std::vector<double>& premiums);
  const std::vector<double>& exposures() const noexcept { return exposure_; }

  /// Number of observed cells in accident row i.
  int observed_in_row(int i) const;
  int observed_count() const;

 private:
  std::size_t index(int i, int j) const;

  int dim_ = 0;
  std::string name_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> exposure_;
  bool has_exposure_ = false;
};

/// N aligned triangles of equal dimension.
class TrianglePanel {
 public:
  TrianglePanel() = default;
  TrianglePanel(std::vector<LineTriangle> lines, ClaimKind kind, ClaimScale scale);

  int lines() const noexcept { return static_cast<int>(lines_.size()); }
  int dim() const noexcept { return lines_.empty() ? 0 : lines_.front().dim(); }
  ClaimKind kind() const noexcept { return kind_; }
  ClaimScale scale() const noexcept { return scale_; }

  const LineTriangle& line(int n) const;  // 0-based line index
  LineTriangle& line(int n);
  const std::vector<LineTriangle>& all_lines() const noexcept { return lines_; }

  double value(int n, int i, int j) const { return line(n).value(i, j); }
  bool observed(int n, int i, int j) const { return line(n).observed(i, j); }

  /// Observed cells in accident row i summed over lines.
  int observed_in_row(int i) const;

  void validate() const;

 private:
  std::vector<LineTriangle> lines_;
  ClaimKind kind_ = ClaimKind::incremental;
  ClaimScale scale_ = ClaimScale::raw;
};

struct IngestConfig {
  ClaimKind kind = ClaimKind::incremental;
  bool premium_column = true;
  /// Convert to incremental after reading (no-op for incremental input).
  bool to_incremental = true;
  /// Divide every cell by its accident-year premium.
  bool loss_ratios = false;
};

/// Calendar index t = i + j - 1.
constexpr int calendar_index(int i, int j) noexcept { return i + j - 1; }

/// Reads one triangle CSV: row = accident year, first column = premium
/// (when configured), remaining columns = development years. A blank cell
/// inside the upper triangle is a missing value; cells below the latest
/// diagonal must be blank. An optional non-numeric header row is skipped.
LineTriangle read_triangle_csv(const std::filesystem::path& path, bool premium_column = true);

/// Writes a triangle in the layout read_triangle_csv accepts, with a header
/// row and shortest round-trip decimal formatting.
void write_triangle_csv(const LineTriangle& line, const std::filesystem::path& path);

TrianglePanel load_panel(const std::vector<std::filesystem::path>& paths,
                         const IngestConfig& config);

TrianglePanel to_incremental(const TrianglePanel& panel);
TrianglePanel to_cumulative(const TrianglePanel& panel);
TrianglePanel to_loss_ratios(const TrianglePanel& panel);
/// Inverse of to_loss_ratios.
TrianglePanel to_raw_amounts(const TrianglePanel& panel);

}  // namespace evoglm
