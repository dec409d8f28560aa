#include "evoglm/triangle.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

#include "evoglm/error.hpp"
#include "format.hpp"

namespace evoglm {

LineTriangle::LineTriangle(int dim, std::string name)
    : dim_(dim),
      name_(std::move(name)),
      values_(static_cast<std::size_t>(dim) * dim, 0.0),
      mask_(static_cast<std::size_t>(dim) * dim, 0),
      exposure_(static_cast<std::size_t>(dim), 1.0) {
  if (dim < 1) throw InputError("triangle dimension must be at least 1");
}

std::size_t LineTriangle::index(int i, int j) const {
  if (i < 1 || i > dim_ || j < 1 || j > dim_) {
    throw InputError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                     ") outside a " + std::to_string(dim_) + "x" + std::to_string(dim_) +
                     " triangle");
  }
  return static_cast<std::size_t>(i - 1) * dim_ + (j - 1);
}

double LineTriangle::value(int i, int j) const { return values_[index(i, j)]; }

bool LineTriangle::observed(int i, int j) const {
  if (i < 1 || i > dim_ || j < 1 || j > dim_) return false;
  return mask_[index(i, j)] != 0;
}

void LineTriangle::set(int i, int j, double v) {
  if (calendar_index(i, j) > dim_) {
    throw InputError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                     ") lies below the latest diagonal");
  }
  if (!std::isfinite(v)) throw InputError("non-finite cell value");
  const auto k = index(i, j);
  values_[k] = v;
  mask_[k] = 1;
}

void LineTriangle::mark_missing(int i, int j) {
  const auto k = index(i, j);
  values_[k] = 0.0;
  mask_[k] = 0;
}

double LineTriangle::exposure(int i) const {
  if (i < 1 || i > dim_) throw InputError("accident index out of range");
  return exposure_[static_cast<std::size_t>(i - 1)];
}

void LineTriangle::set_exposure(int i, double premium) {
  if (i < 1 || i > dim_) throw InputError("accident index out of range");
  if (!(premium > 0.0) || !std::isfinite(premium)) {
    throw InputError("nonpositive exposure for accident year " + std::to_string(i));
  }
  exposure_[static_cast<std::size_t>(i - 1)] = premium;
  has_exposure_ = true;
}

void LineTriangle::set_exposures(const std::vector<double>& premiums) {
  if (static_cast<int>(premiums.size()) != dim_) throw InputError("exposure vector length mismatch");
  for (int i = 1; i <= dim_; ++i) set_exposure(i, premiums[static_cast<std::size_t>(i - 1)]);
}

int LineTriangle::observed_in_row(int i) const {
  int count = 0;
  for (int j = 1; j <= dim_; ++j) count += observed(i, j) ? 1 : 0;
  return count;
}

int LineTriangle::observed_count() const {
  int count = 0;
  for (auto m : mask_) count += m;
  return count;
}

TrianglePanel::TrianglePanel(std::vector<LineTriangle> lines, ClaimKind kind, ClaimScale scale)
    : lines_(std::move(lines)), kind_(kind), scale_(scale) {
  validate();
}

const LineTriangle& TrianglePanel::line(int n) const {
  if (n < 0 || n >= lines()) throw InputError("line index out of range");
  return lines_[static_cast<std::size_t>(n)];
}

LineTriangle& TrianglePanel::line(int n) {
  if (n < 0 || n >= lines()) throw InputError("line index out of range");
  return lines_[static_cast<std::size_t>(n)];
}

int TrianglePanel::observed_in_row(int i) const {
  int count = 0;
  for (const auto& l : lines_) count += l.observed_in_row(i);
  return count;
}

void TrianglePanel::validate() const {
  if (lines_.empty()) throw InputError("panel has no lines");
  const int d = lines_.front().dim();
  for (const auto& l : lines_) {
    if (l.dim() != d) throw InputError("dimension mismatch across lines");
    for (double e : l.exposures()) {
      if (!(e > 0.0)) throw InputError("nonpositive exposure");
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

// Accepts thousands separators inside quoted fields ("13,714").
bool parse_number(std::string_view text, double& out) {
  std::string cleaned;
  for (char c : trim(text)) {
    if (c != ',' && c != '_') cleaned.push_back(c);
  }
  if (cleaned.empty()) return false;
  const char* first = cleaned.data();
  const char* last = first + cleaned.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

LineTriangle read_triangle_csv(const std::filesystem::path& path, bool premium_column) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string raw;
  while (std::getline(in, raw)) {
    if (trim(raw).empty()) continue;
    rows.push_back(split_csv(raw));
  }
  if (rows.empty()) throw InputError("dimension mismatch/empty: " + path.string());

  // Header row: its first non-empty cell is not numeric.
  {
    double probe = 0.0;
    const auto& first = rows.front();
    const bool numeric = !first.empty() && parse_number(first.front(), probe);
    if (!numeric) rows.erase(rows.begin());
  }
  if (rows.empty()) throw InputError("dimension mismatch/empty: " + path.string());

  const int dim = static_cast<int>(rows.size());
  const std::size_t offset = premium_column ? 1 : 0;
  LineTriangle tri(dim, path.stem().string());
  for (int i = 1; i <= dim; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i - 1)];
    if (row.size() > static_cast<std::size_t>(dim) + offset) {
      // Trailing empty fields are tolerated.
      for (std::size_t k = dim + offset; k < row.size(); ++k) {
        if (!trim(row[k]).empty()) throw InputError("dimension mismatch in " + path.string());
      }
    }
    if (premium_column) {
      double premium = 0.0;
      if (row.empty() || !parse_number(row[0], premium)) {
        throw InputError("missing or non-numeric premium in row " + std::to_string(i) + " of " +
                         path.string());
      }
      tri.set_exposure(i, premium);
    }
    for (int j = 1; j <= dim; ++j) {
      const std::size_t k = offset + static_cast<std::size_t>(j - 1);
      const std::string_view cell = k < row.size() ? trim(row[k]) : std::string_view{};
      if (cell.empty()) continue;
      double v = 0.0;
      if (!parse_number(cell, v)) {
        throw InputError("non-numeric cell (" + std::to_string(i) + "," + std::to_string(j) +
                         ") in " + path.string());
      }
      if (calendar_index(i, j) > dim) {
        throw InputError("value below the latest diagonal at (" + std::to_string(i) + "," +
                         std::to_string(j) + ") in " + path.string());
      }
      tri.set(i, j, v);
    }
  }
  return tri;
}

void write_triangle_csv(const LineTriangle& line, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  const int dim = line.dim();
  out << "premium";
  for (int j = 1; j <= dim; ++j) out << ',' << j;
  out << '\n';
  for (int i = 1; i <= dim; ++i) {
    out << format_double(line.exposure(i));
    for (int j = 1; j <= dim; ++j) {
      out << ',';
      if (line.observed(i, j)) out << format_double(line.value(i, j));
    }
    out << '\n';
  }
}

TrianglePanel load_panel(const std::vector<std::filesystem::path>& paths,
                         const IngestConfig& config) {
  if (paths.empty()) throw InputError("no triangle files given");
  std::vector<LineTriangle> lines;
  lines.reserve(paths.size());
  for (const auto& p : paths) lines.push_back(read_triangle_csv(p, config.premium_column));
  if (config.loss_ratios && !config.premium_column) {
    throw InputError("loss-ratio scaling requires a premium column");
  }
  TrianglePanel panel(std::move(lines), config.kind, ClaimScale::raw);
  if (config.kind == ClaimKind::cumulative && config.to_incremental) panel = to_incremental(panel);
  if (config.loss_ratios) panel = to_loss_ratios(panel);
  return panel;
}

TrianglePanel to_incremental(const TrianglePanel& panel) {
  if (panel.kind() != ClaimKind::cumulative) throw InputError("panel is not cumulative");
  std::vector<LineTriangle> out;
  for (const auto& l : panel.all_lines()) {
    LineTriangle inc = l;
    const int d = l.dim();
    for (int i = 1; i <= d; ++i) {
      for (int j = 1; j <= d - i + 1; ++j) {
        const bool have = l.observed(i, j) && (j == 1 || l.observed(i, j - 1));
        if (!have) {
          inc.mark_missing(i, j);
          continue;
        }
        inc.set(i, j, l.value(i, j) - (j == 1 ? 0.0 : l.value(i, j - 1)));
      }
    }
    out.push_back(std::move(inc));
  }
  return TrianglePanel(std::move(out), ClaimKind::incremental, panel.scale());
}

TrianglePanel to_cumulative(const TrianglePanel& panel) {
  if (panel.kind() != ClaimKind::incremental) throw InputError("panel is not incremental");
  std::vector<LineTriangle> out;
  for (const auto& l : panel.all_lines()) {
    LineTriangle cum = l;
    const int d = l.dim();
    for (int i = 1; i <= d; ++i) {
      double running = 0.0;
      bool intact = true;
      for (int j = 1; j <= d - i + 1; ++j) {
        intact = intact && l.observed(i, j);
        if (!intact) {
          cum.mark_missing(i, j);
          continue;
        }
        running += l.value(i, j);
        cum.set(i, j, running);
      }
    }
    out.push_back(std::move(cum));
  }
  return TrianglePanel(std::move(out), ClaimKind::cumulative, panel.scale());
}

TrianglePanel to_loss_ratios(const TrianglePanel& panel) {
  if (panel.scale() != ClaimScale::raw) throw InputError("panel is already in loss ratios");
  std::vector<LineTriangle> out;
  for (const auto& l : panel.all_lines()) {
    if (!l.has_exposure()) throw InputError("missing exposure for line " + l.name());
    LineTriangle scaled = l;
    for (int i = 1; i <= l.dim(); ++i) {
      for (int j = 1; j <= l.dim() - i + 1; ++j) {
        if (l.observed(i, j)) scaled.set(i, j, l.value(i, j) / l.exposure(i));
      }
    }
    out.push_back(std::move(scaled));
  }
  return TrianglePanel(std::move(out), panel.kind(), ClaimScale::loss_ratio);
}

TrianglePanel to_raw_amounts(const TrianglePanel& panel) {
  if (panel.scale() != ClaimScale::loss_ratio) throw InputError("panel is not in loss ratios");
  std::vector<LineTriangle> out;
  for (const auto& l : panel.all_lines()) {
    LineTriangle raw = l;
    for (int i = 1; i <= l.dim(); ++i) {
      for (int j = 1; j <= l.dim() - i + 1; ++j) {
        if (l.observed(i, j)) raw.set(i, j, l.value(i, j) * l.exposure(i));
      }
    }
    out.push_back(std::move(raw));
  }
  return TrianglePanel(std::move(out), panel.kind(), ClaimScale::raw);
}

}  // namespace evoglm
