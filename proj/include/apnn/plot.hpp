#pragma once

// CSV tables and deterministic SVG charts for run artifacts.

#include <filesystem>
#include <string>
#include <vector>

namespace apnn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Column index; throws ConfigError("csv", ...) when missing.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
// Header plus rows, numbers at round-trip precision, LF line endings.
std::string format_csv(const CsvTable& table);

enum class PlotKind { kLoss, kError, kProfile, kField, kSweep };

PlotKind parse_plot_kind(const std::string& s);
// Header a table of this kind must have, e.g. "iter,total,residual,initial,boundary".
std::vector<std::string> expected_columns(PlotKind kind);

// Renders the chart. Throws ConfigError("csv", ...) listing expected and
// found columns when the table does not match the kind's schema.
//   loss, error: log-scaled y against iteration
//   profile:     prediction and reference polylines per output time
//   field:       prediction and reference heatmaps at the last output time
//   sweep:       relative error against epsilon, both axes logarithmic
std::string render_svg(const CsvTable& table, PlotKind kind);

}  // namespace apnn
