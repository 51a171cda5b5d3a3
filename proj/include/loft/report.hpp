#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace loft {

/// Tabular output with a fixed header. Cells are written verbatim, so callers
/// format numbers with format_double.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

std::string format_csv(const CsvTable& t);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_csv(const std::filesystem::path& path, const CsvTable& t);

// Fixed column schemas.
inline const std::vector<std::string> kProbeColumns = {"step", "loss"};
inline const std::vector<std::string> kDynamicsColumns = {"step", "train_loss", "eval_metric"};
inline const std::vector<std::string> kSweepColumns = {"axis", "value", "method", "seed", "metric", "rho", "flagged"};
inline const std::vector<std::string> kSweepSummaryColumns = {"task", "value", "method", "mean", "std", "count"};
inline const std::vector<std::string> kRecoverColumns = {"method", "residual", "pass"};

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line plot. Non-finite points break the line. Output depends
/// only on the inputs.
std::string render_line_plot_svg(std::string_view title, std::string_view x_label, std::string_view y_label,
                                 const std::vector<PlotSeries>& series);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string started_utc;
  std::string finished_utc;
  std::string tool_version;
  std::vector<std::string> outputs;  // paths relative to the output directory
};

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string utc_timestamp();

/// Writes manifest.json into dir and returns its path.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& m);

}  // namespace loft
