#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loft/adapter.hpp"
#include "loft/harness.hpp"
#include "loft/recoveries.hpp"

namespace loft {

struct SupportEntry {
  Provenance method = Provenance::skewgrad;
  std::size_t r = 4;
};

struct SweepSection {
  SweepAxis axis = SweepAxis::rank;
  std::vector<double> grid;
  std::vector<Provenance> methods;  // defaults to the methods under "supports"
  std::optional<std::size_t> r;     // defaults to the first support's r
  std::string label = "planted";
};

struct RecoverEntry {
  RecoveryConfig recovery;
  std::size_t d_out = 8;
  std::size_t d_in = 8;
};

/// Parsed run configuration. Every section is optional; defaults match the
/// library defaults.
///
///   {"seed": 0, "num_seeds": 1,
///    "task": {...}, "supports": [{"method": "skewgrad", "r": 4}],
///    "transform": "orthogonal", "train": {...}, "calibration": {...},
///    "sweep": {...}, "recover": [{...}]}
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t num_seeds = 1;
  TaskConfig task;
  std::vector<SupportEntry> supports{SupportEntry{}};
  TransformKind transform = TransformKind::orthogonal;
  TrainConfig train;
  CalibrationConfig calibration;
  std::optional<SweepSection> sweep;
  std::vector<RecoverEntry> recover;

  /// seed, seed + 1, ..., seed + num_seeds − 1.
  std::vector<std::uint64_t> seeds() const;
};

/// Parses and validates a JSON document. All schema violations are collected
/// and reported together in one ConfigError, one "path: problem" per line.
RunConfig parse_run_config(std::string_view json_text, const std::string& source_name = "<config>");

struct LoadedConfig {
  RunConfig config;
  std::string bytes;  // raw file contents, the input of the config hash
};

LoadedConfig load_run_config(const std::filesystem::path& path);

}  // namespace loft
