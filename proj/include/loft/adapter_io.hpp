#pragma once

#include <filesystem>
#include <vector>

#include "loft/adapter.hpp"

namespace loft {

// On-disk adapter layout: a JSON envelope
//   {"d_in", "d_out", "base_weight": "W0.csv",
//    "factors": [{"provenance", "kind", "r", "p": "factor0_P.csv",
//                 "e" | "t": "factor0_E.csv" | "factor0_T.csv"}]}
// next to the CSV files it names. Orthogonal factors store the full skew
// matrix E; free and fixed factors store the dense block T.

/// Writes adapter.json plus sibling CSVs into dir; returns the files written.
std::vector<std::filesystem::path> save_adapter(const std::filesystem::path& dir, const LoftAdapter& a);

LoftAdapter load_adapter(const std::filesystem::path& json_path);

}  // namespace loft
