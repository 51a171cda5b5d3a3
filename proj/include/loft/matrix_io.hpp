#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "loft/matrix.hpp"

namespace loft {

// CSV matrix files: one matrix row per line, comma separated, '.' decimal, no
// header. Values are written in shortest round-trip form, so write followed by
// read reproduces the matrix bit for bit.

Matrix parse_matrix_csv(std::string_view text, const std::string& source_name = "<string>");
Matrix read_matrix_csv(const std::filesystem::path& path);

std::string format_matrix_csv(const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace loft
