#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace loft {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;  // overrides the config's base seed
  std::filesystem::path out = "loft_out";
  bool svg = false;
  std::size_t threads = 1;

  // support
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> grad;
  std::string method = "skewgrad";
  std::size_t r = 4;

  // check: negative-control hook
  bool corrupt_support = false;
};

// Each command writes its data files and manifest.json under opts.out and
// returns an exit code. Errors propagate as loft::Error; run_command maps them
// onto exit codes.
int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_support(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_probe(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_recover(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Dispatches by name and converts exceptions into "error: ..." on err plus
/// the matching exit code.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Parses LOFT_KIT_THREADS; unset or invalid means 1.
std::size_t threads_from_env();

}  // namespace loft
