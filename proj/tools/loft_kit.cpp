#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "loft/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"loft_kit: low-rank orthogonal adapter toolkit"};
  app.require_subcommand(1, 1);

  loft::CommandOptions opts;
  std::string config, out, weights, grad;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed (overrides the config)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_flag("--svg", opts.svg, "also render an SVG plot");
  };

  auto* check = app.add_subcommand("check", "run the seeded property suites");
  common(check, false);
  check->add_flag("--corrupt-support", opts.corrupt_support, "negative control: inject non-orthonormal supports")
      ->group("");

  auto* support = app.add_subcommand("support", "build a support basis from weight and gradient CSVs");
  common(support, false);
  support->add_option("--weights", weights, "W0 as CSV")->required()->check(CLI::ExistingFile);
  support->add_option("--grad", grad, "calibration gradient G as CSV")->check(CLI::ExistingFile);
  support->add_option("--method", opts.method, "principal|gradsvd|skewgrad|random|coordinate")->capture_default_str();
  support->add_option("--r", opts.r, "support rank")->capture_default_str();

  for (const char* name : {"probe", "train", "sweep", "recover"}) {
    common(app.add_subcommand(name, std::string("run the ") + name + " protocol"), true);
  }

  out = opts.out.string();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : loft::kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  if (sub->get_option_no_throw("--config") && sub->count("--config")) opts.config = config;
  if (sub->count("--seed")) opts.seed = seed;
  if (!weights.empty()) opts.weights = weights;
  if (!grad.empty()) opts.grad = grad;
  opts.out = out;
  opts.threads = loft::threads_from_env();
  return loft::run_command(name, opts, std::cout, std::cerr);
}
