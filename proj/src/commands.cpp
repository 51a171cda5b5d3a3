#include "loft/commands.hpp"

#include <cstdlib>
#include <map>
#include <ostream>

#include <json.hpp>

#include "loft/adapter_io.hpp"
#include "loft/checks.hpp"
#include "loft/config.hpp"
#include "loft/error.hpp"
#include "loft/harness.hpp"
#include "loft/linalg.hpp"
#include "loft/matrix_io.hpp"
#include "loft/random.hpp"
#include "loft/recoveries.hpp"
#include "loft/report.hpp"
#include "loft/support.hpp"

namespace loft {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string fmt(double v) { return format_double(v); }

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

// Shared bookkeeping: resolved config, output directory and manifest.
class Run {
 public:
  Run(std::string command, const CommandOptions& opts) : opts_(opts) {
    manifest_.command = std::move(command);
    manifest_.tool_version = std::string(kToolVersion);
    manifest_.started_utc = utc_timestamp();
    std::string bytes;
    if (opts.config) {
      LoadedConfig loaded = load_run_config(*opts.config);
      config_ = std::move(loaded.config);
      bytes = std::move(loaded.bytes);
    }
    if (opts.seed) config_.seed = *opts.seed;
    manifest_.config_hash = hex64(fnv1a64(bytes));
    std::error_code ec;
    fs::create_directories(opts.out, ec);
    if (ec) throw IoError("cannot create output directory " + opts.out.string() + ": " + ec.message());
  }

  const RunConfig& config() const { return config_; }
  const CommandOptions& opts() const { return opts_; }
  void set_seeds(std::vector<std::uint64_t> s) { manifest_.seeds = std::move(s); }

  fs::path path(const std::string& name) {
    manifest_.outputs.push_back(name);
    return opts_.out / name;
  }

  void csv(const std::string& name, const CsvTable& t) { write_csv(path(name), t); }
  void json(const std::string& name, const ojson& j) { write_text_file(path(name), j.dump(2) + "\n"); }
  void svg(const std::string& name, const std::string& body) { write_text_file(path(name), body); }

  void adapter(const std::string& dir, const LoftAdapter& a) {
    for (const auto& p : save_adapter(opts_.out / dir, a)) {
      manifest_.outputs.push_back(fs::relative(p, opts_.out).generic_string());
    }
  }

  void finish() {
    manifest_.finished_utc = utc_timestamp();
    write_manifest(opts_.out, manifest_);
  }

 private:
  CommandOptions opts_;
  RunConfig config_;
  RunManifest manifest_;
};

std::string run_name(const std::string& prefix, Provenance m, std::uint64_t seed, const char* ext) {
  return prefix + "_" + to_string(m) + "_seed" + std::to_string(seed) + ext;
}

}  // namespace

std::size_t threads_from_env() {
  const char* v = std::getenv("LOFT_KIT_THREADS");
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<std::size_t>(n);
}

int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("check", opts);
  CheckOptions co;
  co.seed = run.config().seed;
  co.corrupt_support = opts.corrupt_support;
  run.set_seeds({co.seed});

  const auto results = run_all_checks(co);
  ojson arr = ojson::array();
  ojson failures = ojson::array();
  bool all_pass = true;
  for (const auto& r : results) {
    ojson j;
    j["suite"] = r.suite;
    j["trials"] = r.trials;
    j["max_residual"] = r.max_residual;
    j["tolerance"] = r.tolerance;
    if (r.satisfied) j["satisfied"] = *r.satisfied;
    j["pass"] = r.pass;
    arr.push_back(j);
    if (!r.pass) {
      all_pass = false;
      failures.push_back({{"suite", r.suite}, {"failing_instance", r.failing_instance}});
      err << "FAIL " << r.suite << ": " << r.failing_instance << "\n";
    }
  }
  run.json("check.json", arr);
  if (!all_pass) run.json("check_failures.json", failures);
  run.finish();
  out << arr.dump(2) << "\n";
  return all_pass ? kExitOk : kExitValidation;
}

int cmd_support(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  Run run("support", opts);
  if (!opts.weights) throw ConfigError("support: --weights is required");
  const Provenance method = provenance_from_string(opts.method);
  const Matrix w0 = read_matrix_csv(*opts.weights);
  std::optional<Matrix> g;
  if (opts.grad) {
    g = read_matrix_csv(*opts.grad);
    if (g->rows() != w0.rows() || g->cols() != w0.cols()) {
      throw ShapeError("support: " + opts.grad->string() + " is " + std::to_string(g->rows()) + "x" +
                       std::to_string(g->cols()) + " but " + opts.weights->string() + " is " +
                       std::to_string(w0.rows()) + "x" + std::to_string(w0.cols()));
    }
  }
  if (!g && (method == Provenance::skewgrad || method == Provenance::gradsvd)) {
    throw ConfigError(std::string("support: method '") + to_string(method) + "' requires --grad");
  }
  SupportRequest req;
  req.method = method;
  req.r = opts.r;
  req.seed = run.config().seed;
  run.set_seeds({req.seed});
  const SupportBasis support = make_support(req, w0, g ? &*g : nullptr);
  write_matrix_csv(run.path("P.csv"), support.p());

  ojson j;
  j["method"] = to_string(method);
  j["r"] = support.r();
  j["seed"] = req.seed;
  if (g) {
    const SkewSignal s = skew_signal(w0, *g);
    j["rho"] = rho_score(s, support);
    j["bound"] = s.bound(support.r());
    j["captured"] = frobenius_norm_sq(projected_gradient(w0, *g, support));
    j["grad_norm_sq"] = frobenius_norm_sq(*g);
    j["f_rperp_norm"] = off_support_signal(s, support);
  } else {
    j["rho"] = nullptr;
    j["bound"] = nullptr;
    j["captured"] = nullptr;
    j["grad_norm_sq"] = nullptr;
    j["f_rperp_norm"] = nullptr;
  }
  run.json("support.json", j);
  run.finish();
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_probe(const CommandOptions& opts, std::ostream& out, std::ostream&) {
  Run run("probe", opts);
  const RunConfig& cfg = run.config();
  const auto seeds = cfg.seeds();
  run.set_seeds(seeds);

  ojson cells = ojson::array();
  ojson means = ojson::object();
  std::vector<PlotSeries> plot;
  for (const auto& entry : cfg.supports) {
    const Provenance methods[] = {entry.method};
    const auto results = run_probe_study(cfg.task, methods, entry.r, seeds, cfg.calibration, cfg.train);
    std::map<std::size_t, std::vector<double>> by_horizon;
    PlotSeries mean_curve{to_string(entry.method), {}, {}};
    mean_curve.y.assign(cfg.train.steps + 1, 0.0);
    for (std::size_t t = 0; t <= cfg.train.steps; ++t) mean_curve.x.push_back(static_cast<double>(t));

    for (const auto& c : results) {
      CsvTable t{kProbeColumns, {}};
      for (std::size_t s = 0; s < c.report.losses.size(); ++s) {
        t.add_row({std::to_string(s), fmt(c.report.losses[s])});
        mean_curve.y[s] += c.report.losses[s] / static_cast<double>(results.size());
      }
      run.csv(run_name("probe", c.method, c.seed, ".csv"), t);

      ojson j;
      j["method"] = to_string(c.method);
      j["seed"] = c.seed;
      j["r"] = entry.r;
      j["rho"] = optional_number(c.report.rho);
      j["diverged"] = c.report.diverged;
      ojson red = ojson::object();
      for (const auto& [h, v] : c.report.reductions) {
        red[std::to_string(h)] = v;
        by_horizon[h].push_back(v);
      }
      j["delta_loss"] = red;
      cells.push_back(j);
    }
    ojson m = ojson::object();
    for (const auto& [h, v] : by_horizon) {
      const SampleStats st = sample_stats(v);
      m[std::to_string(h)] = {{"mean", st.mean}, {"std", st.std}, {"n", st.n}};
    }
    means[std::string(to_string(entry.method)) + "_r" + std::to_string(entry.r)] = m;
    plot.push_back(std::move(mean_curve));
  }
  ojson summary;
  summary["seeds"] = seeds;
  summary["steps"] = cfg.train.steps;
  summary["learning_rate"] = cfg.train.learning_rate;
  summary["cells"] = cells;
  summary["delta_loss_stats"] = means;
  run.json("probe_summary.json", summary);
  if (opts.svg) run.svg("probe.svg", render_line_plot_svg("probe held-out loss (mean over seeds)", "step", "loss", plot));
  run.finish();
  out << "probe: " << cells.size() << " runs written to " << opts.out.string() << "\n";
  return kExitOk;
}

int cmd_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("train", opts);
  const RunConfig& cfg = run.config();
  const auto seeds = cfg.seeds();
  run.set_seeds(seeds);

  ojson runs = ojson::array();
  std::vector<PlotSeries> plot;
  for (std::uint64_t seed : seeds) {
    for (const auto& entry : cfg.supports) {
      const TrainingCell cell =
          run_training_cell(cfg.task, entry.method, entry.r, 1.0, cfg.calibration, cfg.train, cfg.transform, seed);
      const DynamicsRecord& rec = cell.dynamics;
      CsvTable t{kDynamicsColumns, {}};
      PlotSeries curve{std::string(to_string(entry.method)) + " seed " + std::to_string(seed), {}, {}};
      double max_dev = 0.0;
      for (const auto& row : rec.rows) {
        t.add_row({std::to_string(row.step), fmt(row.train_loss), fmt(row.eval_metric)});
        curve.x.push_back(static_cast<double>(row.step));
        curve.y.push_back(row.train_loss);
        if (row.geometry_deviation) max_dev = std::max(max_dev, *row.geometry_deviation);
      }
      run.csv(run_name("dynamics", entry.method, seed, ".csv"), t);
      run.adapter(run_name("adapter", entry.method, seed, ""), rec.adapter);
      plot.push_back(std::move(curve));

      ojson j;
      j["method"] = to_string(entry.method);
      j["seed"] = seed;
      j["r"] = entry.r;
      j["transform"] = to_string(cfg.transform);
      j["rho"] = cell.rho;
      j["final_train_loss"] = rec.rows.back().train_loss;
      j["final_eval_metric"] = rec.rows.back().eval_metric;
      j["max_geometry_deviation"] = cfg.transform == TransformKind::orthogonal ? ojson(max_dev) : ojson(nullptr);
      j["aborted"] = rec.aborted;
      j["message"] = rec.message;
      if (rec.aborted) err << "warning: " << to_string(entry.method) << " seed " << seed << ": " << rec.message << "\n";
      runs.push_back(j);
    }
  }
  ojson summary;
  summary["seeds"] = seeds;
  summary["optimizer"] = to_string(cfg.train.optimizer);
  summary["steps"] = cfg.train.steps;
  summary["runs"] = runs;
  run.json("train_summary.json", summary);
  if (opts.svg) run.svg("train.svg", render_line_plot_svg("training loss", "step", "train loss", plot));
  run.finish();
  out << "train: " << runs.size() << " runs written to " << opts.out.string() << "\n";
  return kExitOk;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("sweep", opts);
  const RunConfig& cfg = run.config();
  if (!cfg.sweep) throw ConfigError("sweep: config has no \"sweep\" section");
  SweepSpec spec;
  spec.axis = cfg.sweep->axis;
  spec.grid = cfg.sweep->grid;
  spec.methods = cfg.sweep->methods;
  if (spec.methods.empty())
    for (const auto& s : cfg.supports) spec.methods.push_back(s.method);
  spec.seeds = cfg.seeds();
  spec.task = cfg.task;
  spec.train = cfg.train;
  spec.calibration = cfg.calibration;
  spec.r = cfg.sweep->r.value_or(cfg.supports.front().r);
  spec.transform = cfg.transform;
  spec.threads = opts.threads;
  spec.task_label = cfg.sweep->label;
  run.set_seeds(spec.seeds);

  const SweepTable table = sweep(spec);
  CsvTable cells{kSweepColumns, {}};
  for (const auto& c : table.cells) {
    cells.add_row({to_string(c.axis), fmt(c.value), to_string(c.method), std::to_string(c.seed), fmt(c.metric),
                   c.rho ? fmt(*c.rho) : "", c.flagged ? "1" : "0"});
    if (c.flagged) {
      err << "flagged: " << to_string(c.method) << " value " << fmt(c.value) << " seed " << c.seed << ": " << c.note
          << "\n";
    }
  }
  run.csv("sweep.csv", cells);
  CsvTable summary{kSweepSummaryColumns, {}};
  std::map<Provenance, PlotSeries> curves;
  for (const auto& s : table.summary) {
    summary.add_row({s.task, fmt(s.value), to_string(s.method), fmt(s.mean), fmt(s.std), std::to_string(s.count)});
    auto& c = curves[s.method];
    c.name = to_string(s.method);
    c.x.push_back(s.value);
    c.y.push_back(s.mean);
  }
  run.csv("sweep_summary.csv", summary);
  if (opts.svg) {
    std::vector<PlotSeries> plot;
    for (Provenance m : spec.methods)
      if (curves.count(m)) plot.push_back(curves[m]);
    run.svg("sweep.svg", render_line_plot_svg(std::string("sweep over ") + to_string(spec.axis), to_string(spec.axis),
                                              spec.axis == SweepAxis::calibration_size ? "delta loss" : "final loss",
                                              plot));
  }
  run.finish();
  out << "sweep: " << table.cells.size() << " cells written to " << opts.out.string() << "\n";
  return kExitOk;
}

int cmd_recover(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Run run("recover", opts);
  const RunConfig& cfg = run.config();
  std::vector<RecoverEntry> entries = cfg.recover;
  if (entries.empty()) {
    for (RecoveryMethod m : {RecoveryMethod::full_oft, RecoveryMethod::block_oft, RecoveryMethod::goft,
                             RecoveryMethod::boft, RecoveryMethod::hra, RecoveryMethod::psoft}) {
      RecoverEntry e;
      e.recovery.method = m;
      e.recovery.rank = 2;
      entries.push_back(e);
    }
  }
  CsvTable t{kRecoverColumns, {}};
  ojson reports = ojson::array();
  bool all_pass = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    RecoveryConfig rc = entries[i].recovery;
    rc.seed = derive_seed(cfg.seed, i);
    Rng rng(derive_seed(cfg.seed, i, 1));
    const Matrix w0 = rng.gaussian_matrix(entries[i].d_out, entries[i].d_in);
    const RecoveryReport rep = verify_equivalence(rc, w0);
    t.add_row({to_string(rep.method), fmt(rep.residual), rep.pass ? "true" : "false"});
    ojson j;
    j["method"] = to_string(rep.method);
    j["d_out"] = rep.d_out;
    j["d_in"] = rep.d_in;
    j["factors"] = rep.factors;
    j["residual"] = rep.residual;
    j["pass"] = rep.pass;
    j["fixed_point_residual"] = optional_number(rep.fixed_point_residual);
    j["transform_determinant"] = optional_number(rep.transform_determinant);
    j["scope_note"] = rep.scope_note;
    reports.push_back(j);
    if (!rep.pass) {
      all_pass = false;
      err << "FAIL " << to_string(rep.method) << ": residual " << fmt(rep.residual) << "\n";
    }
  }
  run.set_seeds({cfg.seed});
  run.csv("recover.csv", t);
  run.json("recover.json", reports);
  run.finish();
  out << format_csv(t);
  return all_pass ? kExitOk : kExitValidation;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (name == "check") return cmd_check(opts, out, err);
    if (name == "support") return cmd_support(opts, out, err);
    if (name == "probe") return cmd_probe(opts, out, err);
    if (name == "train") return cmd_train(opts, out, err);
    if (name == "sweep") return cmd_sweep(opts, out, err);
    if (name == "recover") return cmd_recover(opts, out, err);
    err << "error: unknown command '" << name << "'\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace loft
