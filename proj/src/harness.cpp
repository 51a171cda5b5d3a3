#include "loft/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "loft/error.hpp"
#include "loft/linalg.hpp"
#include "loft/random.hpp"

namespace loft {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-stream tags for derive_seed.
constexpr std::uint64_t kCalibrationStream = 11;
constexpr std::uint64_t kSupportStream = 13;
constexpr std::uint64_t kSubsampleStream = 17;

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("train: learning_rate must be finite and nonnegative");
  }
  if (cfg.eval_every == 0) throw ConfigError("train: eval_every must be at least 1");
}

Matrix base_weight(const TaskConfig& cfg, Rng& rng) {
  switch (cfg.base) {
    case BaseWeightMode::identity:
      if (cfg.d_in != cfg.d_out) throw ConfigError("task: identity base weight needs d_in == d_out");
      return Matrix::identity(cfg.d_in);
    case BaseWeightMode::orthogonal:
      if (cfg.d_out <= cfg.d_in) return random_orthonormal_rows(cfg.d_out, cfg.d_in, rng);
      return random_orthonormal_rows(cfg.d_in, cfg.d_out, rng).transpose();
    case BaseWeightMode::gaussian:
      return rng.gaussian_matrix(cfg.d_out, cfg.d_in, 1.0 / std::sqrt(static_cast<double>(cfg.d_in)));
  }
  return {};
}

// Flat views over the trainable parameters of an adapter, in factor order.
// Orthogonal factors contribute their lower-triangle coefficients and take the
// matching entries of the skew gradient, so a step of −η·g moves E by −η·∇_E
// as a matrix and the first-order loss change is −η‖∇_E‖_F².
std::vector<double> gather_params(const LoftAdapter& a) {
  std::vector<double> out;
  for (const auto& f : a.factors()) {
    switch (f.transform.kind()) {
      case TransformKind::orthogonal: {
        auto c = f.transform.skew().coeffs();
        out.insert(out.end(), c.begin(), c.end());
        break;
      }
      case TransformKind::free: {
        auto c = f.transform.dense().data();
        out.insert(out.end(), c.begin(), c.end());
        break;
      }
      case TransformKind::fixed: break;
    }
  }
  return out;
}

std::vector<double> gather_grads(const LoftAdapter& a, const std::vector<Matrix>& grads) {
  std::vector<double> out;
  for (std::size_t l = 0; l < a.factors().size(); ++l) {
    const auto& f = a.factors()[l];
    switch (f.transform.kind()) {
      case TransformKind::orthogonal: {
        const Matrix& g = grads[l];
        for (std::size_t i = 1; i < g.rows(); ++i)
          for (std::size_t j = 0; j < i; ++j) out.push_back(g(i, j));
        break;
      }
      case TransformKind::free: {
        auto c = grads[l].data();
        out.insert(out.end(), c.begin(), c.end());
        break;
      }
      case TransformKind::fixed: break;
    }
  }
  return out;
}

void scatter_params(LoftAdapter& a, const std::vector<double>& params) {
  std::size_t k = 0;
  for (std::size_t l = 0; l < a.factors().size(); ++l) {
    auto& t = a.factor(l).transform;
    switch (t.kind()) {
      case TransformKind::orthogonal:
        for (double& v : t.skew().coeffs()) v = params[k++];
        break;
      case TransformKind::free:
        for (double& v : t.dense().data()) v = params[k++];
        break;
      case TransformKind::fixed: break;
    }
  }
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    ++t_;
    const double lr = cfg_.learning_rate;
    switch (cfg_.optimizer) {
      case OptimizerKind::sgd:
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
        break;
      case OptimizerKind::sgd_momentum:
        for (std::size_t i = 0; i < params.size(); ++i) {
          m_[i] = cfg_.momentum * m_[i] + grads[i];
          params[i] -= lr * m_[i];
        }
        break;
      case OptimizerKind::adam_like: {
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
          m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
          v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
          params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
        }
        break;
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

// Column schedule for mini-batch training: full split, or consecutive chunks of
// a seeded permutation reshuffled every epoch.
class BatchSchedule {
 public:
  BatchSchedule(std::size_t n, std::size_t batch, std::uint64_t seed) : n_(n), batch_(batch), rng_(seed) {}

  bool full() const noexcept { return batch_ == 0 || batch_ >= n_; }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> cols;
    cols.reserve(batch_);
    while (cols.size() < batch_) {
      if (pos_ == perm_.size()) {
        perm_ = rng_.permutation(n_);
        pos_ = 0;
      }
      cols.push_back(perm_[pos_++]);
    }
    return cols;
  }

 private:
  std::size_t n_;
  std::size_t batch_;
  Rng rng_;
  std::vector<std::size_t> perm_;
  std::size_t pos_ = 0;
};

double geometry_deviation(const Matrix& merged, const std::vector<double>& base_sigma) {
  const auto s = singular_values(merged);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) worst = std::max(worst, std::abs(s[i] - base_sigma[i]));
  return base_sigma.empty() || base_sigma.front() == 0.0 ? worst : worst / base_sigma.front();
}

}  // namespace

const char* to_string(BaseWeightMode m) noexcept {
  switch (m) {
    case BaseWeightMode::identity: return "identity";
    case BaseWeightMode::orthogonal: return "orthogonal";
    case BaseWeightMode::gaussian: return "gaussian";
  }
  return "unknown";
}

BaseWeightMode base_weight_mode_from_string(std::string_view name) {
  if (name == "identity") return BaseWeightMode::identity;
  if (name == "orthogonal") return BaseWeightMode::orthogonal;
  if (name == "gaussian") return BaseWeightMode::gaussian;
  throw ConfigError("unknown base weight mode '" + std::string(name) + "'");
}

const char* to_string(OptimizerKind k) noexcept {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_momentum: return "sgd_momentum";
    case OptimizerKind::adam_like: return "adam_like";
  }
  return "unknown";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "sgd_momentum") return OptimizerKind::sgd_momentum;
  if (name == "adam_like") return OptimizerKind::adam_like;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

const char* to_string(SweepAxis a) noexcept {
  switch (a) {
    case SweepAxis::data_fraction: return "data_fraction";
    case SweepAxis::rank: return "rank";
    case SweepAxis::calibration_size: return "calibration_size";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  if (name == "data_fraction") return SweepAxis::data_fraction;
  if (name == "rank") return SweepAxis::rank;
  if (name == "calibration_size") return SweepAxis::calibration_size;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

LinearTask make_planted_task(const TaskConfig& cfg) {
  if (cfg.d_in == 0 || cfg.d_out == 0) throw ConfigError("task: dimensions must be positive");
  if (cfg.r_star < 1 || cfg.r_star > cfg.d_in) throw ConfigError("task: r_star must lie in [1, d_in]");
  if (!(cfg.heldout_fraction >= 0.0 && cfg.heldout_fraction < 1.0)) {
    throw ConfigError("task: heldout_fraction must lie in [0, 1)");
  }
  if (!(cfg.noise >= 0.0)) throw ConfigError("task: noise must be nonnegative");
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.heldout_fraction * static_cast<double>(cfg.n)));
  if (cfg.heldout_fraction > 0.0) n_val = std::max<std::size_t>(n_val, 1);
  if (n_val >= cfg.n) throw ConfigError("task: n too small for the held-out split");
  const std::size_t n_train = cfg.n - n_val;
  if (cfg.whitened && n_train < cfg.d_in) {
    throw ConfigError("task: whitened inputs need at least d_in training columns (" + std::to_string(n_train) +
                      " < " + std::to_string(cfg.d_in) + ")");
  }

  Rng rng(cfg.seed);
  Matrix w0 = base_weight(cfg, rng);
  SupportBasis p_star(random_orthonormal_rows(cfg.r_star, cfg.d_in, rng), Provenance::random);
  SkewParam e_star = cfg.e_scale == 0.0 ? SkewParam::zero(cfg.r_star) : SkewParam::random(cfg.r_star, rng, cfg.e_scale);

  LoftAdapter truth(w0);
  truth.add_factor({p_star, TransformSpec::orthogonal(e_star)});
  Matrix w_star = e_star.is_zero() ? w0 : merge(truth);

  Matrix x;
  if (cfg.whitened) {
    x = qr_orthonormal_rows(rng.gaussian_matrix(cfg.d_in, n_train));
    x *= std::sqrt(static_cast<double>(n_train));
  } else {
    x = rng.gaussian_matrix(cfg.d_in, n_train);
  }
  Matrix x_val = rng.gaussian_matrix(cfg.d_in, n_val);
  Matrix y = matmul(w_star, x);
  Matrix y_val = matmul(w_star, x_val);
  if (cfg.noise > 0.0) {
    y += rng.gaussian_matrix(y.rows(), y.cols(), cfg.noise);
    y_val += rng.gaussian_matrix(y_val.rows(), y_val.cols(), cfg.noise);
  }

  return LinearTask{cfg,  std::move(w0),    std::move(w_star), std::move(x),
                    std::move(y), std::move(x_val), std::move(y_val),
                    PlantedRotation{std::move(p_star), std::move(e_star)}};
}

LossGrad mse_loss_and_grad(const Matrix& x, const Matrix& y, const Matrix& w) {
  if (w.cols() != x.rows() || w.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError("mse_loss_and_grad: shapes of W, X, Y do not agree");
  }
  const double n = static_cast<double>(x.cols());
  Matrix residual = matmul(w, x) - y;
  LossGrad out;
  out.loss = 0.5 * frobenius_norm_sq(residual) / n;
  out.grad = matmul(residual, x.transpose());
  out.grad *= 1.0 / n;
  return out;
}

double mse_loss(const Matrix& x, const Matrix& y, const Matrix& w) {
  if (w.cols() != x.rows() || w.rows() != y.rows() || x.cols() != y.cols()) {
    throw ShapeError("mse_loss: shapes of W, X, Y do not agree");
  }
  return 0.5 * frobenius_norm_sq(matmul(w, x) - y) / static_cast<double>(x.cols());
}

LossGrad loss_and_grad(const LinearTask& task, const Matrix& w) { return mse_loss_and_grad(task.x, task.y, w); }

double heldout_loss(const LinearTask& task, const Matrix& w) {
  if (task.n_val() == 0) return kNaN;
  return mse_loss(task.x_val, task.y_val, w);
}

LinearTask subsample_training(const LinearTask& task, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0)) throw ConfigError("data fraction must be positive");
  if (fraction >= 1.0) return task;
  const std::size_t n = task.n_train();
  const std::size_t keep =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  Rng rng(seed);
  auto perm = rng.permutation(n);
  perm.resize(keep);
  LinearTask sub = task;
  sub.x = task.x.select_cols(perm);
  sub.y = task.y.select_cols(perm);
  return sub;
}

Matrix calibrate(const LinearTask& task, std::size_t k_batches, std::size_t batch_size, std::uint64_t seed) {
  if (k_batches < 1) throw ConfigError("calibrate: k_batches must be at least 1");
  const std::size_t n = task.n_train();
  if (n == 0) throw ConfigError("calibrate: task has no training columns");
  const std::size_t bs = batch_size == 0 ? n : batch_size;
  if (bs > n) throw ConfigError("calibrate: batch_size exceeds the training split");

  Rng rng(seed);
  const auto perm = rng.permutation(n);
  std::vector<Matrix> grads;
  grads.reserve(k_batches);
  std::vector<std::size_t> cols(bs);
  for (std::size_t b = 0; b < k_batches; ++b) {
    for (std::size_t i = 0; i < bs; ++i) cols[i] = perm[(b * bs + i) % n];
    grads.push_back(mse_loss_and_grad(task.x.select_cols(cols), task.y.select_cols(cols), task.w0).grad);
  }
  return accumulate_gradients(grads);
}

bool is_orthogonal_adapter(const LoftAdapter& a) {
  for (const auto& f : a.factors()) {
    switch (f.transform.kind()) {
      case TransformKind::orthogonal: break;
      case TransformKind::free: return false;
      case TransformKind::fixed: {
        const Matrix& t = f.transform.dense();
        if (frobenius_norm(matmul(t.transpose(), t) - Matrix::identity(t.rows())) > 1e-10) return false;
        break;
      }
    }
  }
  return true;
}

DynamicsRecord train(const LinearTask& task, LoftAdapter adapter, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (adapter.d_in() != task.x.rows() || adapter.d_out() != task.y.rows()) {
    throw ShapeError("train: adapter does not match the task dimensions");
  }
  const bool orthogonal = is_orthogonal_adapter(adapter);
  const std::vector<double> base_sigma = orthogonal ? singular_values(adapter.base_weight()) : std::vector<double>{};

  DynamicsRecord rec{{}, std::move(adapter), false, {}};
  auto log_row = [&](std::size_t step, const Matrix& merged) {
    DynamicsRow row;
    row.step = step;
    row.train_loss = loss_and_grad(task, merged).loss;
    row.eval_metric = heldout_loss(task, merged);
    if (orthogonal) row.geometry_deviation = geometry_deviation(merged, base_sigma);
    rec.rows.push_back(row);
    return std::isfinite(row.train_loss);
  };

  Matrix merged = merge(rec.adapter);
  if (!log_row(0, merged)) {
    rec.aborted = true;
    rec.message = "non-finite initial loss";
    return rec;
  }

  std::vector<double> params = gather_params(rec.adapter);
  Optimizer opt(cfg, params.size());
  BatchSchedule schedule(task.n_train(), cfg.batch_size, cfg.seed);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    LossGrad lg;
    if (schedule.full()) {
      lg = loss_and_grad(task, merged);
    } else {
      const auto cols = schedule.next();
      lg = mse_loss_and_grad(task.x.select_cols(cols), task.y.select_cols(cols), merged);
    }
    if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
      rec.aborted = true;
      rec.message = "non-finite loss at step " + std::to_string(step);
      return rec;
    }
    const auto grads = gather_grads(rec.adapter, transform_gradients(rec.adapter, lg.grad));
    opt.step(params, grads);
    scatter_params(rec.adapter, params);
    try {
      merged = merge(rec.adapter);
    } catch (const NumericalError& e) {
      rec.aborted = true;
      rec.message = std::string("numerical failure at step ") + std::to_string(step) + ": " + e.what();
      return rec;
    }
    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      if (!log_row(step, merged)) {
        rec.aborted = true;
        rec.message = "non-finite loss at step " + std::to_string(step);
        return rec;
      }
    }
  }
  return rec;
}

ProbeReport probe(const LinearTask& task, const SupportBasis& support, const TrainConfig& cfg,
                  const Matrix* calibration_gradient) {
  TrainConfig pc = cfg;
  pc.optimizer = OptimizerKind::sgd;
  pc.eval_every = 1;

  LoftAdapter adapter(task.w0);
  adapter.add_factor({support, TransformSpec::orthogonal_identity(support.r())});
  const DynamicsRecord rec = train(task, std::move(adapter), pc);

  ProbeReport rep;
  rep.seed = cfg.seed;
  rep.losses.assign(cfg.steps + 1, kNaN);
  const double initial = rec.rows.front().eval_metric;
  for (const auto& row : rec.rows) {
    const double v = row.eval_metric;
    if (!std::isfinite(v) || std::abs(v) > 1e6 * std::abs(initial)) {
      rep.diverged = true;
      break;
    }
    rep.losses[row.step] = v;
  }
  if (rec.aborted) rep.diverged = true;
  for (std::size_t t : kProbeHorizons) {
    if (t <= cfg.steps) rep.reductions[t] = rep.losses[0] - rep.losses[t];
  }
  if (calibration_gradient != nullptr) rep.rho = rho_score(task.w0, *calibration_gradient, support);
  return rep;
}

SupportBasis support_for_task(const LinearTask& task, Provenance method, std::size_t r, const Matrix& calibration,
                              std::uint64_t seed) {
  if (method == Provenance::butterfly || method == Provenance::explicit_basis) {
    throw ConfigError(std::string("support method '") + to_string(method) + "' needs explicit parameters");
  }
  SupportRequest req;
  req.method = method;
  req.r = r;
  req.seed = seed;
  return make_support(req, task.w0, &calibration);
}

std::vector<ProbeCell> run_probe_study(const TaskConfig& task_cfg, std::span<const Provenance> methods, std::size_t r,
                                       std::span<const std::uint64_t> seeds, const CalibrationConfig& calib,
                                       const TrainConfig& cfg) {
  std::vector<ProbeCell> cells;
  for (std::uint64_t seed : seeds) {
    TaskConfig tc = task_cfg;
    tc.seed = seed;
    const LinearTask task = make_planted_task(tc);
    const Matrix g = calibrate(task, calib.k_batches, calib.batch_size, derive_seed(seed, kCalibrationStream));
    for (Provenance m : methods) {
      const SupportBasis support = support_for_task(task, m, r, g, derive_seed(seed, kSupportStream));
      TrainConfig pc = cfg;
      pc.seed = seed;
      cells.push_back({m, seed, probe(task, support, pc, &g)});
    }
  }
  return cells;
}

TrainingCell run_training_cell(const TaskConfig& task_cfg, Provenance method, std::size_t r, double data_fraction,
                               const CalibrationConfig& calib, const TrainConfig& train_cfg,
                               TransformKind transform, std::uint64_t seed) {
  TaskConfig tc = task_cfg;
  tc.seed = seed;
  const LinearTask full = make_planted_task(tc);
  const LinearTask task = subsample_training(full, data_fraction, derive_seed(seed, kSubsampleStream));
  const std::size_t bs = std::min(calib.batch_size, task.n_train());
  const Matrix g = calibrate(task, calib.k_batches, bs, derive_seed(seed, kCalibrationStream));
  const SupportBasis support = support_for_task(task, method, r, g, derive_seed(seed, kSupportStream));

  LoftAdapter adapter(task.w0);
  switch (transform) {
    case TransformKind::orthogonal: adapter.add_factor({support, TransformSpec::orthogonal_identity(r)}); break;
    case TransformKind::free: adapter.add_factor({support, TransformSpec::free_identity(r)}); break;
    case TransformKind::fixed: throw ConfigError("training cell: fixed transforms have nothing to train");
  }
  TrainConfig tcfg = train_cfg;
  tcfg.seed = seed;
  const double rho = rho_score(task.w0, g, support);
  return TrainingCell{train(task, std::move(adapter), tcfg), rho};
}

namespace {

SweepCell run_sweep_cell(const SweepSpec& spec, double value, Provenance method, std::uint64_t seed) {
  SweepCell cell;
  cell.axis = spec.axis;
  cell.value = value;
  cell.method = method;
  cell.seed = seed;
  try {
    switch (spec.axis) {
      case SweepAxis::data_fraction:
      case SweepAxis::rank: {
        const bool rank_axis = spec.axis == SweepAxis::rank;
        if (rank_axis && (value < 1.0 || value != std::floor(value))) throw ConfigError("rank grid values must be positive integers");
        const std::size_t r = rank_axis ? static_cast<std::size_t>(value) : spec.r;
        const double fraction = rank_axis ? 1.0 : value;
        const TrainingCell tc =
            run_training_cell(spec.task, method, r, fraction, spec.calibration, spec.train, spec.transform, seed);
        cell.metric = tc.dynamics.rows.back().eval_metric;
        cell.rho = tc.rho;
        if (tc.dynamics.aborted) {
          cell.flagged = true;
          cell.note = tc.dynamics.message;
        }
        break;
      }
      case SweepAxis::calibration_size: {
        if (value < 1.0 || value != std::floor(value)) throw ConfigError("calibration grid values must be positive integers");
        TaskConfig tc = spec.task;
        tc.seed = seed;
        const LinearTask task = make_planted_task(tc);
        const Matrix g = calibrate(task, static_cast<std::size_t>(value), spec.calibration.batch_size,
                                   derive_seed(seed, kCalibrationStream));
        const SupportBasis support = support_for_task(task, method, spec.r, g, derive_seed(seed, kSupportStream));
        TrainConfig pc = spec.train;
        pc.seed = seed;
        const ProbeReport rep = probe(task, support, pc, &g);
        cell.metric = rep.reductions.empty() ? 0.0 : rep.reductions.rbegin()->second;
        cell.rho = rep.rho;
        if (rep.diverged) {
          cell.flagged = true;
          cell.note = "probe diverged";
        }
        break;
      }
    }
  } catch (const Error& e) {
    cell.flagged = true;
    cell.metric = kNaN;
    cell.note = e.what();
  }
  return cell;
}

}  // namespace

SweepTable sweep(const SweepSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("sweep: grid must not be empty");
  if (spec.methods.empty()) throw ConfigError("sweep: at least one support method required");
  if (spec.seeds.empty()) throw ConfigError("sweep: at least one seed required");

  struct Job {
    double value;
    Provenance method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : spec.grid)
    for (Provenance m : spec.methods)
      for (std::uint64_t s : spec.seeds) jobs.push_back({v, m, s});

  SweepTable table;
  table.cells.resize(jobs.size());
  const std::size_t workers = std::clamp<std::size_t>(spec.threads, 1, jobs.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) table.cells[i] = run_sweep_cell(spec, jobs[i].value, jobs[i].method, jobs[i].seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          table.cells[i] = run_sweep_cell(spec, jobs[i].value, jobs[i].method, jobs[i].seed);
        }
      });
    }
  }

  for (double v : spec.grid) {
    for (Provenance m : spec.methods) {
      std::vector<double> vals;
      for (const auto& c : table.cells)
        if (c.value == v && c.method == m && !c.flagged) vals.push_back(c.metric);
      const SampleStats st = sample_stats(vals);
      table.summary.push_back({spec.task_label, v, m, st.mean, st.std, st.n});
    }
  }
  return table;
}

EarlyValidationTable early_validation(const LinearTask& task, std::span<const SupportBasis> supports,
                                      const TrainConfig& cfg) {
  constexpr std::size_t kSteps = EarlyValidationTable::kSteps;
  if (cfg.steps < kSteps) throw ConfigError("early_validation: steps must be at least 25");
  if (supports.empty()) throw ConfigError("early_validation: no supports given");

  TrainConfig ec = cfg;
  ec.steps = kSteps;
  ec.eval_every = 1;

  EarlyValidationTable table;
  for (const auto& support : supports) {
    LoftAdapter adapter(task.w0);
    adapter.add_factor({support, TransformSpec::orthogonal_identity(support.r())});
    const DynamicsRecord rec = train(task, std::move(adapter), ec);
    std::vector<double> losses(kSteps, kNaN);
    for (const auto& row : rec.rows)
      if (row.step >= 1) losses[row.step - 1] = row.eval_metric;
    auto window = [&](std::size_t from, std::size_t to) {
      double s = 0.0;
      for (std::size_t t = from; t <= to; ++t) s += losses[t - 1];
      return s / static_cast<double>(to - from + 1);
    };
    table.names.emplace_back(to_string(support.provenance()));
    table.window_5_20.push_back(window(5, 20));
    table.window_5_25.push_back(window(5, 25));
    table.losses.push_back(std::move(losses));
  }

  table.wins.assign(supports.size(), 0);
  for (std::size_t t = 0; t < kSteps; ++t) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : table.losses)
      if (l[t] < best) best = l[t];
    for (std::size_t s = 0; s < supports.size(); ++s)
      if (table.losses[s][t] == best) ++table.wins[s];
  }
  return table;
}

SampleStats sample_stats(std::span<const double> values) {
  SampleStats st;
  st.n = values.size();
  if (st.n == 0) return {kNaN, kNaN, 0};
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / static_cast<double>(st.n);
  if (st.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - st.mean) * (v - st.mean);
    st.std = std::sqrt(ss / static_cast<double>(st.n - 1));
  }
  return st;
}

double pooled_standard_error(const SampleStats& a, const SampleStats& b) {
  return std::sqrt(a.std * a.std / static_cast<double>(a.n) + b.std * b.std / static_cast<double>(b.n));
}

}  // namespace loft
