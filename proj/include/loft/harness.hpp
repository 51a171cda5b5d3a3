#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loft/adapter.hpp"
#include "loft/matrix.hpp"
#include "loft/orthogonal.hpp"
#include "loft/support.hpp"

namespace loft {

enum class BaseWeightMode { identity, orthogonal, gaussian };

const char* to_string(BaseWeightMode m) noexcept;
BaseWeightMode base_weight_mode_from_string(std::string_view name);

struct TaskConfig {
  std::size_t d_in = 16;
  std::size_t d_out = 16;
  std::size_t n = 160;  // total columns; a fixed fraction is held out
  std::size_t r_star = 4;
  std::uint64_t seed = 0;
  double noise = 0.0;
  BaseWeightMode base = BaseWeightMode::orthogonal;
  bool whitened = true;
  double e_scale = 1.0;  // std of the planted skew coefficients
  double heldout_fraction = 0.2;
};

struct PlantedRotation {
  SupportBasis p_star;
  SkewParam e_star;
};

/// Synthetic regression Y = W*·X + noise with W* = W₀·S(P*, Q(E*)).
///
/// Training columns and held-out columns are drawn separately. In whitened mode
/// the training inputs satisfy X·Xᵀ/n_train = I exactly; held-out inputs are
/// standard Gaussian.
struct LinearTask {
  TaskConfig config;
  Matrix w0;
  Matrix w_star;
  Matrix x;      // d_in x n_train
  Matrix y;      // d_out x n_train
  Matrix x_val;  // d_in x n_val
  Matrix y_val;
  std::optional<PlantedRotation> planted;

  std::size_t n_train() const noexcept { return x.cols(); }
  std::size_t n_val() const noexcept { return x_val.cols(); }
};

LinearTask make_planted_task(const TaskConfig& cfg);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;
};

/// (1/2n)‖W·X − Y‖_F² and its gradient (W·X − Y)·Xᵀ/n.
LossGrad mse_loss_and_grad(const Matrix& x, const Matrix& y, const Matrix& w);
double mse_loss(const Matrix& x, const Matrix& y, const Matrix& w);

/// Training-split loss and gradient.
LossGrad loss_and_grad(const LinearTask& task, const Matrix& w);
double heldout_loss(const LinearTask& task, const Matrix& w);

/// Restricts a task to the first ceil(fraction·n_train) training columns of a
/// seeded permutation. fraction >= 1 returns the task unchanged.
LinearTask subsample_training(const LinearTask& task, double fraction, std::uint64_t seed);

/// Sum over k seeded mini-batches of the per-batch mean-loss gradient at W₀.
/// batch_size 0 means the full training split. Batches are consecutive chunks
/// of one seeded permutation, wrapping around when k·batch_size > n_train.
Matrix calibrate(const LinearTask& task, std::size_t k_batches, std::size_t batch_size, std::uint64_t seed);

enum class OptimizerKind { sgd, sgd_momentum, adam_like };

const char* to_string(OptimizerKind k) noexcept;
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t steps = 20;
  OptimizerKind optimizer = OptimizerKind::sgd;
  std::size_t batch_size = 0;  // 0: full training split
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Steps at which probe reports record ΔL_t.
inline constexpr std::size_t kProbeHorizons[] = {1, 5, 10, 20};

struct ProbeReport {
  std::vector<double> losses;                 // held-out loss at steps 0..steps
  std::map<std::size_t, double> reductions;   // ΔL_t = L(0) − L(t) for t in kProbeHorizons, t <= steps
  std::optional<double> rho;                  // ρ of the support on the calibration signal
  std::uint64_t seed = 0;
  bool diverged = false;
};

/// Short-horizon probe: an orthogonal adapter on `support`, E = 0 initially,
/// trained by plain SGD on E alone over the training split, with the held-out
/// loss recorded after every step. Divergence (non-finite loss or growth beyond
/// 1e6× the initial value) is flagged; remaining entries are NaN.
ProbeReport probe(const LinearTask& task, const SupportBasis& support, const TrainConfig& cfg,
                  const Matrix* calibration_gradient = nullptr);

struct DynamicsRow {
  std::size_t step = 0;
  double train_loss = 0.0;
  double eval_metric = 0.0;  // held-out loss
  std::optional<double> geometry_deviation;  // max |σ_i(W⁺) − σ_i(W₀)| / σ_1(W₀), orthogonal adapters
};

struct DynamicsRecord {
  std::vector<DynamicsRow> rows;
  LoftAdapter adapter;  // state after the last completed step
  bool aborted = false;
  std::string message;
};

/// Trains the adapter's trainable factors with the configured optimizer. The
/// base weight is never modified. Rows are logged at step 0, every eval_every
/// steps and at the final step.
DynamicsRecord train(const LinearTask& task, LoftAdapter adapter, const TrainConfig& cfg);

/// Whether every factor's transform is orthogonal (Cayley or an orthogonal fixed block).
bool is_orthogonal_adapter(const LoftAdapter& a);

// ---- multi-run protocols --------------------------------------------------

struct CalibrationConfig {
  std::size_t k_batches = 4;
  std::size_t batch_size = 0;
};

/// Builds the support for `method` on a task from its calibration gradient.
SupportBasis support_for_task(const LinearTask& task, Provenance method, std::size_t r, const Matrix& calibration,
                              std::uint64_t seed);

struct ProbeCell {
  Provenance method = Provenance::skewgrad;
  std::uint64_t seed = 0;
  ProbeReport report;
};

/// For each seed: planted task (task.seed = seed), calibration gradient, then a
/// probe per method. Cells come back seed-major, method-minor.
std::vector<ProbeCell> run_probe_study(const TaskConfig& task, std::span<const Provenance> methods, std::size_t r,
                                       std::span<const std::uint64_t> seeds, const CalibrationConfig& calib,
                                       const TrainConfig& cfg);

enum class SweepAxis { data_fraction, rank, calibration_size };

const char* to_string(SweepAxis a) noexcept;
SweepAxis sweep_axis_from_string(std::string_view name);

struct SweepSpec {
  SweepAxis axis = SweepAxis::rank;
  std::vector<double> grid;
  std::vector<Provenance> methods;
  std::vector<std::uint64_t> seeds;
  TaskConfig task;
  TrainConfig train;
  CalibrationConfig calibration;
  std::size_t r = 4;  // rank used when the axis is not rank
  TransformKind transform = TransformKind::orthogonal;
  std::size_t threads = 1;
  std::string task_label = "planted";
};

struct SweepCell {
  SweepAxis axis = SweepAxis::rank;
  double value = 0.0;
  Provenance method = Provenance::skewgrad;
  std::uint64_t seed = 0;
  double metric = 0.0;  // final held-out loss, or ΔL_20 for calibration_size
  std::optional<double> rho;
  bool flagged = false;
  std::string note;
};

struct SweepSummaryRow {
  std::string task;
  double value = 0.0;
  Provenance method = Provenance::skewgrad;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over unflagged seeds
  std::size_t count = 0;
};

struct SweepTable {
  std::vector<SweepCell> cells;  // grid-major, then method, then seed
  std::vector<SweepSummaryRow> summary;
};

/// Outcome of one training cell: planted task for `seed`, optional data
/// subsampling, calibration, support construction, training.
struct TrainingCell {
  DynamicsRecord dynamics;
  double rho = 0.0;
};

TrainingCell run_training_cell(const TaskConfig& task, Provenance method, std::size_t r, double data_fraction,
                               const CalibrationConfig& calib, const TrainConfig& train_cfg,
                               TransformKind transform, std::uint64_t seed);

/// Runs every (grid value, method, seed) cell, up to spec.threads at a time.
/// Cell failures become flagged rows. Output order does not depend on threads.
SweepTable sweep(const SweepSpec& spec);

struct EarlyValidationTable {
  static constexpr std::size_t kSteps = 25;
  std::vector<std::string> names;
  std::vector<std::vector<double>> losses;  // [support][step 1..25]
  std::vector<double> window_5_20;
  std::vector<double> window_5_25;
  std::vector<std::size_t> wins;  // steps at which the support had the lowest loss (ties credit all)
};

/// Trains an orthogonal adapter on each support for 25 steps under cfg and
/// tabulates the held-out loss. Requires cfg.steps >= 25.
EarlyValidationTable early_validation(const LinearTask& task, std::span<const SupportBasis> supports,
                                      const TrainConfig& cfg);

/// Mean and sample standard deviation.
struct SampleStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};
SampleStats sample_stats(std::span<const double> values);

/// Standard error of the difference of two independent sample means.
double pooled_standard_error(const SampleStats& a, const SampleStats& b);

}  // namespace loft
