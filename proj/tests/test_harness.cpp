#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "loft/error.hpp"
#include "loft/harness.hpp"
#include "loft/linalg.hpp"
#include "loft/random.hpp"
#include "loft/support.hpp"

using namespace loft;

namespace {

TaskConfig small_task(std::uint64_t seed = 3) {
  TaskConfig c;
  c.d_in = 8;
  c.d_out = 8;
  c.n = 80;
  c.r_star = 2;
  c.seed = seed;
  return c;
}

SupportRequest request(Provenance m, std::size_t r, std::uint64_t seed = 0) {
  SupportRequest q;
  q.method = m;
  q.r = r;
  q.seed = seed;
  return q;
}

LoftAdapter orthogonal_adapter(const Matrix& w0, const SupportBasis& p, SkewParam e) {
  LoftAdapter a(w0);
  a.add_factor({p, TransformSpec::orthogonal(std::move(e))});
  return a;
}

}  // namespace

TEST(Task, NoiselessLossVanishesAtTruth) {
  const LinearTask t = make_planted_task(small_task());
  EXPECT_LT(loss_and_grad(t, t.w_star).loss, 1e-28);
  EXPECT_LT(max_abs(loss_and_grad(t, t.w_star).grad), 1e-14);
  EXPECT_LT(heldout_loss(t, t.w_star), 1e-28);
  ASSERT_TRUE(t.planted.has_value());
  EXPECT_EQ(t.planted->p_star.r(), 2u);
}

TEST(Task, SplitSizes) {
  const LinearTask t = make_planted_task(small_task());
  EXPECT_EQ(t.n_train(), 64u);
  EXPECT_EQ(t.n_val(), 16u);
}

TEST(Task, WhitenedTrainingGram) {
  TaskConfig c = small_task();
  c.d_in = 12;
  c.n = 100;
  const LinearTask t = make_planted_task(c);
  Matrix gram = matmul(t.x, t.x.transpose());
  gram *= 1.0 / static_cast<double>(t.n_train());
  EXPECT_LT(frobenius_norm(gram - Matrix::identity(12)), 1e-10);
}

TEST(Task, ZeroPlantedRotationGivesZeroGradientAtBase) {
  TaskConfig c = small_task();
  c.e_scale = 0.0;
  const LinearTask t = make_planted_task(c);
  EXPECT_EQ(t.w_star, t.w0);
  EXPECT_LT(max_abs(loss_and_grad(t, t.w0).grad), 1e-14);
  EXPECT_LT(max_abs(calibrate(t, 3, 8, 1)), 1e-14);
}

TEST(Task, WhitenedGradientIsWeightGap) {
  const LinearTask t = make_planted_task(small_task());
  EXPECT_LT(max_abs_diff(loss_and_grad(t, t.w0).grad, t.w0 - t.w_star), 1e-12);
}

TEST(Task, Deterministic) {
  const LinearTask a = make_planted_task(small_task(9));
  const LinearTask b = make_planted_task(small_task(9));
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y_val, b.y_val);
  EXPECT_NE(a.x, make_planted_task(small_task(10)).x);
}

TEST(Task, InvalidConfig) {
  TaskConfig c = small_task();
  c.r_star = 9;
  EXPECT_THROW(make_planted_task(c), ConfigError);
}

TEST(Loss, ScalarHandCase) {
  const LossGrad lg = mse_loss_and_grad(Matrix{{1}}, Matrix{{1}}, Matrix{{2}});
  EXPECT_DOUBLE_EQ(lg.loss, 0.5);
  EXPECT_DOUBLE_EQ(lg.grad(0, 0), 1.0);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const Matrix x = rng.gaussian_matrix(5, 11);
  const Matrix y = rng.gaussian_matrix(3, 11);
  const Matrix w = rng.gaussian_matrix(3, 5);
  const Matrix g = mse_loss_and_grad(x, y, w).grad;
  const double h = 1e-6;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      Matrix wp = w, wm = w;
      wp(i, j) += h;
      wm(i, j) -= h;
      EXPECT_NEAR((mse_loss(x, y, wp) - mse_loss(x, y, wm)) / (2 * h), g(i, j), 1e-6);
    }
  }
}

TEST(Calibrate, FullBatchChunksSumToMultiple) {
  const LinearTask t = make_planted_task(small_task());
  const Matrix g = loss_and_grad(t, t.w0).grad;
  EXPECT_LT(max_abs_diff(calibrate(t, 1, 0, 5), g), 1e-14);
  EXPECT_LT(max_abs_diff(calibrate(t, 3, 0, 5), 3.0 * g), 1e-13);
  EXPECT_LT(max_abs_diff(calibrate(t, 1, t.n_train(), 5), g), 1e-13);
}

TEST(Calibrate, BatchesAreSeeded) {
  const LinearTask t = make_planted_task(small_task());
  EXPECT_EQ(calibrate(t, 2, 8, 5), calibrate(t, 2, 8, 5));
  EXPECT_NE(calibrate(t, 2, 8, 5), calibrate(t, 2, 8, 6));
  EXPECT_THROW(calibrate(t, 0, 8, 5), ConfigError);
}

TEST(Subsample, FractionSelectsColumns) {
  const LinearTask t = make_planted_task(small_task());
  const LinearTask half = subsample_training(t, 0.5, 2);
  EXPECT_EQ(half.n_train(), 32u);
  EXPECT_EQ(half.x_val, t.x_val);
  EXPECT_EQ(subsample_training(t, 1.0, 2).x, t.x);
}

TEST(Chain, SkewGradientMatchesFiniteDifferences) {
  Rng rng(5);
  const LinearTask t = make_planted_task(small_task());
  for (std::size_t r : {2u, 4u, 8u}) {
    const SupportBasis p(random_orthonormal_rows(r, 8, rng), Provenance::random);
    const LoftAdapter a = orthogonal_adapter(t.w0, p, SkewParam::random(r, rng, 0.3));
    const Matrix g = transform_gradients(a, loss_and_grad(t, merge(a)).grad)[0];
    const SkewParam dir = SkewParam::random(r, rng);
    auto loss_at = [&](double s) {
      SkewParam e = a.factors()[0].transform.skew();
      for (std::size_t k = 0; k < e.coeffs().size(); ++k) e.coeffs()[k] += s * dir.coeffs()[k];
      return loss_and_grad(t, merge(orthogonal_adapter(t.w0, p, e))).loss;
    };
    const double h = 1e-5;
    const double fd = (loss_at(h) - loss_at(-h)) / (2 * h);
    EXPECT_NEAR(fd, frobenius_inner(g, dir.matrix()), 1e-7 * std::max(1.0, std::abs(fd))) << r;
  }
}

TEST(Train, FirstSgdStepDecreaseMatchesSlope) {
  const LinearTask t = make_planted_task(small_task());
  const Matrix g = loss_and_grad(t, t.w0).grad;
  const SupportBasis p = make_support(request(Provenance::skewgrad, 4), t.w0, &g);
  const double slope = frobenius_norm_sq(projected_gradient(t.w0, g, p));
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.steps = 1;
  const DynamicsRecord rec = train(t, orthogonal_adapter(t.w0, p, SkewParam::zero(4)), cfg);
  ASSERT_EQ(rec.rows.size(), 2u);
  const double decrease = rec.rows[0].train_loss - rec.rows[1].train_loss;
  EXPECT_NEAR(decrease, cfg.learning_rate * slope, 0.1 * cfg.learning_rate * slope);
}

TEST(Train, ZeroStepsLogsInitialRow) {
  const LinearTask t = make_planted_task(small_task());
  const SupportBasis p(Matrix::identity(8).rows_range(0, 2), Provenance::coordinate);
  TrainConfig cfg;
  cfg.steps = 0;
  const DynamicsRecord rec = train(t, orthogonal_adapter(t.w0, p, SkewParam::zero(2)), cfg);
  ASSERT_EQ(rec.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rec.rows[0].eval_metric, heldout_loss(t, t.w0));
}

TEST(Train, EvalEveryAndFinalStepLogged) {
  const LinearTask t = make_planted_task(small_task());
  const SupportBasis p(Matrix::identity(8).rows_range(0, 2), Provenance::coordinate);
  TrainConfig cfg;
  cfg.steps = 7;
  cfg.eval_every = 3;
  const DynamicsRecord rec = train(t, orthogonal_adapter(t.w0, p, SkewParam::zero(2)), cfg);
  std::vector<std::size_t> steps;
  for (const auto& row : rec.rows) steps.push_back(row.step);
  EXPECT_EQ(steps, (std::vector<std::size_t>{0, 3, 6, 7}));
}

TEST(Train, OrthogonalKeepsSpectrumFreeDoesNot) {
  TaskConfig c = small_task();
  c.base = BaseWeightMode::gaussian;
  const LinearTask t = make_planted_task(c);
  const Matrix g = loss_and_grad(t, t.w0).grad;
  const SupportBasis p = make_support(request(Provenance::gradsvd, 4), t.w0, &g);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.steps = 30;
  cfg.eval_every = 5;
  const DynamicsRecord orth = train(t, orthogonal_adapter(t.w0, p, SkewParam::zero(4)), cfg);
  ASSERT_FALSE(orth.aborted);
  EXPECT_LT(orth.rows.back().train_loss, orth.rows.front().train_loss);
  for (const auto& row : orth.rows) {
    ASSERT_TRUE(row.geometry_deviation.has_value());
    EXPECT_LT(*row.geometry_deviation, 1e-8);
  }
  EXPECT_EQ(orth.adapter.base_weight(), t.w0);

  LoftAdapter free(t.w0);
  free.add_factor({p, TransformSpec::free_identity(4)});
  const DynamicsRecord fr = train(t, free, cfg);
  EXPECT_LT(fr.rows.back().train_loss, fr.rows.front().train_loss);
  EXPECT_FALSE(fr.rows.back().geometry_deviation.has_value());
  const auto s0 = singular_values(t.w0);
  const auto s1 = singular_values(merge(fr.adapter));
  double dev = 0.0;
  for (std::size_t k = 0; k < s0.size(); ++k) dev = std::max(dev, std::abs(s0[k] - s1[k]));
  EXPECT_GT(dev, 1e-6);
}

TEST(Train, OptimizersDecreaseLoss) {
  const LinearTask t = make_planted_task(small_task());
  const Matrix g = loss_and_grad(t, t.w0).grad;
  const SupportBasis p = make_support(request(Provenance::skewgrad, 2), t.w0, &g);
  for (auto opt : {OptimizerKind::sgd, OptimizerKind::sgd_momentum, OptimizerKind::adam_like}) {
    TrainConfig cfg;
    cfg.optimizer = opt;
    cfg.learning_rate = 0.02;
    cfg.steps = 40;
    cfg.batch_size = 16;
    const DynamicsRecord rec = train(t, orthogonal_adapter(t.w0, p, SkewParam::zero(2)), cfg);
    EXPECT_FALSE(rec.aborted);
    EXPECT_LT(rec.rows.back().eval_metric, rec.rows.front().eval_metric) << to_string(opt);
  }
  EXPECT_EQ(optimizer_from_string("adam_like"), OptimizerKind::adam_like);
  EXPECT_THROW(optimizer_from_string("lbfgs"), ConfigError);
}

TEST(Probe, ZeroLearningRateIsFlat) {
  const LinearTask t = make_planted_task(small_task());
  const SupportBasis p(Matrix::identity(8).rows_range(0, 4), Provenance::coordinate);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  const ProbeReport rep = probe(t, p, cfg);
  ASSERT_EQ(rep.losses.size(), 21u);
  EXPECT_EQ(rep.losses.front(), heldout_loss(t, t.w0));
  for (double l : rep.losses) EXPECT_EQ(l, rep.losses.front());
  for (const auto& [step, red] : rep.reductions) EXPECT_EQ(red, 0.0);
  EXPECT_EQ(rep.reductions.size(), 4u);
  EXPECT_FALSE(rep.rho.has_value());
}

TEST(Probe, DivergenceIsFlagged) {
  TaskConfig c = small_task();
  c.base = BaseWeightMode::gaussian;
  const LinearTask t = make_planted_task(c);
  const SupportBasis p(Matrix::identity(8), Provenance::coordinate);
  TrainConfig cfg;
  // The orthogonal orbit keeps the loss bounded, so only overflow can diverge.
  cfg.learning_rate = 1e300;
  const ProbeReport rep = probe(t, p, cfg);
  EXPECT_TRUE(rep.diverged);
  EXPECT_TRUE(std::isnan(rep.losses.back()));
}

TEST(Probe, StudyOrderAndRho) {
  const Provenance methods[] = {Provenance::skewgrad, Provenance::random};
  const std::uint64_t seeds[] = {1, 2};
  const auto cells = run_probe_study(small_task(), methods, 2, seeds, {}, TrainConfig{});
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].seed, 1u);
  EXPECT_EQ(cells[1].method, Provenance::random);
  EXPECT_EQ(cells[2].seed, 2u);
  EXPECT_NEAR(*cells[0].report.rho, 1.0, 1e-10);
  EXPECT_LT(*cells[1].report.rho, 1.0);
}

TEST(Sweep, FullFractionCellMatchesDirectRun) {
  SweepSpec spec;
  spec.axis = SweepAxis::data_fraction;
  spec.grid = {1.0, 0.5};
  spec.methods = {Provenance::skewgrad};
  spec.seeds = {4};
  spec.task = small_task();
  spec.r = 2;
  const SweepTable table = sweep(spec);
  ASSERT_EQ(table.cells.size(), 2u);
  const TrainingCell direct =
      run_training_cell(spec.task, Provenance::skewgrad, 2, 1.0, spec.calibration, spec.train, spec.transform, 4);
  EXPECT_EQ(table.cells[0].metric, direct.dynamics.rows.back().eval_metric);
  EXPECT_EQ(*table.cells[0].rho, direct.rho);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  SweepSpec spec;
  spec.axis = SweepAxis::rank;
  spec.grid = {2, 4};
  spec.methods = {Provenance::skewgrad, Provenance::random, Provenance::principal};
  spec.seeds = {1, 2, 3};
  spec.task = small_task();
  const SweepTable a = sweep(spec);
  spec.threads = 4;
  const SweepTable b = sweep(spec);
  ASSERT_EQ(a.cells.size(), 18u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].metric, b.cells[i].metric);
    EXPECT_EQ(a.cells[i].method, b.cells[i].method);
    EXPECT_EQ(a.cells[i].seed, b.cells[i].seed);
  }
  ASSERT_EQ(a.summary.size(), 6u);
  EXPECT_EQ(a.summary[0].count, 3u);
}

TEST(Sweep, BadCellsAreFlaggedNotFatal) {
  SweepSpec spec;
  spec.axis = SweepAxis::rank;
  spec.grid = {0.5, 2};
  spec.methods = {Provenance::skewgrad};
  spec.seeds = {1, 2};
  spec.task = small_task();
  const SweepTable table = sweep(spec);
  EXPECT_TRUE(table.cells[0].flagged);
  EXPECT_FALSE(table.cells[0].note.empty());
  EXPECT_FALSE(table.cells[2].flagged);
  EXPECT_EQ(table.summary[0].count, 0u);
  EXPECT_EQ(table.summary[1].count, 2u);

  spec.grid = {};
  EXPECT_THROW(sweep(spec), ConfigError);
}

TEST(Sweep, CalibrationAxisReportsReduction) {
  SweepSpec spec;
  spec.axis = SweepAxis::calibration_size;
  spec.grid = {1, 4};
  spec.methods = {Provenance::skewgrad};
  spec.seeds = {1};
  spec.task = small_task();
  spec.r = 2;
  spec.calibration.batch_size = 16;
  const SweepTable table = sweep(spec);
  for (const auto& c : table.cells) {
    EXPECT_GT(c.metric, 0.0);
    EXPECT_NEAR(*c.rho, 1.0, 1e-10);
  }
}

TEST(EarlyValidation, IdenticalSupportsTie) {
  const LinearTask t = make_planted_task(small_task());
  const Matrix g = loss_and_grad(t, t.w0).grad;
  const SupportBasis p = make_support(request(Provenance::skewgrad, 2), t.w0, &g);
  const std::vector<SupportBasis> same{p, p};
  const EarlyValidationTable tab = early_validation(t, same, TrainConfig{.steps = 25});
  EXPECT_EQ(tab.losses[0], tab.losses[1]);
  EXPECT_EQ(tab.wins, (std::vector<std::size_t>{25, 25}));
  EXPECT_EQ(tab.window_5_20[0], tab.window_5_20[1]);

  const std::vector<SupportBasis> one{p};
  EXPECT_EQ(early_validation(t, one, TrainConfig{.steps = 25}).wins[0], 25u);
  EXPECT_THROW(early_validation(t, one, TrainConfig{.steps = 10}), ConfigError);
}

TEST(EarlyValidation, WindowIsMeanOfSteps) {
  const LinearTask t = make_planted_task(small_task());
  const std::vector<SupportBasis> sup{SupportBasis(Matrix::identity(8).rows_range(0, 4), Provenance::coordinate)};
  const EarlyValidationTable tab = early_validation(t, sup, TrainConfig{.steps = 25});
  double s = 0.0;
  for (std::size_t k = 5; k <= 20; ++k) s += tab.losses[0][k - 1];
  EXPECT_NEAR(tab.window_5_20[0], s / 16.0, 1e-14);
}

TEST(EarlyValidation, SkewgradBeatsRandomAcrossSeeds) {
  std::vector<double> diffs_sg, diffs_rand;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TaskConfig c;
    c.seed = seed;
    const LinearTask t = make_planted_task(c);
    const Matrix g = loss_and_grad(t, t.w0).grad;
    const std::vector<SupportBasis> sup{make_support(request(Provenance::skewgrad, 4), t.w0, &g),
                                        make_support(request(Provenance::random, 4, seed), t.w0, &g)};
    const EarlyValidationTable tab = early_validation(t, sup, TrainConfig{.steps = 25});
    diffs_sg.push_back(tab.window_5_25[0]);
    diffs_rand.push_back(tab.window_5_25[1]);
  }
  const SampleStats a = sample_stats(diffs_sg), b = sample_stats(diffs_rand);
  EXPECT_GT(b.mean - a.mean, 2.0 * pooled_standard_error(a, b));
}

TEST(Stats, SampleStatsAndPooledError) {
  const std::vector<double> v{1, 2, 3, 4};
  const SampleStats s = sample_stats(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.std, std::sqrt(5.0 / 3.0), 1e-15);
  const SampleStats one = sample_stats(std::vector<double>{7});
  EXPECT_EQ(one.std, 0.0);
  EXPECT_NEAR(pooled_standard_error(s, s), std::sqrt(2 * (5.0 / 3.0) / 4), 1e-15);
  EXPECT_TRUE(std::isnan(sample_stats(std::vector<double>{}).mean));
}
