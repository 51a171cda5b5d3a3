#include "loft/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "loft/adapter.hpp"
#include "loft/linalg.hpp"
#include "loft/orthogonal.hpp"
#include "loft/random.hpp"
#include "loft/recoveries.hpp"
#include "loft/support.hpp"

namespace loft {

namespace {

enum SuiteTag : std::uint64_t {
  kGeometry = 1,
  kGradient,
  kBound,
  kRho,
  kPrincipal,
  kCayley,
  kRecovery,
  kRank,
};

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> dist(lo, hi);
  return dist(rng.engine());
}

// Running maximum of a residual, remembering the worst instance.
class Tracker {
 public:
  Tracker(std::string suite, double tol) { res_.suite = std::move(suite), res_.tolerance = tol; }

  void record(std::size_t instance, double residual, const std::string& detail = {}) {
    ++res_.trials;
    if (!(residual <= res_.max_residual) || res_.trials == 1) {
      res_.max_residual = residual;
      worst_ = instance;
      worst_detail_ = detail;
    }
  }

  SuiteResult finish(std::uint64_t seed) {
    res_.pass = res_.trials > 0 && res_.max_residual <= res_.tolerance;
    if (!res_.pass) res_.failing_instance = describe(seed);
    return res_;
  }

  SuiteResult finish_with(std::uint64_t seed, bool pass) {
    res_.pass = pass;
    if (!pass) res_.failing_instance = describe(seed);
    return res_;
  }

  SuiteResult& result() { return res_; }

 private:
  std::string describe(std::uint64_t seed) const {
    std::ostringstream os;
    os << "instance " << worst_ << " (seed " << seed << "), residual " << res_.max_residual;
    if (!worst_detail_.empty()) os << ", " << worst_detail_;
    return os.str();
  }

  SuiteResult res_;
  std::size_t worst_ = 0;
  std::string worst_detail_;
};

std::string dims(std::size_t d_out, std::size_t d_in, std::size_t r) {
  return "d_out=" + std::to_string(d_out) + " d_in=" + std::to_string(d_in) + " r=" + std::to_string(r);
}

SupportBasis random_support(std::size_t r, std::size_t d, Rng& rng) {
  return SupportBasis(random_orthonormal_rows(r, d, rng), Provenance::random);
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

std::vector<SuiteResult> check_geometry(const CheckOptions& opts, std::size_t trials) {
  Tracker gram("geometry_gram", 1e-9);
  Tracker sv("geometry_singular_values", 1e-8);
  Tracker norms("geometry_norms", 1e-10);
  Tracker rank("geometry_rank", 0.0);

  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kGeometry, i));
    const std::size_t d_in = uniform_index(rng, 2, 32);
    const std::size_t d_out = uniform_index(rng, 1, 32);
    Matrix w0 = rng.gaussian_matrix(d_out, d_in);
    if (i % 4 == 3) {
      // Rank-deficient base weights exercise the rank check.
      const std::size_t k = uniform_index(rng, 1, std::min(d_out, d_in));
      w0 = matmul(rng.gaussian_matrix(d_out, k), rng.gaussian_matrix(k, d_in));
    }
    LoftAdapter a(w0);
    const std::size_t layers = uniform_index(rng, 1, 3);
    std::size_t r = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      r = uniform_index(rng, 1, d_in);
      Matrix p = random_orthonormal_rows(r, d_in, rng);
      SupportBasis support = opts.corrupt_support ? SupportBasis::unchecked(p * 1.5, Provenance::random)
                                                  : SupportBasis(std::move(p), Provenance::random);
      a.add_factor({std::move(support), TransformSpec::orthogonal(SkewParam::random(r, rng, 1.0))});
    }
    const std::string detail = dims(d_out, d_in, r) + " factors=" + std::to_string(layers);
    const Matrix wp = merge(a);

    const Matrix g0 = row_gram(w0);
    gram.record(i, frobenius_norm(row_gram(wp) - g0) / frobenius_norm(g0), detail);

    const auto s0 = singular_values(w0);
    const auto s1 = singular_values(wp);
    double sv_err = 0.0;
    for (std::size_t k = 0; k < s0.size(); ++k) sv_err = std::max(sv_err, std::abs(s1[k] - s0[k]) / s0.front());
    sv.record(i, sv_err, detail);

    const double fro = relative(frobenius_norm(wp), frobenius_norm(w0));
    const double spec = std::abs(s1.front() - s0.front()) / s0.front();
    norms.record(i, std::max(fro, spec), detail);

    const double r0 = static_cast<double>(numerical_rank(w0));
    const double r1 = static_cast<double>(numerical_rank(wp));
    rank.record(i, std::abs(r1 - r0), detail);
  }
  return {gram.finish(opts.seed), sv.finish(opts.seed), norms.finish(opts.seed), rank.finish(opts.seed)};
}

std::vector<SuiteResult> check_gradient(const CheckOptions& opts, std::size_t trials) {
  Tracker exact("gradient_exactness", 1e-10);
  Tracker fd("directional_derivative_fd", 1e-5);
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kGradient, i));
    const std::size_t d_in = uniform_index(rng, 2, 16);
    const std::size_t d_out = uniform_index(rng, 1, 16);
    const std::size_t r = uniform_index(rng, 2, d_in);
    const Matrix w0 = rng.gaussian_matrix(d_out, d_in);
    const Matrix target = rng.gaussian_matrix(d_out, d_in);
    // L(W) = ½‖W − target‖_F², so G = W₀ − target.
    const Matrix g = w0 - target;
    const SupportBasis support = random_support(r, d_in, rng);
    const std::string detail = dims(d_out, d_in, r);

    LoftAdapter a(w0);
    a.add_factor({support, TransformSpec::orthogonal_identity(r)});
    const Matrix analytic = transform_gradients(a, g).front();
    exact.record(i, max_abs_diff(analytic, projected_gradient(w0, g, support)), detail);

    const SkewParam dir = SkewParam::random(r, rng, 1.0);
    auto loss_at = [&](double t) {
      SkewParam e = dir;
      e *= t;
      LoftAdapter b(w0);
      b.add_factor({support, TransformSpec::orthogonal(e)});
      return 0.5 * frobenius_norm_sq(merge(b) - target);
    };
    const double h = 1e-5;
    const double numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
    const double predicted = directional_derivative(w0, g, support, dir);
    fd.record(i, std::abs(numeric - predicted) / std::max(std::abs(predicted), 1e-12), detail);
  }
  return {exact.finish(opts.seed), fd.finish(opts.seed)};
}

std::vector<SuiteResult> check_skew_bound(const CheckOptions& opts, std::size_t trials) {
  Tracker bound("skew_bound", 1e-8);
  Tracker equality("skewgrad_equality", 1e-8);
  std::size_t gapped = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kBound, i));
    const std::size_t d = uniform_index(rng, 2, 24);
    const std::size_t d_out = uniform_index(rng, 1, 24);
    const std::size_t r = uniform_index(rng, 1, d);
    const Matrix w0 = rng.gaussian_matrix(d_out, d);
    const Matrix g = rng.gaussian_matrix(d_out, d);
    const SkewSignal s = skew_signal(w0, g);
    const double b = s.bound(r);
    const std::string detail = dims(d_out, d, r);

    const SupportBasis random = random_support(r, d, rng);
    const double captured = frobenius_norm_sq(projected_gradient(w0, g, random));
    bound.record(i, std::max(0.0, captured - b) / std::max(b, 1.0), detail);

    const std::size_t half = r / 2;
    const bool gap_ok = half == 0 || half >= s.mu.size() || s.mu[half - 1] - s.mu[half] > 1e-6;
    if (gap_ok) {
      ++gapped;
      SupportRequest req;
      req.method = Provenance::skewgrad;
      req.r = r;
      const SupportBasis sg = make_support(req, w0, &g);
      const double c = frobenius_norm_sq(projected_gradient(w0, g, sg));
      equality.record(i, b > 0.0 ? std::abs(c - b) / b : c, detail);
    }
  }
  auto eq = equality.finish(opts.seed);
  eq.satisfied = gapped;
  return {bound.finish(opts.seed), eq};
}

SuiteResult check_rho_maximality(const CheckOptions& opts, std::size_t trials) {
  Tracker t("rho_maximality", 1e-8);
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kRho, i));
    const std::size_t d = uniform_index(rng, 3, 24);
    const std::size_t d_out = uniform_index(rng, 2, 24);
    const std::size_t r = uniform_index(rng, 2, d - 1);
    const Matrix w0 = rng.gaussian_matrix(d_out, d);
    const Matrix g = rng.gaussian_matrix(d_out, d);
    double worst = 0.0;
    SupportRequest req;
    req.r = r;
    req.seed = derive_seed(opts.seed, kRho, i + trials);
    req.method = Provenance::skewgrad;
    const double rho_sg = rho_score(w0, g, make_support(req, w0, &g));
    worst = std::abs(rho_sg - 1.0);
    for (Provenance m : {Provenance::principal, Provenance::gradsvd, Provenance::random}) {
      req.method = m;
      worst = std::max(worst, rho_score(w0, g, make_support(req, w0, &g)) - rho_sg);
    }
    t.record(i, worst, dims(d_out, d, r));
  }
  return t.finish(opts.seed);
}

std::vector<SuiteResult> check_principal_invariance(const CheckOptions& opts, std::size_t trials) {
  Tracker generic("principal_generic_noninvariance", 0.0);
  std::size_t noninvariant = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kPrincipal, i));
    const std::size_t d = uniform_index(rng, 4, 20);
    const std::size_t r = uniform_index(rng, 1, d - 1);
    const Matrix w0 = rng.gaussian_matrix(d, d);
    const Matrix g = rng.gaussian_matrix(d, d);
    const PsoftOptimality o = psoft_optimality_check(w0, g, r);
    const double ratio = o.f_rperp_norm / o.f_norm;
    if (ratio > 1e-4) ++noninvariant;
    generic.record(i, -ratio, dims(d, d, r));
  }
  // Count-based: the residual is the fraction of instances that came out invariant.
  auto gen = generic.finish_with(opts.seed, noninvariant * 100 >= 95 * trials);
  gen.satisfied = noninvariant;
  gen.max_residual = static_cast<double>(trials - noninvariant) / static_cast<double>(trials);
  gen.tolerance = 0.05;

  Tracker aligned("principal_aligned_invariance", 1e-8);
  const std::size_t aligned_trials = 20;
  for (std::size_t i = 0; i < aligned_trials; ++i) {
    Rng rng(derive_seed(opts.seed, kPrincipal, trials + i));
    const std::size_t d = uniform_index(rng, 4, 16);
    const std::size_t r = 2 * uniform_index(rng, 1, (d - 1) / 2);
    // W₀ = U·diag(σ)·Vᵀ with distinct σ; F is block diagonal in V's basis with
    // its dominant planes inside the top-r block, and G = W₀⁻ᵀF.
    const Matrix u = random_orthogonal(d, rng);
    const Matrix vt = random_orthogonal(d, rng);
    std::vector<double> sigma(d);
    for (std::size_t k = 0; k < d; ++k) sigma[k] = static_cast<double>(2 * d - k);
    const Matrix w0 = matmul(matmul(u, Matrix::diagonal(sigma)), vt);
    Matrix k_block(d, d);
    for (std::size_t p = 0; p + 1 < d; p += 2) {
      const double mu = p < r ? 10.0 + rng.uniform() : 0.1 * rng.uniform();
      k_block(p, p + 1) = mu;
      k_block(p + 1, p) = -mu;
    }
    const Matrix f = matmul(matmul(vt.transpose(), k_block), vt);
    const Matrix g = solve(w0.transpose(), f);
    const PsoftOptimality o = psoft_optimality_check(w0, g, r);
    const double residual = std::max(o.f_rperp_norm / o.f_norm, std::abs(o.rho_principal - 1.0));
    aligned.record(i, residual, dims(d, d, r));
  }
  return {gen, aligned.finish(opts.seed)};
}

std::vector<SuiteResult> check_cayley(const CheckOptions& opts, std::size_t trials) {
  Tracker orth("cayley_orthogonality", 1e-10);
  Tracker transpose("cayley_transpose", 1e-10);
  Tracker adjoint("cayley_adjoint_fd", 1e-5);
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kCayley, i));
    const std::size_t r = uniform_index(rng, 2, 12);
    const SkewParam e = SkewParam::random(r, rng, 1.0);
    const std::string detail = "r=" + std::to_string(r);
    const Matrix q = cayley(e);
    orth.record(i, frobenius_norm(matmul(q.transpose(), q) - Matrix::identity(r)), detail);
    transpose.record(i, frobenius_norm(cayley(-e) - q.transpose()), detail);

    // L(E) = ⟨C, Q(E)⟩ along a random skew direction D.
    const Matrix c = rng.gaussian_matrix(r, r);
    const SkewParam dir = SkewParam::random(r, rng, 1.0);
    const Matrix grad = cayley_adjoint(e, c);
    const double predicted = frobenius_inner(grad, dir.matrix());
    const double h = 1e-5;
    SkewParam plus = SkewParam::from_lower(e.matrix() + h * dir.matrix());
    SkewParam minus = SkewParam::from_lower(e.matrix() - h * dir.matrix());
    const double numeric = (frobenius_inner(c, cayley(plus)) - frobenius_inner(c, cayley(minus))) / (2.0 * h);
    adjoint.record(i, std::abs(numeric - predicted) / std::max(std::abs(predicted), 1e-12), detail);
  }
  return {orth.finish(opts.seed), transpose.finish(opts.seed), adjoint.finish(opts.seed)};
}

SuiteResult check_recoveries(const CheckOptions& opts, std::size_t seeds_per_method) {
  Tracker t("recoveries", kRecoveryTolerance);
  std::size_t instance = 0;
  bool extra_ok = true;
  for (RecoveryMethod m : {RecoveryMethod::full_oft, RecoveryMethod::block_oft, RecoveryMethod::goft,
                           RecoveryMethod::boft, RecoveryMethod::hra, RecoveryMethod::psoft}) {
    for (std::size_t s = 0; s < seeds_per_method; ++s, ++instance) {
      const std::uint64_t seed = derive_seed(opts.seed, kRecovery, instance);
      Rng rng(seed);
      const std::size_t d_in = 8;
      const std::size_t d_out = 4 + 4 * s;
      RecoveryConfig cfg;
      cfg.method = m;
      cfg.seed = seed;
      cfg.block_width = m == RecoveryMethod::block_oft ? 4 : 2;
      cfg.reflections = 1 + s;
      cfg.rank = 1 + s;
      const RecoveryReport rep = verify_equivalence(cfg, rng.gaussian_matrix(d_out, d_in));
      double residual = rep.residual;
      if (rep.fixed_point_residual) residual = std::max(residual, *rep.fixed_point_residual);
      if (!rep.pass) extra_ok = false;
      t.record(instance, residual, std::string(to_string(m)) + " " + dims(d_out, d_in, cfg.rank));
    }
  }
  return t.finish_with(opts.seed, extra_ok && t.result().max_residual <= kRecoveryTolerance);
}

SuiteResult check_delta_rank(const CheckOptions& opts, std::size_t trials) {
  Tracker t("delta_rank", 0.0);
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng(derive_seed(opts.seed, kRank, i));
    const std::size_t d_in = uniform_index(rng, 2, 24);
    const std::size_t d_out = uniform_index(rng, 1, 24);
    const std::size_t r = uniform_index(rng, 1, d_in);
    const Matrix w0 = rng.gaussian_matrix(d_out, d_in);
    const SupportBasis support = random_support(r, d_in, rng);
    LoftAdapter a(w0);
    if (i % 2 == 0) {
      a.add_factor({support, TransformSpec::orthogonal(SkewParam::random(r, rng, 1.0))});
    } else {
      a.add_factor({support, TransformSpec::free(rng.gaussian_matrix(r, r))});
    }
    const double rank = static_cast<double>(numerical_rank(delta(a)));
    t.record(i, std::max(0.0, rank - static_cast<double>(r)),
             dims(d_out, d_in, r) + (i % 2 == 0 ? " orthogonal" : " free"));
  }
  return t.finish(opts.seed);
}

std::vector<SuiteResult> run_all_checks(const CheckOptions& opts) {
  std::vector<SuiteResult> out;
  auto append = [&](std::vector<SuiteResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  append(check_geometry(opts));
  append(check_gradient(opts));
  append(check_skew_bound(opts));
  out.push_back(check_rho_maximality(opts));
  append(check_principal_invariance(opts));
  append(check_cayley(opts));
  out.push_back(check_recoveries(opts));
  out.push_back(check_delta_rank(opts));
  return out;
}

}  // namespace loft
