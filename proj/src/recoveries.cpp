#include "loft/recoveries.hpp"

#include <bit>
#include <cmath>

#include "loft/error.hpp"
#include "loft/linalg.hpp"
#include "loft/orthogonal.hpp"
#include "loft/random.hpp"
#include "loft/support.hpp"

namespace loft {

const char* to_string(RecoveryMethod m) noexcept {
  switch (m) {
    case RecoveryMethod::full_oft: return "full_oft";
    case RecoveryMethod::block_oft: return "block_oft";
    case RecoveryMethod::goft: return "goft";
    case RecoveryMethod::boft: return "boft";
    case RecoveryMethod::hra: return "hra";
    case RecoveryMethod::psoft: return "psoft";
  }
  return "unknown";
}

RecoveryMethod recovery_method_from_string(std::string_view name) {
  if (name == "full_oft") return RecoveryMethod::full_oft;
  if (name == "block_oft") return RecoveryMethod::block_oft;
  if (name == "goft") return RecoveryMethod::goft;
  if (name == "boft") return RecoveryMethod::boft;
  if (name == "hra") return RecoveryMethod::hra;
  if (name == "psoft") return RecoveryMethod::psoft;
  throw ConfigError("unknown recovery method '" + std::string(name) + "'");
}

Matrix givens_block(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Matrix{{c, -s}, {s, c}};
}

namespace {

// One coordinate block and its rotation parameter.
struct Block {
  std::vector<std::size_t> coords;
  SkewParam e;
};

// Everything both the LOFT construction and the reference construction need,
// drawn once from the config so the two sides see identical parameters.
struct MethodParams {
  std::vector<Block> blocks;                       // full_oft, block_oft, boft (stage-major)
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // goft
  std::vector<double> angles;                      // goft
  std::vector<std::vector<double>> reflections;    // hra, unit vectors
  SkewParam psoft_e;                               // psoft
};

SkewParam draw_skew(std::size_t dim, Rng& rng, double scale) {
  if (scale == 0.0) return SkewParam::zero(dim);
  return SkewParam::random(dim, rng, scale);
}

std::vector<std::size_t> range_coords(std::size_t start, std::size_t count) {
  std::vector<std::size_t> c(count);
  for (std::size_t i = 0; i < count; ++i) c[i] = start + i;
  return c;
}

std::size_t boft_stage_count(const RecoveryConfig& cfg, std::size_t d) {
  if (cfg.stages) {
    if (*cfg.stages == 0) throw ConfigError("boft: stages must be at least 1");
    return *cfg.stages;
  }
  return static_cast<std::size_t>(std::countr_zero(d));
}

MethodParams draw_params(const RecoveryConfig& cfg, const Matrix& w0) {
  const std::size_t d = w0.cols();
  if (d == 0) throw ConfigError("recovery: empty weight");
  Rng rng(cfg.seed);
  MethodParams mp;
  switch (cfg.method) {
    case RecoveryMethod::full_oft:
      mp.blocks.push_back({range_coords(0, d), draw_skew(d, rng, cfg.transform_scale)});
      break;
    case RecoveryMethod::block_oft: {
      const std::size_t b = cfg.block_width;
      if (b < 1 || d % b != 0) throw ConfigError("block_oft: block width must divide d_in");
      for (std::size_t i = 0; i < d / b; ++i) mp.blocks.push_back({range_coords(i * b, b), draw_skew(b, rng, cfg.transform_scale)});
      break;
    }
    case RecoveryMethod::boft: {
      if (!std::has_single_bit(d)) throw ConfigError("boft: d_in must be a power of two");
      const std::size_t b = cfg.block_width;
      if (b < 2 || !std::has_single_bit(b) || b > d) throw ConfigError("boft: block width must be a power of two in [2, d_in]");
      const std::size_t m = static_cast<std::size_t>(std::countr_zero(d));
      const std::size_t stages = boft_stage_count(cfg, d);
      for (std::size_t l = 0; l < stages; ++l) {
        for (std::size_t i = 0; i < d / b; ++i) {
          mp.blocks.push_back({butterfly_block_indices(d, {l % m, i, b}), draw_skew(b, rng, cfg.transform_scale)});
        }
      }
      break;
    }
    case RecoveryMethod::goft: {
      mp.pairs = cfg.givens_pairs;
      mp.angles = cfg.givens_angles;
      if (mp.pairs.empty()) {
        for (std::size_t i = 0; i + 1 < d; i += 2) mp.pairs.emplace_back(i, i + 1);
      }
      if (mp.angles.empty()) {
        for (std::size_t i = 0; i < mp.pairs.size(); ++i) mp.angles.push_back(cfg.transform_scale * rng.gaussian());
      }
      if (mp.angles.size() != mp.pairs.size()) throw ConfigError("goft: one angle per coordinate pair required");
      for (auto [i, j] : mp.pairs) {
        if (i == j || i >= d || j >= d) throw ConfigError("goft: invalid coordinate pair");
      }
      break;
    }
    case RecoveryMethod::hra: {
      auto vectors = cfg.householder_vectors;
      if (vectors.empty()) {
        if (cfg.reflections == 0) throw ConfigError("hra: at least one reflection required");
        for (std::size_t l = 0; l < cfg.reflections; ++l) {
          std::vector<double> u(d);
          for (double& v : u) v = rng.gaussian();
          vectors.push_back(std::move(u));
        }
      }
      for (auto& u : vectors) {
        if (u.size() != d) throw ConfigError("hra: reflection vector length must equal d_in");
        double n2 = 0.0;
        for (double v : u) n2 += v * v;
        if (!(n2 > 0.0)) throw ConfigError("hra: zero reflection vector");
        const double inv = 1.0 / std::sqrt(n2);
        for (double& v : u) v *= inv;
      }
      mp.reflections = std::move(vectors);
      break;
    }
    case RecoveryMethod::psoft: {
      const std::size_t r = cfg.rank;
      if (r < 1 || r > std::min(w0.rows(), d)) throw ConfigError("psoft: rank must lie in [1, min(d_out, d_in)]");
      mp.psoft_e = draw_skew(r, rng, cfg.transform_scale);
      break;
    }
  }
  return mp;
}

Matrix coordinate_rows(std::span<const std::size_t> coords, std::size_t d) {
  Matrix p(coords.size(), d);
  for (std::size_t i = 0; i < coords.size(); ++i) p(i, coords[i]) = 1.0;
  return p;
}

LoftAdapter build_adapter(const RecoveryConfig& cfg, const Matrix& w0, const MethodParams& mp) {
  const std::size_t d = w0.cols();
  LoftAdapter a(w0);
  switch (cfg.method) {
    case RecoveryMethod::full_oft:
    case RecoveryMethod::block_oft:
      for (const auto& blk : mp.blocks) {
        a.add_factor({SupportBasis(coordinate_rows(blk.coords, d), Provenance::coordinate), TransformSpec::orthogonal(blk.e)});
      }
      break;
    case RecoveryMethod::boft:
      for (const auto& blk : mp.blocks) {
        a.add_factor({SupportBasis(coordinate_rows(blk.coords, d), Provenance::butterfly), TransformSpec::orthogonal(blk.e)});
      }
      break;
    case RecoveryMethod::goft:
      for (std::size_t l = 0; l < mp.pairs.size(); ++l) {
        const std::size_t coords[2] = {mp.pairs[l].first, mp.pairs[l].second};
        a.add_factor({SupportBasis(coordinate_rows(coords, d), Provenance::coordinate), TransformSpec::fixed(givens_block(mp.angles[l]))});
      }
      break;
    case RecoveryMethod::hra:
      for (const auto& u : mp.reflections) {
        a.add_factor({SupportBasis(Matrix(1, d, u), Provenance::explicit_basis), TransformSpec::fixed(Matrix{{-1.0}})});
      }
      break;
    case RecoveryMethod::psoft: {
      SupportRequest req;
      req.method = Provenance::principal;
      req.r = cfg.rank;
      a.add_factor({make_support(req, w0), TransformSpec::orthogonal(mp.psoft_e)});
      break;
    }
  }
  return a;
}

// Reference right transforms, written out entry by entry from each method's definition.

Matrix givens_matrix(std::size_t d, std::size_t i, std::size_t j, double theta) {
  Matrix g = Matrix::identity(d);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  g(i, i) = c;
  g(i, j) = -s;
  g(j, i) = s;
  g(j, j) = c;
  return g;
}

Matrix householder_matrix(const std::vector<double>& u) {
  const std::size_t d = u.size();
  Matrix h = Matrix::identity(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) h(i, j) -= 2.0 * u[i] * u[j];
  return h;
}

Matrix reference_weight(const RecoveryConfig& cfg, const Matrix& w0, const MethodParams& mp) {
  const std::size_t d = w0.cols();
  switch (cfg.method) {
    case RecoveryMethod::full_oft: return matmul(w0, cayley(mp.blocks.front().e));
    case RecoveryMethod::block_oft: {
      // One block-diagonal matrix holding every block at once.
      Matrix t = Matrix::identity(d);
      for (const auto& blk : mp.blocks) {
        const Matrix q = cayley(blk.e);
        for (std::size_t a = 0; a < blk.coords.size(); ++a)
          for (std::size_t b = 0; b < blk.coords.size(); ++b) t(blk.coords[a], blk.coords[b]) = q(a, b);
      }
      return matmul(w0, t);
    }
    case RecoveryMethod::boft: {
      // Per stage, a permuted block-diagonal matrix; stages multiply in order.
      const std::size_t per_stage = d / cfg.block_width;
      Matrix w = w0;
      for (std::size_t start = 0; start < mp.blocks.size(); start += per_stage) {
        Matrix stage = Matrix::identity(d);
        for (std::size_t i = start; i < start + per_stage; ++i) {
          const Matrix q = cayley(mp.blocks[i].e);
          const auto& c = mp.blocks[i].coords;
          for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = 0; b < c.size(); ++b) stage(c[a], c[b]) = q(a, b);
        }
        w = matmul(w, stage);
      }
      return w;
    }
    case RecoveryMethod::goft: {
      Matrix w = w0;
      for (std::size_t l = 0; l < mp.pairs.size(); ++l) {
        w = matmul(w, givens_matrix(d, mp.pairs[l].first, mp.pairs[l].second, mp.angles[l]));
      }
      return w;
    }
    case RecoveryMethod::hra: {
      Matrix w = w0;
      for (const auto& u : mp.reflections) w = matmul(w, householder_matrix(u));
      return w;
    }
    case RecoveryMethod::psoft: {
      // U_⊥Σ_⊥V_⊥ᵀ + U_rΣ_r·T·V_rᵀ
      const SvdResult s = svd(w0);
      const std::size_t r = cfg.rank;
      const std::size_t k = s.sigma.size();
      const Matrix t = cayley(mp.psoft_e);
      Matrix us_r(w0.rows(), r);
      for (std::size_t i = 0; i < w0.rows(); ++i)
        for (std::size_t j = 0; j < r; ++j) us_r(i, j) = s.u(i, j) * s.sigma[j];
      Matrix w = matmul(matmul(us_r, t), s.vt.rows_range(0, r));
      for (std::size_t j = r; j < k; ++j) {
        for (std::size_t i = 0; i < w0.rows(); ++i)
          for (std::size_t c = 0; c < d; ++c) w(i, c) += s.u(i, j) * s.sigma[j] * s.vt(j, c);
      }
      return w;
    }
  }
  return {};
}

const char* scope_note(RecoveryMethod m) {
  switch (m) {
    case RecoveryMethod::full_oft: return "core right-multiplicative rotation";
    case RecoveryMethod::block_oft: return "core block-diagonal rotation";
    case RecoveryMethod::goft: return "strictly orthogonal Givens products; relaxed-orthogonality variant excluded";
    case RecoveryMethod::boft: return "core butterfly block rotations";
    case RecoveryMethod::hra: return "Householder product only; orthogonality regularizer excluded";
    case RecoveryMethod::psoft: return "principal-subspace rotation only; scaling and relaxation components excluded";
  }
  return "";
}

}  // namespace

LoftAdapter instantiate(const RecoveryConfig& cfg, const Matrix& w0) {
  return build_adapter(cfg, w0, draw_params(cfg, w0));
}

RecoveryReport verify_equivalence(const RecoveryConfig& cfg, const Matrix& w0) {
  const MethodParams mp = draw_params(cfg, w0);
  const LoftAdapter adapter = build_adapter(cfg, w0, mp);
  const Matrix merged = merge(adapter);
  const Matrix reference = reference_weight(cfg, w0, mp);

  RecoveryReport rep;
  rep.method = cfg.method;
  rep.d_out = w0.rows();
  rep.d_in = w0.cols();
  rep.factors = adapter.factors().size();
  rep.scope_note = scope_note(cfg.method);
  const double ref_norm = frobenius_norm(reference);
  const double diff = frobenius_norm(merged - reference);
  rep.residual = ref_norm > 0.0 ? diff / ref_norm : diff;
  rep.pass = rep.residual <= kRecoveryTolerance;

  if (cfg.method == RecoveryMethod::psoft) {
    const Matrix basis = right_singular_basis(w0);
    double worst = 0.0;
    for (std::size_t j = cfg.rank; j < basis.rows(); ++j) {
      const Matrix v = basis.rows_range(j, 1).transpose();
      worst = std::max(worst, frobenius_norm(matmul(merged, v) - matmul(w0, v)));
    }
    rep.fixed_point_residual = worst;
    rep.pass = rep.pass && worst <= 1e-10 * std::max(1.0, spectral_norm(w0));
  }
  if (cfg.method == RecoveryMethod::hra) {
    Matrix t = Matrix::identity(w0.cols());
    for (const auto& f : adapter.factors()) t = matmul(t, build_s(f));
    rep.transform_determinant = determinant(t);
  }
  return rep;
}

}  // namespace loft
