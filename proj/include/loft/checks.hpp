#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace loft {

/// Outcome of one seeded property suite.
struct SuiteResult {
  std::string suite;
  std::size_t trials = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  // For count-based suites: instances satisfying the property.
  std::optional<std::size_t> satisfied;
  // Description of the worst instance when the suite fails.
  std::string failing_instance;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  // Negative control: feed non-orthonormal supports into the geometry suite.
  bool corrupt_support = false;
};

// Each suite draws its instances from derive_seed(seed, suite tag, index).

/// Gram, singular-value, norm and rank preservation of W⁺ = W₀·∏S on random
/// multi-factor orthogonal adapters, d ≤ 32. Four results.
std::vector<SuiteResult> check_geometry(const CheckOptions& opts, std::size_t trials = 200);

/// At E = 0 the adapter gradient equals P·skew(W₀ᵀG)·Pᵀ (absolute 1e-10), and
/// the directional derivative matches central differences (relative 1e-5).
std::vector<SuiteResult> check_gradient(const CheckOptions& opts, std::size_t trials = 100);

/// ‖PFPᵀ‖² ≤ 2Σμ_k² on random supports, with equality for SkewGrad when the
/// pair gap exceeds 1e-6.
std::vector<SuiteResult> check_skew_bound(const CheckOptions& opts, std::size_t trials = 500);

/// ρ(skewgrad) = 1 and dominates principal, gradsvd and random supports.
SuiteResult check_rho_maximality(const CheckOptions& opts, std::size_t trials = 100);

/// Principal supports are generically not invariant under F; on constructed
/// aligned instances invariance and ρ = 1 hold.
std::vector<SuiteResult> check_principal_invariance(const CheckOptions& opts, std::size_t trials = 100);

/// Orthogonality, Q(−E) = Q(E)ᵀ and the adjoint against central differences.
std::vector<SuiteResult> check_cayley(const CheckOptions& opts, std::size_t trials = 100);

/// Every recovery method against its reference construction.
SuiteResult check_recoveries(const CheckOptions& opts, std::size_t seeds_per_method = 4);

/// rank(ΔW) ≤ r for single-factor adapters of orthogonal and free kind.
SuiteResult check_delta_rank(const CheckOptions& opts, std::size_t trials = 200);

/// All of the above in a fixed order.
std::vector<SuiteResult> run_all_checks(const CheckOptions& opts);

}  // namespace loft
