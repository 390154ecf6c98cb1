#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/integrand.hpp"
#include "nlf/verdict.hpp"

namespace nlf {

struct MinimizeConfig {
  std::size_t max_iters = 500;
  double step0 = 1.0;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double grad_tol = 1e-7;
  std::size_t max_shrinks = 60;
  /// Componentwise bounds [lo, hi]; realises ‖u‖_∞ <= M with lo = -M, hi = M.
  std::optional<std::pair<double, double>> box;

  void validate() const;
};

struct TraceRow {
  std::size_t iter = 0;
  double J = 0.0;
  double step = 0.0;
  double grad_norm = 0.0;
};

enum class MinimizeStatus { kConverged, kMaxIters, kStalled };
const char* to_string(MinimizeStatus s);

struct MinimizeResult {
  GridFunction u_star;
  double J_star = 0.0;
  std::size_t iters = 0;
  double grad_norm = 0.0;
  bool converged = false;
  MinimizeStatus status = MinimizeStatus::kMaxIters;
  std::vector<TraceRow> trace;
};

/// Projected gradient descent on the discrete J with Armijo backtracking.
/// The search direction is the L²-Riesz representative −∇J / weight of the
/// discrete gradient; grad_norm is the discrete L² norm of the projected
/// gradient step. Throws kNonSmooth / kAsymmetric.
MinimizeResult minimize(const Integrand& f, const GridFunction& u0, const MinimizeConfig& cfg = {});

/// max over 32 seeded unit directions v of
/// |⟨∇J, v⟩ − (J(u + hv) − J(u − hv)) / 2h| / (1 + |⟨∇J, v⟩|).
double grad_check(const Integrand& f, const GridFunction& u, double h = 1e-5, std::uint64_t seed = kDefaultSeed);

std::string trace_csv(const MinimizeResult& r);

}  // namespace nlf
