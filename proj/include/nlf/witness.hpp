#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/expr.hpp"
#include "nlf/functional.hpp"
#include "nlf/integrand.hpp"

namespace nlf {

// ------------------------------------------------------------ checkerboards

/// x ∈ S_δ: x lies in the open cube of side δ centred at ξδ with Σξ even.
/// Throws kBoundary on a cube face, kInvalidArgument for δ <= 0.
bool checkerboard_membership(double delta, std::span<const double> x);

/// Axis-aligned box in R^{2m}: the first m intervals bound x, the last m
/// bound y.
struct PairBox {
  std::vector<Interval> x;
  std::vector<Interval> y;
};

/// L^{2m}((S_δ × S_δ^c) ∩ E) / L^{2m}(E) for E a union of pairwise disjoint
/// boxes, by midpoint counting at `resolution` cells per axis and box.
/// Throws kUndefinedFraction for an empty E.
double coverage_fraction(const std::vector<PairBox>& E, double delta, std::size_t resolution);

/// Fraction of the cells of [lo, hi) (midpoint rule, `resolution` cells)
/// whose cube index along one axis is even; points on faces count one half.
double even_parity_fraction(const Interval& iv, double delta, std::size_t resolution);

// ------------------------------------------------------------- oscillation

/// χ of axis-1 stripes: k stripes of width |X₁|/k, each starting with a
/// θ-fraction assigned to ω₁. Cells are assigned by their centres, which
/// rounds stripe boundaries to cell edges.
std::vector<bool> stripe_indicator(const Grid& grid, double theta, std::size_t k);

/// u_k = χ ω₁ + (1 − χ) ω₂. Throws kMismatch for different grids.
GridFunction oscillation_sequence(double theta, const GridFunction& omega1, const GridFunction& omega2,
                                  std::size_t k);

// ------------------------------------------------------ sequences, probes

enum class ConvergenceMode { kWeak, kWeakStar, kStrong };
const char* to_string(ConvergenceMode m);

struct SequencePlan {
  std::string kind;  // "scalar-shrink", "oscillation", "strong" or "custom"
  std::function<GridFunction(std::size_t)> generator;
  GridFunction declared_limit;
  ConvergenceMode mode = ConvergenceMode::kStrong;
};

/// u_k = limit + direction / k.
SequencePlan scalar_shrink_plan(const GridFunction& limit, const GridFunction& direction);
/// u_k = oscillation_sequence(θ, ω₁, ω₂, k), limit θω₁ + (1 − θ)ω₂.
SequencePlan oscillation_plan(double theta, const GridFunction& omega1, const GridFunction& omega2);
/// u_k = limit + direction / k², labelled strong.
SequencePlan strong_plan(const GridFunction& limit, const GridFunction& direction);

/// Pairings ∫ u·h against the fixed dictionary {1, x_j, x_j², step(x_j − mid_j)}
/// per component; names are returned alongside.
std::vector<std::string> pairing_dictionary_names(const Grid& grid);
std::vector<double> pairings(const GridFunction& u);

struct LscProbeReport {
  std::vector<double> J_values;  // k = 1..k_max
  double J_limit = 0.0;
  double liminf_estimate = 0.0;
  std::size_t tail_window = 0;
  double tolerance = 0.0;
  double quadrature_error = 0.0;
  bool violated = false;
  double margin = 0.0;  // J_limit − liminf_estimate
  double gap_decay = 0.0;  // fitted exponent a of J_limit − J_k ~ k^{-a} over the tail
  std::vector<double> pairing_defects;  // per k, max over the dictionary
  std::string plan_kind;
  ConvergenceMode mode = ConvergenceMode::kStrong;
  std::string integrand;
};

/// liminf is estimated as the minimum over the last max(3, k_max/4) values;
/// violated when it lies below J(limit) − τ, τ = 1e-6(1 + |J(limit)|) plus a
/// roundoff-scale quadrature error estimate, and the tail gap is not closing
/// (gap_decay < 1/2).
LscProbeReport lsc_probe(const Integrand& f, const SequencePlan& plan, std::size_t k_max);

std::string lsc_probe_csv(const LscProbeReport& r);

// -------------------------------------------------- integrability witness

/// Vector-valued function of x given by one expression per component.
struct FieldExpr {
  std::vector<Expr> components;
  std::size_t dim_m = 1;

  static FieldExpr parse(const std::vector<std::string>& texts, std::size_t dim_m);
  static FieldExpr constant(std::vector<double> value, std::size_t dim_m);
  GridFunction sample(const GridPtr& grid, Exponent p = Exponent(2.0)) const;
};

struct IntegrabilityOptions {
  std::size_t base_nodes = 64;   // per axis at the coarsest level
  std::size_t max_nodes = 4096;  // per axis at the finest level
  double divergence_threshold = 1e12;
  std::size_t max_depth = 12;
};

struct NestLevel {
  double measure = 0.0;        // L^m(Ã_ℓ)
  double self_integral = 0.0;  // ∫_Ã ∫_Ã g
  std::size_t N_l = 0;         // number of dyadic layers E_{j,ℓ} used
  double delta = 0.0;
  double min_coverage = 0.0;   // min over used layers of the S_δ × S_δ^c share
};

struct IntegrabilityWitness {
  bool found = false;
  std::string branch;  // "a-split", "checkerboard" or "none"
  std::vector<std::size_t> levels;
  std::vector<double> refinement_values;  // ∬ g at each level
  std::optional<GridFunction> u;
  double J_u = 0.0;
  double lower_bound = 0.0;  // ∫_S ∫_{S^c} g on the finest grid
  double layered_bound = 0.0;  // Σ 2^{j−1} L^{2m}((S×S^c) ∩ E_{j,ℓ}), E_j = {2^{j−1} <= g < 2^j}
  std::vector<NestLevel> nest;
  std::vector<double> split;  // a-split: axis, position, orientation
  std::vector<std::string> notes;
};

/// Detects divergence of ∬ f(x, y, φ(x), ψ(y)) by refinement (two successive
/// doublings, or the threshold), then glues φ and ψ on a set S as in the
/// divergence argument: an A-split if one diverges, otherwise nested halving
/// with checkerboard layers. Non-divergent input yields found = false.
IntegrabilityWitness integrability_witness(const Integrand& f, const Domain& domain, const FieldExpr& phi,
                                           const FieldExpr& psi, const IntegrabilityOptions& opts = {});

// ---------------------------------------------------- homogeneous witness

struct HomogeneousOptions {
  std::size_t blocks = 8;
  std::size_t nodes = 1u << 16;  // total grid nodes
  std::size_t search_budget = 4000;
  std::uint64_t seed = kDefaultSeed;
};

struct HomogeneousWitness {
  bool found = false;
  std::optional<GridFunction> u;
  std::vector<std::vector<double>> w_k, z_k;
  std::vector<double> ratios;
  std::vector<double> measure_E, measure_F;  // after rounding down to cells
  std::vector<double> block_lower_bounds;    // f(w_k,z_k) L(E_k) L(F_k)
  std::vector<double> truncated_J;           // J of u restricted to blocks 1..K
  double norm = 0.0;                         // ‖u‖_p
  double norm_bound = 0.0;                   // L^m(X)^{1/p}
  std::vector<std::string> notes;
};

/// Builds u = Σ (w_k χ_{E_k} + z_k χ_{F_k}) on disjoint runs of grid cells
/// with L(E_k) = L(X) / (2^{k+1}(1 + p_M(w_k))) (rounded down to cells),
/// where (w_k, z_k) has growth ratio >= 2^{2k+2}. Throws kNonHomogeneous.
HomogeneousWitness homogeneous_witness(const Integrand& f, const Domain& domain, Exponent p, double M,
                                       const HomogeneousOptions& opts = {});

}  // namespace nlf
