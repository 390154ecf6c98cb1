#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/functional.hpp"
#include "nlf/integrand.hpp"
#include "nlf/sampler.hpp"
#include "nlf/verdict.hpp"

namespace nlf {

// ------------------------------------------------------------ growth bounds

/// Searches expanding boxes [-R, R]^{2n}, R = 1, 2, 4, ..., for unbounded
/// growth of f(w,z) / ((1 + p_M(w))(1 + p_M(z))). Refuted when the best ratio
/// exceeds 1e6 and increased over the last three doublings; otherwise the
/// best ratio is reported as stat "C". For p = ∞ the boxes stop at M.
/// Throws kNonHomogeneous if f depends on x or y.
PropertyVerdict check_homogeneous_bound(const Integrand& f, Exponent p, double M, const Sampler& sampler = {});

/// Tabulated majorant |f| <= α(x,y) + β(x)p_M(z) + β(y)p_M(w) + C p_M(w)p_M(z),
/// with α on grid × grid (row-major) and β on grid, read off by cell lookup.
struct BoundCertificate {
  double M = 1.0;
  GridPtr grid;
  std::vector<double> alpha;
  std::vector<double> beta;
  double C = 0.0;
  double pstar = 2.0;

  static BoundCertificate uniform(GridPtr grid, double alpha, double beta, double C, double M, Exponent p);
  double bound(std::span<const double> x, std::span<const double> y, std::span<const double> w,
               std::span<const double> z, Exponent p) const;
};

/// Samples (x, y, w, z) and tests the certificate's majorant; the domain of
/// the certificate grid is sampled, including points pushed towards faces.
PropertyVerdict validate_p_bound_certificate(const PointwiseFn& f, const BoundCertificate& cert, Exponent p,
                                             const Sampler& sampler = {});

// ------------------------------------------------------------- convexity

struct ConvexityOptions {
  Domain box = Domain::unit(1);
  /// When set, w and z are drawn uniformly from [-bound, bound]^n instead of
  /// the mixed-magnitude distribution.
  std::optional<double> value_bound;
};

/// Midpoint-type convexity test of w ↦ f(x,y,w,z) and z ↦ f(x,y,w,z) at
/// sampled (w1, w2, θ), tolerance 1e-9·(1 + |values|).
PropertyVerdict check_separately_convex(const PointwiseFn& f, const Sampler& sampler = {},
                                        const ConvexityOptions& opts = {});

struct WTriple {
  std::vector<double> w1;
  std::vector<double> w2;
  double theta = 0.5;
};

/// Seeded test data for check_phi_convex.
std::vector<GridFunction> random_psi_suite(const GridPtr& grid, std::size_t n, std::size_t count, std::uint64_t seed,
                                           double scale = 2.0);
std::vector<std::vector<double>> random_points(const Domain& d, std::size_t count, std::uint64_t seed);
std::vector<WTriple> random_w_triples(std::size_t n, std::size_t count, std::uint64_t seed, double scale = 4.0);

/// Convexity of Φ_{x,ψ} for every ψ in the suite, x sample and w triple.
/// Tolerance per test: tol·(1 + |Φ(w1)| + |Φ(w2)| + |Φ(w_θ)|). For smooth f
/// the Hessian of Φ at each w_θ is also sampled (stats "min_hessian_det",
/// "min_hessian_eig"; the eigenvalue only for n <= 2).
PropertyVerdict check_phi_convex(const Integrand& f, const std::vector<GridFunction>& psi_suite,
                                 const std::vector<std::vector<double>>& x_samples,
                                 const std::vector<WTriple>& w_triples, double tol = 1e-9,
                                 std::uint64_t seed = kDefaultSeed);

enum class WlscOutcome { kEvidence, kRefuted, kInconclusive };
const char* to_string(WlscOutcome o);

struct WlscReport {
  WlscOutcome outcome = WlscOutcome::kInconclusive;
  std::string criterion;  // "separate-convexity", "phi-convexity" or "none"
  PropertyVerdict separate;
  PropertyVerdict phi;
  std::optional<PropertyVerdict> symmetry;
  std::vector<std::string> notes;
};

struct WlscOptions {
  Domain box = Domain::unit(1);
  std::size_t grid_nodes = 64;
  std::size_t psi_count = 10;
  std::size_t x_count = 8;
  std::size_t triple_count = 50;
};

/// Separate convexity is sufficient and Φ-convexity characterising: a Φ
/// refutation always gives kRefuted.
WlscReport wlsc_verdict(const Integrand& f, Exponent p, const Sampler& sampler = {}, const WlscOptions& opts = {});

// --------------------------------------------------------- decomposition

struct DecomposeOptions {
  std::vector<double> M_ladder = {1, 2, 4, 8, 16, 32, 64, 128};
  std::size_t z_grid_points = 257;
  std::size_t golden_iterations = 3;
  double stabilization_tol = 1e-6;
  double mean_tol = 1e-9;
  Sampler convexity_sampler{2000, kDefaultSeed};
};

/// Second antiderivative in w, anchored at w = 0, of the piecewise-linear
/// interpolant of the centred γ; per node pair (i, j) and knot k, stored at
/// (i·N + j)·W + k. Outside the w-grid the centred γ is extended constantly.
struct GKnots {
  GridPtr grid;
  std::vector<double> w_grid;
  std::vector<double> centred;
  std::vector<double> cum1;  // ∫₀^w c
  std::vector<double> cum2;  // ∫₀^w ∫₀^{w̃} c

  double at_node(std::size_t i, std::size_t j, double w) const;
  /// Nearest grid node pair.
  double at(std::span<const double> x, std::span<const double> y, double w) const;
};

/// Tables of the separately convex decomposition for n = 1, same indexing
/// as GKnots.
struct Decomposition {
  GridPtr grid;
  std::vector<double> w_grid;
  std::vector<double> M_ladder;
  std::vector<std::vector<double>> gamma_M;
  std::vector<double> gamma;
  std::size_t unstable_entries = 0;
  std::vector<double> gamma_mean;  // (i·W + k): y-mean of γ
  std::vector<double> g;
  std::vector<double> h;  // (i·N + j): f(x_i, x_j, 0, 0)
  double g_mean_defect = 0.0;
  double residual = 0.0;
  std::shared_ptr<const GKnots> knots;
  PointwiseFn f_tilde;
  PropertyVerdict f_tilde_convexity;
  std::vector<std::string> notes;

  std::size_t N() const { return grid->size(); }
  std::size_t W() const { return w_grid.size(); }
  double g_at(std::span<const double> x, std::span<const double> y, double w) const { return knots->at(x, y, w); }
};

/// Throws kUnsupported (n != 1), kNonSmooth, kAsymmetric, kPhiNonconvex.
Decomposition decompose(const Integrand& f, GridPtr grid, std::vector<double> w_grid,
                        const DecomposeOptions& opts = {});

// ------------------------------------------------------------ null class

/// Candidate null-class element g(x,y,w) + g(y,x,z) + h(x,y) for n = 1,
/// tabulated on grid × grid × w_grid; g is interpolated linearly in w.
struct NullClassTables {
  GridPtr grid;
  std::vector<double> w_grid;
  std::vector<double> g;  // (i·N + j)·W + k
  std::vector<double> h;  // i·N + j

  PointwiseFn assembled() const;
};

/// g is an expression in x, y, w (n = 1); h in x, y.
NullClassTables tabulate_null_class(const std::string& g_text, const std::string& h_text, GridPtr grid,
                                    std::vector<double> w_grid);

/// The integrand g(x,y,w) + g(y,x,z) + h(x,y) built symbolically.
Integrand assemble_null_integrand(const std::string& g_text, const std::string& h_text, std::size_t dim_m);

/// Checks both zero-mean conditions and h symmetry on the grid (tol 1e-8),
/// then |J(u)| <= 1e-7·(1 + ‖u‖₂²) for `trials` random u with values in the
/// w_grid range.
PropertyVerdict check_null_class(const NullClassTables& t, std::size_t trials = 20,
                                 std::uint64_t seed = kDefaultSeed);

}  // namespace nlf
