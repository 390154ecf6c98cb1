#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/error.hpp"
#include "nlf/ext_real.hpp"
#include "nlf/integrand.hpp"

namespace nlf {

/// Raised when quadrature hits a pole of the integrand; lists the offending
/// (i, j) node pairs (at most kMaxReported, ascending).
class PoleError : public Error {
 public:
  static constexpr std::size_t kMaxReported = 16;
  PoleError(std::vector<std::pair<std::size_t, std::size_t>> pairs, std::size_t total, const std::string& detail);
  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }
  std::size_t total() const { return total_; }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::size_t total_;
};

/// J(u) by the product midpoint rule on grid × grid.
struct FunctionalValue {
  ExtReal value;
  double neg_part = 0.0;  // quadrature of f⁻
  ExtReal pos_part;       // quadrature of f⁺
  std::size_t nodes = 0;
  std::string integrand;
};

struct EvaluateOptions {
  /// Swap the roles of the outer and inner loop (terms f(x_j, x_i, u_j, u_i)
  /// summed with outer index j); used to test pairwise symmetry of sums.
  bool transpose = false;
  /// Allow grouping equal values for integrands without x, y dependence.
  bool allow_grouping = true;
};

FunctionalValue evaluate(const Integrand& f, const GridFunction& u, const EvaluateOptions& opts = {});
FunctionalValue evaluate(const PointwiseFn& f, const GridFunction& u, const EvaluateOptions& opts = {});

/// Φ_{x,ψ}(w) = Σ_j weight · f(x, x_j, w, ψ_j).
double phi_value(const PointwiseFn& f, std::span<const double> x, const GridFunction& psi,
                 std::span<const double> w);

struct PhiProfile {
  std::vector<double> x;
  std::vector<std::vector<double>> w_samples;
  std::vector<double> values;
};

PhiProfile phi_profile(const Integrand& f, std::span<const double> x, const GridFunction& psi,
                       const std::vector<std::vector<double>>& w_samples);

/// Hessian of Φ_{x,ψ} at w (row-major n × n), differentiated under the sum.
std::vector<double> phi_hessian(const IntegrandDeriv& d, std::span<const double> x, const GridFunction& psi,
                                std::span<const double> w);

/// Discrete variational gradient (∇J)_{i,c} = 2·weight² Σ_j ∂_{w_c} f(x_i, x_j, u_i, u_j).
/// Requires smooth_w and pairwise symmetry; an integrand with unknown
/// symmetry is verified first. Throws kNonSmooth / kAsymmetric.
GridFunction gradient(const Integrand& f, const GridFunction& u);
GridFunction gradient(const IntegrandDeriv& d, const GridFunction& u);

/// Makes sure f is usable where pairwise symmetry is a precondition.
Integrand require_symmetric(const Integrand& f, const Domain& box);

}  // namespace nlf
