#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/expr.hpp"
#include "nlf/sampler.hpp"
#include "nlf/verdict.hpp"

namespace nlf {

enum class Symmetry { kUnknown, kDeclared, kVerified, kRefuted };
const char* to_string(Symmetry s);

/// Any pointwise f(x, y, w, z); checkers accept these so that tabulated
/// remainders (see Decomposition) can be tested like parsed integrands.
struct PointwiseFn {
  std::size_t dim_m = 1;
  std::size_t dim_n = 1;
  std::function<double(const EvalArgs&)> fn;
  std::string label;

  double operator()(const EvalArgs& a) const { return fn(a); }
};

/// A parsed integrand f(x, y, w, z) on X × X × R^n × R^n, X ⊂ R^m.
class Integrand {
 public:
  Integrand(Expr expr, std::size_t dim_m, std::size_t dim_n, std::string label = {},
            Symmetry symmetry = Symmetry::kUnknown);

  static Integrand parse(const std::string& text, std::size_t dim_m, std::size_t dim_n);

  const Expr& expr() const { return expr_; }
  std::size_t dim_m() const { return dim_m_; }
  std::size_t dim_n() const { return dim_n_; }
  Symmetry symmetry() const { return symmetry_; }
  bool symmetric() const { return symmetry_ == Symmetry::kDeclared || symmetry_ == Symmetry::kVerified; }
  /// False if abs/step/min/max is applied to an argument that depends on w.
  bool smooth_w() const { return smooth_w_; }
  /// True if f does not depend on x or y.
  bool homogeneous() const { return homogeneous_; }
  const std::string& label() const { return label_; }

  /// Unchecked evaluation through the compiled program.
  double operator()(const EvalArgs& a) const { return (*program_)(a); }
  /// Checked evaluation: validates argument dimensions.
  double eval(std::span<const double> x, std::span<const double> y, std::span<const double> w,
              std::span<const double> z) const;

  Integrand with_symmetry(Symmetry s) const;
  Integrand with_label(std::string label) const;
  PointwiseFn pointwise() const;

 private:
  Expr expr_;
  std::size_t dim_m_;
  std::size_t dim_n_;
  std::string label_;
  Symmetry symmetry_;
  bool smooth_w_;
  bool homogeneous_;
  std::shared_ptr<const Program> program_;
};

/// ½(f(x,y,w,z) + f(y,x,z,w)); symmetric by construction (kDeclared).
Integrand symmetrize(const Integrand& f);

/// Samples (x, y, w, z) and compares f with its pair-swapped version, using
/// the tolerance 1e-9·(1 + |f|). x, y are drawn from `box` (default: unit box).
/// Samples hitting a pole are redrawn.
PropertyVerdict check_pairwise_symmetry(const Integrand& f, std::size_t samples, std::uint64_t seed = kDefaultSeed,
                                        const std::optional<Domain>& box = std::nullopt);

/// Runs check_pairwise_symmetry and returns f marked kVerified or kRefuted.
Integrand verify_symmetry(const Integrand& f, std::size_t samples = 512, std::uint64_t seed = kDefaultSeed,
                          const std::optional<Domain>& box = std::nullopt);

/// Symbolic first and second w-derivatives.
class IntegrandDeriv {
 public:
  /// Throws Error(kNonSmooth) unless f.smooth_w().
  explicit IntegrandDeriv(const Integrand& f);

  const Integrand& base() const { return base_; }
  const Expr& grad_expr(std::size_t c) const { return grad_[c]; }
  const Expr& hess_expr(std::size_t a, std::size_t b) const { return hess_[a * base_.dim_n() + b]; }

  double grad(std::size_t c, const EvalArgs& args) const { return grad_prog_[c](args); }
  double hess(std::size_t a, std::size_t b, const EvalArgs& args) const {
    return hess_prog_[a * base_.dim_n() + b](args);
  }
  /// Whether any ∂²_w f entry depends on z (drives the min-over-z search).
  bool hess_depends_on_z() const { return hess_depends_on_z_; }

 private:
  Integrand base_;
  std::vector<Expr> grad_;
  std::vector<Expr> hess_;
  std::vector<Program> grad_prog_;
  std::vector<Program> hess_prog_;
  bool hess_depends_on_z_ = false;
};

IntegrandDeriv differentiate(const Integrand& f);

struct BuiltinInfo {
  std::string name;
  std::string text;
  std::size_t dim_m;
  std::size_t dim_n;
  Domain domain;
  Symmetry symmetry;
  std::string description;
};

const std::vector<BuiltinInfo>& builtin_registry();
/// Throws Error(kUnknownName).
const BuiltinInfo& builtin_info(const std::string& name);
Integrand builtin(const std::string& name);

/// "builtin:<name>" or an expression in the integrand grammar.
Integrand resolve_integrand(const std::string& spec, std::size_t dim_m, std::size_t dim_n);

/// Profile functions of the vector example with n = 2. bridge_a is the fixed
/// C² convex blend used inside (−2, 2): a(ζ) = 2|ζ/2|³ − (ζ/2)⁴, which meets
/// |ζ| − 1 with matching value, slope and vanishing curvature at ζ = ±2.
namespace vector_example {
double a(double zeta);
double b(double zeta);
}  // namespace vector_example

}  // namespace nlf
