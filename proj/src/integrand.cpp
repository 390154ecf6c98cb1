#include "nlf/integrand.hpp"

#include <algorithm>
#include <cmath>

#include "nlf/error.hpp"

namespace nlf {

const char* to_string(Symmetry s) {
  switch (s) {
    case Symmetry::kUnknown: return "unknown";
    case Symmetry::kDeclared: return "declared";
    case Symmetry::kVerified: return "verified";
    case Symmetry::kRefuted: return "refuted";
  }
  return "unknown";
}

Integrand::Integrand(Expr expr, std::size_t dim_m, std::size_t dim_n, std::string label, Symmetry symmetry)
    : expr_(std::move(expr)),
      dim_m_(dim_m),
      dim_n_(dim_n),
      label_(std::move(label)),
      symmetry_(symmetry),
      smooth_w_(!expr_.has_nonsmooth_in(VarKind::kW)),
      homogeneous_(!expr_.depends_on(VarKind::kX) && !expr_.depends_on(VarKind::kY)),
      program_(std::make_shared<const Program>(expr_)) {
  if (dim_m_ == 0 || dim_n_ == 0) throw Error(ErrorCode::kInvalidArgument, "integrand dimensions must be >= 1");
  if (label_.empty()) label_ = expr_.to_string();
}

Integrand Integrand::parse(const std::string& text, std::size_t dim_m, std::size_t dim_n) {
  return Integrand(parse_expr(text, dim_m, dim_n), dim_m, dim_n, text);
}

double Integrand::eval(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                       std::span<const double> z) const {
  if (x.size() != dim_m_ || y.size() != dim_m_ || w.size() != dim_n_ || z.size() != dim_n_) {
    throw Error(ErrorCode::kMismatch, "integrand expects x,y in R^" + std::to_string(dim_m_) + " and w,z in R^" +
                                          std::to_string(dim_n_));
  }
  return (*this)({x, y, w, z});
}

Integrand Integrand::with_symmetry(Symmetry s) const {
  Integrand copy = *this;
  copy.symmetry_ = s;
  return copy;
}

Integrand Integrand::with_label(std::string label) const {
  Integrand copy = *this;
  copy.label_ = std::move(label);
  return copy;
}

PointwiseFn Integrand::pointwise() const {
  auto prog = program_;
  return {dim_m_, dim_n_, [prog](const EvalArgs& a) { return (*prog)(a); }, label_};
}

Integrand symmetrize(const Integrand& f) {
  Expr sym = Expr::constant(0.5) * (f.expr() + swap_pairs(f.expr()));
  return Integrand(std::move(sym), f.dim_m(), f.dim_n(), "sym(" + f.label() + ")", Symmetry::kDeclared);
}

PropertyVerdict check_pairwise_symmetry(const Integrand& f, std::size_t samples, std::uint64_t seed,
                                        const std::optional<Domain>& box) {
  if (samples == 0) throw Error(ErrorCode::kInvalidArgument, "symmetry check needs samples >= 1");
  const Domain dom = box ? *box : Domain::unit(f.dim_m());
  if (dom.dim() != f.dim_m()) throw Error(ErrorCode::kMismatch, "sampling box dimension differs from m");
  Rng rng(seed);
  const std::size_t m = f.dim_m();
  const std::size_t n = f.dim_n();
  std::vector<double> x(m), y(m), w(n), z(n);
  double max_defect = 0.0;
  std::size_t done = 0;
  std::size_t skipped = 0;
  const std::size_t max_attempts = 20 * samples;
  for (std::size_t attempt = 0; attempt < max_attempts && done < samples; ++attempt) {
    rng.point_in(dom, x);
    rng.point_in(dom, y);
    rng.mixed_vector(w);
    rng.mixed_vector(z);
    double a = 0.0;
    double b = 0.0;
    try {
      a = f({x, y, w, z});
      b = f({y, x, z, w});
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    if (!std::isfinite(a) || !std::isfinite(b)) {
      ++skipped;
      continue;
    }
    ++done;
    const double defect = std::abs(a - b);
    const double tol = 1e-9 * (1.0 + std::abs(a));
    max_defect = std::max(max_defect, defect);
    if (defect > tol) {
      Witness wit;
      wit.set("x", x).set("y", y).set("w", w).set("z", z).set("f", {a}).set("f_swapped", {b});
      wit.lhs = defect;
      wit.rhs = tol;
      wit.relation = "<=";
      auto v = PropertyVerdict::refute("pairwise-symmetry", std::move(wit), done, 1e-9, seed);
      v.stats.emplace_back("skipped", static_cast<double>(skipped));
      return v;
    }
  }
  auto v = PropertyVerdict::pass("pairwise-symmetry", done, 1e-9, seed);
  v.stats.emplace_back("max_defect", max_defect);
  v.stats.emplace_back("skipped", static_cast<double>(skipped));
  if (done < samples) v.notes.push_back("fewer finite samples than requested");
  return v;
}

Integrand verify_symmetry(const Integrand& f, std::size_t samples, std::uint64_t seed,
                          const std::optional<Domain>& box) {
  const auto verdict = check_pairwise_symmetry(f, samples, seed, box);
  return f.with_symmetry(verdict.refuted() ? Symmetry::kRefuted : Symmetry::kVerified);
}

IntegrandDeriv::IntegrandDeriv(const Integrand& f) : base_(f) {
  if (!f.smooth_w()) {
    throw Error(ErrorCode::kNonSmooth, "integrand is not smooth in w (abs/step/min/max of a w-dependent argument)");
  }
  const std::size_t n = f.dim_n();
  for (std::size_t c = 0; c < n; ++c) {
    grad_.push_back(nlf::differentiate(f.expr(), VarKind::kW, static_cast<std::uint32_t>(c)));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      hess_.push_back(nlf::differentiate(grad_[a], VarKind::kW, static_cast<std::uint32_t>(b)));
      hess_depends_on_z_ = hess_depends_on_z_ || hess_.back().depends_on(VarKind::kZ);
    }
  }
  for (const auto& e : grad_) grad_prog_.emplace_back(e);
  for (const auto& e : hess_) hess_prog_.emplace_back(e);
}

IntegrandDeriv differentiate(const Integrand& f) { return IntegrandDeriv(f); }

// ---------------------------------------------------------------- builtins

namespace vector_example {

double a(double zeta) {
  const double r = std::abs(zeta);
  if (r >= 2.0) return r - 1.0;
  const double u = r / 2.0;
  return 2.0 * u * u * u - u * u * u * u;
}

double b(double zeta) {
  if (zeta >= 0.0) return 1.0 + zeta + 0.5 * zeta * zeta;
  return 1.0 / (1.0 - zeta + 0.5 * zeta * zeta);
}

}  // namespace vector_example

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string vector_example_text() {
  const std::string b = "(step(T) * (1 + T + 0.5 * T^2) + (1 - step(T)) / (1 - T + 0.5 * T^2))";
  const std::string a =
      "(step(abs(T) - 2) * (abs(T) - 1) + (1 - step(abs(T) - 2)) * (2 * (abs(T) / 2)^3 - (T / 2)^4))";
  const std::string b_pos = replace_all(b, "T", "(z1)");
  const std::string b_neg = replace_all(b, "T", "(-z1)");
  const std::string a_z = replace_all(a, "T", "(z1)");
  return "step(y1) * 0.5 * (" + b_pos + " * w1^2 + " + b_neg + " * w2^2) + (1 - step(y1)) * (0.5 * " + a_z +
         " * (w1^2 + w2^2) + z1 * w1 * w2)";
}

std::vector<BuiltinInfo> make_registry() {
  const Domain unit = Domain::unit(1);
  const Domain sym_unit(std::vector<Interval>{{-1.0, 1.0}});
  return {
      {"example-3-divergent", "step(z1 - x1) * step(1 - z1) / z1", 1, 1, unit, Symmetry::kUnknown,
       "1/z if z in [x,1], 0 otherwise: integrable functional that is not p-bounded"},
      {"example-4-nonlsc",
       "0.5 * (-step(z1 - x1) * step(1 - z1) / z1 - step(w1 - y1) * step(1 - w1) / w1)", 1, 1, unit,
       Symmetry::kDeclared,
       "symmetrised -1/z indicator: lower semi-continuous integrand whose functional is not strongly lsc"},
      {"example-n2-vector", vector_example_text(), 1, 2, sym_unit, Symmetry::kUnknown,
       "n = 2 example on [-1,1] with convex Phi but no separately convex representative; "
       "inside (-2,2) the profile a is the fixed blend 2|z/2|^3 - (z/2)^4 (choice-dependent)"},
      {"quadratic-diff", "(w1 - z1)^2", 1, 1, unit, Symmetry::kDeclared, "separately convex difference penalty"},
      {"neg-quadratic-diff", "-(w1 - z1)^2", 1, 1, unit, Symmetry::kDeclared, "concave difference penalty"},
      {"product", "w1 * z1", 1, 1, unit, Symmetry::kDeclared, "bilinear"},
      {"sum-squares", "w1^2 + z1^2", 1, 1, unit, Symmetry::kDeclared, "decoupled quadratic"},
      {"square-product", "w1^2 * z1^2", 1, 1, unit, Symmetry::kDeclared, "quartic product"},
      {"anchored", "(w1 - 1)^2 + (z1 - 1)^2", 1, 1, unit, Symmetry::kDeclared, "minimum at u = 1"},
      {"coercive", "(w1 - z1)^2 + w1^2 + z1^2", 1, 1, unit, Symmetry::kDeclared, "strictly convex, minimum at 0"},
      {"linear", "w1 + z1", 1, 1, unit, Symmetry::kDeclared, "affine"},
      {"weighted-quadratic", "w1^2 * (y1 - 0.25) + z1^2 * (x1 - 0.25)", 1, 1, unit, Symmetry::kDeclared,
       "convex Phi without separate convexity; decomposes into w^2/4 + z^2/4 plus a null-class part"},
      {"kernel-quadratic", "exp(-(x1 - y1)^2) * (w1 - z1)^2", 1, 1, unit, Symmetry::kDeclared,
       "Gaussian-kernel difference penalty"},
      {"exp-product", "exp(w1 * z1)", 1, 1, unit, Symmetry::kDeclared,
       "homogeneous integrand violating every growth bound"},
  };
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_registry() {
  static const std::vector<BuiltinInfo> registry = make_registry();
  return registry;
}

const BuiltinInfo& builtin_info(const std::string& name) {
  for (const auto& b : builtin_registry()) {
    if (b.name == name) return b;
  }
  throw Error(ErrorCode::kUnknownName, "unknown builtin integrand '" + name + "'");
}

Integrand builtin(const std::string& name) {
  const auto& info = builtin_info(name);
  return Integrand(parse_expr(info.text, info.dim_m, info.dim_n), info.dim_m, info.dim_n, info.name, info.symmetry);
}

Integrand resolve_integrand(const std::string& spec, std::size_t dim_m, std::size_t dim_n) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) return builtin(spec.substr(prefix.size()));
  return Integrand::parse(spec, dim_m, dim_n);
}

}  // namespace nlf
