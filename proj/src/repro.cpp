#include "nlf/repro.hpp"

#include <algorithm>
#include <cmath>

#include "internal/json_build.hpp"
#include "nlf/analysis.hpp"
#include "nlf/error.hpp"
#include "nlf/functional.hpp"
#include "nlf/witness.hpp"

namespace nlf {

namespace {

using detail::json_of;
using detail::number;
using detail::ordered_json;

ReproResult finish(std::string id, std::string claim, std::string expected, std::string observed, bool adverse,
                   ordered_json details) {
  ReproResult r;
  r.id = std::move(id);
  r.claim = std::move(claim);
  r.expected = std::move(expected);
  r.observed = std::move(observed);
  r.matches = r.expected == r.observed;
  r.adverse = adverse;
  ordered_json j;
  j["id"] = r.id;
  j["claim"] = r.claim;
  j["expected"] = r.expected;
  j["observed"] = r.observed;
  j["matches"] = r.matches;
  j["details"] = std::move(details);
  r.json = j.dump();
  return r;
}

ReproResult divergent() {
  const Integrand f = builtin("example-3-divergent");
  const GridPtr grid = build_grid(builtin_info("example-3-divergent").domain, {512});
  ordered_json values = ordered_json::array();
  bool ok = true;
  for (double c : {0.25, 0.5, 1.0, 2.0}) {
    const GridFunction u = GridFunction::constant(grid, std::vector<double>{c});
    const double J = evaluate(f, u).value.value();
    const double expect = (c > 0.0 && c <= 1.0) ? 1.0 : 0.0;
    ok = ok && std::abs(J - expect) <= 2e-2;
    values.push_back({{"c", c}, {"J", number(J)}, {"expected", expect}});
  }
  // ψ(y) = y: the double integral stays at 1 under refinement.
  const IntegrabilityWitness w = integrability_witness(f, grid->domain(), FieldExpr::parse({"x1"}, 1),
                                                       FieldExpr::parse({"x1"}, 1));
  ok = ok && !w.found;
  ordered_json details;
  details["nodes"] = grid->size();
  details["constant_psi"] = values;
  details["identity_psi_refinement"] = json_of(w);
  return finish("example-3-divergent", "J equals the measure of psi^-1((0,1]) although f is not p-bounded",
                "holds", ok ? "holds" : "differs", false, details);
}

ReproResult nonlsc() {
  const Integrand f = builtin("example-4-nonlsc");
  const GridPtr grid = build_grid(builtin_info("example-4-nonlsc").domain, {1024});
  const GridFunction zero = GridFunction::constant(grid, std::vector<double>{0.0});
  const GridFunction one = GridFunction::constant(grid, std::vector<double>{1.0});
  const LscProbeReport r = lsc_probe(f, scalar_shrink_plan(zero, one), 32);
  const bool shape = std::abs(r.margin - 1.0) <= 2e-2 && std::abs(r.J_limit) <= 2e-2;
  ordered_json details = json_of(r);
  return finish("example-4-nonlsc", "u_k = 1/k converges uniformly to 0 but liminf J(u_k) = -1 < 0 = J(0)",
                "violated", r.violated && shape ? "violated" : "holds", true, details);
}

ReproResult vector_n2() {
  const auto& info = builtin_info("example-n2-vector");
  const Integrand f = builtin(info.name);
  const GridPtr grid = build_grid(info.domain, {64});
  const auto suite = random_psi_suite(grid, 2, 10, kDefaultSeed + 1);
  const auto xs = random_points(info.domain, 8, kDefaultSeed + 2);
  const auto triples = random_w_triples(2, 50, kDefaultSeed + 3);
  const PropertyVerdict phi = check_phi_convex(f, suite, xs, triples);
  ConvexityOptions opts;
  opts.box = info.domain;
  const PropertyVerdict sep = check_separately_convex(f.pointwise(), Sampler{}, opts);
  const double det = phi.stat("min_hessian_det").value_or(0.0);
  const bool ok = phi.passed() && det >= -1e-6 && sep.refuted();
  ordered_json details;
  details["phi_convexity"] = json_of(phi);
  details["separate_convexity"] = json_of(sep);
  return finish("example-n2-vector",
                "det of the Hessian of Phi stays >= 0 for every psi while f is not convex in w",
                "holds", ok ? "holds" : "differs", false, details);
}

ReproResult checkerboard() {
  const std::vector<PairBox> unit_square{{{Interval{0.0, 1.0}}, {Interval{0.0, 1.0}}}};
  const std::vector<PairBox> strip{{{Interval{0.0, 0.5}}, {Interval{0.25, 1.0}}}};
  ordered_json rows = ordered_json::array();
  bool ok = true;
  double finest = 0.0;
  for (int s = 6; s <= 10; ++s) {
    const double delta = std::ldexp(1.0, -s);
    const double a = coverage_fraction(unit_square, delta, 4096);
    const double b = coverage_fraction(strip, delta, 4096);
    ok = ok && a >= 0.2 && b >= 0.2;
    finest = a;
    rows.push_back({{"delta", delta}, {"unit_square", number(a)}, {"strip", number(b)}});
  }
  ok = ok && std::abs(finest - 0.25) <= 0.01;
  ordered_json details;
  details["resolution"] = 4096;
  details["coverage"] = rows;
  return finish("lemma-checkerboard-quarter", "S_delta x S_delta^c covers nearly a quarter of E as delta -> 0", "holds",
                ok ? "holds" : "differs", false, details);
}

ReproResult homogeneous_blowup() {
  const Integrand f = builtin("exp-product");
  const HomogeneousWitness w = homogeneous_witness(f, Domain::unit(1), Exponent(1.0), 1.0);
  const PropertyVerdict bound = check_homogeneous_bound(f, Exponent(1.0), 1.0);
  bool ok = w.found && bound.refuted() && w.norm <= w.norm_bound + 1e-9;
  for (std::size_t k = 1; k < w.truncated_J.size(); ++k) {
    ok = ok && w.truncated_J[k] - w.truncated_J[k - 1] >= 0.2;
  }
  ordered_json details;
  details["witness"] = json_of(w);
  details["growth_bound"] = json_of(bound);
  return finish("prop-homogeneous-blowup",
                "without the growth bound the functional is unbounded on the unit ball of L^p", "unbounded",
                ok ? "unbounded" : "bounded", true, details);
}

ReproResult decomposition() {
  const Integrand f = builtin("weighted-quadratic");
  const GridPtr grid = build_grid(Domain::unit(1), {64});
  std::vector<double> w_grid(33);
  for (std::size_t k = 0; k < w_grid.size(); ++k) w_grid[k] = -2.0 + 4.0 * static_cast<double>(k) / 32.0;
  const Decomposition d = decompose(f, grid, w_grid);
  double g_err = 0.0, ft_err = 0.0;
  for (std::size_t i = 0; i < d.N(); ++i) {
    for (std::size_t j = 0; j < d.N(); ++j) {
      const double y = grid->node(j)[0];
      for (std::size_t k = 0; k < d.W(); ++k) {
        const double w = w_grid[k];
        g_err = std::max(g_err, std::abs(d.g[(i * d.N() + j) * d.W() + k] - (y - 0.5) * w * w));
        const double z = w_grid[d.W() - 1 - k];
        const double ft = d.f_tilde({grid->node(i), grid->node(j), {&w, 1}, {&z, 1}});
        ft_err = std::max(ft_err, std::abs(ft - (w * w + z * z) / 4.0));
      }
    }
  }
  std::string nonconvex = "accepted";
  try {
    decompose(Integrand::parse("-w1^2 - z1^2", 1, 1).with_symmetry(Symmetry::kDeclared), grid, w_grid);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPhiNonconvex) nonconvex = "phi-nonconvex";
  }
  const bool ok = g_err <= 1e-3 && ft_err <= 1e-3 && d.f_tilde_convexity.passed() && nonconvex == "phi-nonconvex";
  ordered_json details = json_of(d, false);
  details["g_max_error"] = number(g_err);
  details["f_tilde_max_error"] = number(ft_err);
  details["concave_input"] = nonconvex;
  return finish("thm-decomposition",
                "f = f~ + g(x,y,w) + g(y,x,z) with f~ separately convex and g of vanishing y-mean", "holds",
                ok ? "holds" : "differs", false, details);
}

ReproResult null_class() {
  const GridPtr grid = build_grid(Domain::unit(1), {128});
  std::vector<double> w_grid(33);
  for (std::size_t k = 0; k < w_grid.size(); ++k) w_grid[k] = -2.0 + 4.0 * static_cast<double>(k) / 32.0;
  const NullClassTables t = tabulate_null_class("(y1 - 0.5) * w1^2", "0", grid, w_grid);
  const PropertyVerdict v = check_null_class(t);
  return finish("thm-null-class", "integrands g(x,y,w) + g(y,x,z) + h with vanishing means give J = 0", "holds",
                v.passed() ? "holds" : "differs", false, json_of(v));
}

}  // namespace

const std::vector<std::string>& repro_ids() {
  static const std::vector<std::string> ids{"example-3-divergent",   "example-4-nonlsc",
                                            "example-n2-vector",     "lemma-checkerboard-quarter",
                                            "prop-homogeneous-blowup", "thm-decomposition",
                                            "thm-null-class"};
  return ids;
}

ReproResult run_repro(const std::string& id) {
  if (id == "example-3-divergent") return divergent();
  if (id == "example-4-nonlsc") return nonlsc();
  if (id == "example-n2-vector") return vector_n2();
  if (id == "lemma-checkerboard-quarter") return checkerboard();
  if (id == "prop-homogeneous-blowup") return homogeneous_blowup();
  if (id == "thm-decomposition") return decomposition();
  if (id == "thm-null-class") return null_class();
  throw Error(ErrorCode::kUnknownName, "unknown repro id '" + id + "'");
}

}  // namespace nlf
