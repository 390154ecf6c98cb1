#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlf/analysis.hpp"
#include "nlf/error.hpp"
#include "nlf/functional.hpp"

using namespace nlf;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k) v[k] = lo + (hi - lo) * static_cast<double>(k) / (count - 1.0);
  return v;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

PropertyVerdict sep(const std::string& text, std::size_t n = 1) {
  return check_separately_convex(Integrand::parse(text, 1, n).pointwise());
}

}  // namespace

TEST(HomogeneousBound, Examples) {
  const PropertyVerdict a = check_homogeneous_bound(Integrand::parse("w1^2 * z1^2", 1, 1), Exponent(2.0), 1.0);
  EXPECT_TRUE(a.passed());
  ASSERT_TRUE(a.stat("C").has_value());
  EXPECT_NEAR(*a.stat("C"), 1.0, 0.05);
  EXPECT_LE(*a.stat("C"), 1.0 + 1e-12);

  const PropertyVerdict b = check_homogeneous_bound(builtin("exp-product"), Exponent(1.0), 1.0);
  ASSERT_TRUE(b.refuted());
  // replay: ratio at the witness exceeds the threshold
  const double w = b.witness->scalar("w"), z = b.witness->scalar("z");
  EXPECT_GT(std::exp(w * z) / ((1 + std::abs(w)) * (1 + std::abs(z))), 1e6);

  const PropertyVerdict c = check_homogeneous_bound(Integrand::parse("1", 1, 1), Exponent(2.0), 1.0);
  EXPECT_TRUE(c.passed());
  EXPECT_NEAR(*c.stat("C"), 1.0, 1e-12);

  EXPECT_EQ(code_of([] { check_homogeneous_bound(Integrand::parse("x1 * w1", 1, 1), Exponent(2.0), 1.0); }),
            ErrorCode::kNonHomogeneous);
}

TEST(PBoundCertificate, Examples) {
  const GridPtr g = build_grid(Domain::unit(1), {16});
  const auto cert = BoundCertificate::uniform(g, 2.0, 2.0, 0.0, 1.0, Exponent(2.0));
  EXPECT_TRUE(validate_p_bound_certificate(builtin("quadratic-diff").pointwise(), cert, Exponent(2.0)).passed());

  const auto big = BoundCertificate::uniform(g, 1e3, 1e3, 1e3, 1.0, Exponent(2.0));
  const PropertyVerdict v = validate_p_bound_certificate(builtin("example-3-divergent").pointwise(), big, Exponent(2.0));
  ASSERT_TRUE(v.refuted());
  EXPECT_LT(v.witness->scalar("x"), 1e-3);
  EXPECT_GT(v.witness->lhs, v.witness->rhs);

  const auto zero = BoundCertificate::uniform(g, 0.0, 0.0, 0.0, 1.0, Exponent(2.0));
  EXPECT_TRUE(validate_p_bound_certificate(Integrand::parse("0", 1, 1).pointwise(), zero, Exponent(2.0)).passed());
}

TEST(SeparateConvexity, Examples) {
  EXPECT_TRUE(sep("(w1 - z1)^2").passed());
  EXPECT_TRUE(sep("w1 * z1").passed());
  const PropertyVerdict v = sep("-w1^2");
  ASSERT_TRUE(v.refuted());
  EXPECT_LT(v.witness->lhs, v.witness->rhs);
  EXPECT_TRUE(sep("w1^2 * z1^2 + exp(w1 - z1)").passed());
  EXPECT_TRUE(sep("w1 * w2 * z1 * z2", 2).refuted());
}

TEST(PhiConvexity, Examples) {
  const GridPtr g = build_grid(Domain::unit(1), {32});
  const auto suite = random_psi_suite(g, 1, 4, 1);
  const auto xs = random_points(Domain::unit(1), 4, 2);
  const auto triples = random_w_triples(1, 20, 3);
  const PropertyVerdict a = check_phi_convex(builtin("sum-squares"), suite, xs, triples);
  EXPECT_TRUE(a.passed());
  EXPECT_NEAR(*a.stat("min_hessian_det"), 2.0, 1e-12);

  const PropertyVerdict b = check_phi_convex(builtin("neg-quadratic-diff"), suite, xs, triples);
  ASSERT_TRUE(b.refuted());
  // Φ'' = −2|X| analytically
  EXPECT_NEAR(*b.stat("min_hessian_det"), -2.0, 1e-12);
}

TEST(PhiConvexity, VectorExamplePasses) {
  const auto& info = builtin_info("example-n2-vector");
  const GridPtr g = build_grid(info.domain, {48});
  const PropertyVerdict v =
      check_phi_convex(builtin(info.name), random_psi_suite(g, 2, 5, 11), random_points(info.domain, 4, 12),
                       random_w_triples(2, 30, 13));
  EXPECT_TRUE(v.passed());
  EXPECT_GE(*v.stat("min_hessian_det"), -1e-6);
}

TEST(PhiConvexity, SeparateConvexityImpliesPhiConvexity) {
  const GridPtr g = build_grid(Domain::unit(1), {24});
  const auto suite = random_psi_suite(g, 1, 3, 4);
  const auto xs = random_points(Domain::unit(1), 3, 5);
  const auto triples = random_w_triples(1, 20, 6);
  for (const char* name : {"quadratic-diff", "kernel-quadratic", "square-product", "coercive", "linear"}) {
    const Integrand f = builtin(name);
    if (check_separately_convex(f.pointwise()).passed()) {
      EXPECT_TRUE(check_phi_convex(f, suite, xs, triples).passed()) << name;
    }
  }
}

TEST(Wlsc, Examples) {
  const WlscReport a = wlsc_verdict(builtin("quadratic-diff"), Exponent(2.0));
  EXPECT_EQ(a.outcome, WlscOutcome::kEvidence);
  EXPECT_EQ(a.criterion, "separate-convexity");

  const WlscReport b = wlsc_verdict(builtin("neg-quadratic-diff"), Exponent(2.0));
  EXPECT_EQ(b.outcome, WlscOutcome::kRefuted);
  EXPECT_EQ(b.criterion, "phi-convexity");
  EXPECT_TRUE(b.phi.refuted());

  const auto& info = builtin_info("example-n2-vector");
  WlscOptions opts;
  opts.box = info.domain;
  opts.psi_count = 4;
  opts.x_count = 4;
  opts.triple_count = 20;
  const WlscReport c = wlsc_verdict(builtin(info.name), Exponent(2.0), Sampler{}, opts);
  EXPECT_EQ(c.outcome, WlscOutcome::kEvidence);
  EXPECT_EQ(c.criterion, "phi-convexity");
  EXPECT_TRUE(c.separate.refuted());
}

TEST(Decompose, DifferencePenaltyHasZeroG) {
  const GridPtr g = build_grid(Domain::unit(1), {16});
  const Decomposition d = decompose(builtin("quadratic-diff"), g, linspace(-2, 2, 17));
  for (double v : d.gamma) EXPECT_NEAR(v, 2.0, 1e-9);
  for (double v : d.g) EXPECT_NEAR(v, 0.0, 1e-12);
  EXPECT_LE(d.residual, 1e-8);
  EXPECT_TRUE(d.f_tilde_convexity.passed());
}

TEST(Decompose, WeightedQuadratic) {
  const GridPtr g = build_grid(Domain::unit(1), {32});
  const auto w_grid = linspace(-2, 2, 33);
  const Decomposition d = decompose(builtin("weighted-quadratic"), g, w_grid);
  for (std::size_t i = 0; i < d.N(); ++i) {
    for (std::size_t j = 0; j < d.N(); ++j) {
      const double y = g->node(j)[0];
      for (std::size_t k = 0; k < d.W(); ++k) {
        const double w = w_grid[k];
        EXPECT_NEAR(d.gamma[(i * d.N() + j) * d.W() + k], 2 * (y - 0.25), 1e-9);
        EXPECT_NEAR(d.g[(i * d.N() + j) * d.W() + k], (y - 0.5) * w * w, 1e-3);
      }
    }
    for (std::size_t k = 0; k < d.W(); ++k) EXPECT_NEAR(d.gamma_mean[i * d.W() + k], 0.5, 1e-9);
  }
  EXPECT_LE(d.g_mean_defect, 1e-8);
  EXPECT_LE(d.residual, 1e-8);
  // h(x,y) = f(x,y,0,0) = 0 and is symmetric
  for (double v : d.h) EXPECT_EQ(v, 0.0);
  // f~ is tabulated per node pair, so probe it at nodes
  const double w[] = {1.5}, z[] = {-0.5};
  EXPECT_NEAR(d.f_tilde({g->node(9), g->node(25), w, z}), (1.5 * 1.5 + 0.25) / 4, 1e-3);
}

TEST(Decompose, MonotoneLadderWithZDependence) {
  const GridPtr g = build_grid(Domain::unit(1), {8});
  const Integrand f = Integrand::parse("w1^2 * (1 + z1^2) + z1^2 * (1 + w1^2) - 0.1 * w1^2 * z1^2 * w1^2 * z1^2",
                                       1, 1)
                          .with_symmetry(Symmetry::kDeclared);
  DecomposeOptions opts;
  opts.M_ladder = {1, 2, 4};
  try {
    const Decomposition d = decompose(f, g, linspace(-1, 1, 9), opts);
    ASSERT_EQ(d.gamma_M.size(), 3u);
    for (std::size_t l = 1; l < d.gamma_M.size(); ++l)
      for (std::size_t e = 0; e < d.gamma_M[l].size(); ++e) EXPECT_LE(d.gamma_M[l][e], d.gamma_M[l - 1][e] + 1e-12);
  } catch (const Error& e) {
    // the quartic drive makes γ_M → −∞; the ladder is still checked on the way
    EXPECT_EQ(e.code(), ErrorCode::kPhiNonconvex);
  }
}

TEST(Decompose, Errors) {
  const GridPtr g = build_grid(Domain::unit(1), {8});
  const auto w = linspace(-1, 1, 9);
  EXPECT_EQ(code_of([&] {
              decompose(Integrand::parse("-w1^2 - z1^2", 1, 1).with_symmetry(Symmetry::kDeclared), g, w);
            }),
            ErrorCode::kPhiNonconvex);
  EXPECT_EQ(code_of([&] { decompose(Integrand::parse("w1^2 + w2^2 + z1^2 + z2^2", 1, 2), g, w); }),
            ErrorCode::kUnsupported);
  EXPECT_EQ(code_of([&] { decompose(Integrand::parse("abs(w1) + abs(z1)", 1, 1), g, w); }),
            ErrorCode::kNonSmooth);
  EXPECT_EQ(code_of([&] { decompose(Integrand::parse("w1^2 * x1", 1, 1), g, w); }), ErrorCode::kAsymmetric);
}

TEST(NullClass, Examples) {
  const GridPtr g = build_grid(Domain::unit(1), {64});
  const auto w = linspace(-2, 2, 17);
  EXPECT_TRUE(check_null_class(tabulate_null_class("(y1 - 0.5) * w1^2", "0", g, w)).passed());
  const PropertyVerdict bad = check_null_class(tabulate_null_class("w1^2", "0", g, w));
  ASSERT_TRUE(bad.refuted());
  EXPECT_TRUE(check_null_class(tabulate_null_class("0", "x1 + y1 - 1", g, w)).passed());
  EXPECT_TRUE(check_null_class(tabulate_null_class("0", "x1 - y1", g, w)).refuted());
}

TEST(NullClass, AssembledIntegrandVanishes) {
  const Integrand f = assemble_null_integrand("(y1 - 0.5) * exp(w1) * x1", "x1 * y1 - 0.25", 1);
  const GridPtr g = build_grid(Domain::unit(1), {50});
  for (const GridFunction& u : random_psi_suite(g, 1, 5, 8)) {
    EXPECT_LE(std::abs(evaluate(f, u).value.value()), 1e-7 * (1 + std::pow(lp_norm(u).value(), 2)));
  }
}
