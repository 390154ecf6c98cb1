#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlf/functional.hpp"
#include "nlf/minimize.hpp"
#include "nlf/sampler.hpp"

using namespace nlf;

namespace {

GridFunction random_u(const GridPtr& g, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  Rng rng(seed);
  std::vector<double> v(g->size());
  for (double& e : v) e = rng.uniform(lo, hi);
  return GridFunction(g, 1, std::move(v));
}

}  // namespace

TEST(Minimize, AnchoredReachesOne) {
  const GridPtr g = build_grid(Domain::unit(1), {32});
  const MinimizeResult r = minimize(builtin("anchored"), GridFunction::constant(g, std::vector<double>{0.0}));
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.J_star, 1e-10);
  for (double v : r.u_star.values()) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(Minimize, CoerciveReachesZero) {
  const GridPtr g = build_grid(Domain::unit(1), {32});
  const MinimizeResult r = minimize(builtin("coercive"), random_u(g, 77));
  EXPECT_TRUE(r.converged);
  for (double v : r.u_star.values()) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Minimize, ConstantsAreMinimizersOfDifferencePenalty) {
  const GridPtr g = build_grid(Domain::unit(1), {16});
  const MinimizeResult r = minimize(builtin("quadratic-diff"), GridFunction::constant(g, std::vector<double>{3.0}));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iters, 0u);
  EXPECT_EQ(r.J_star, 0.0);
}

TEST(Minimize, TraceIsMonotoneWithArmijoDecrease) {
  const GridPtr g = build_grid(Domain::unit(1), {24});
  MinimizeConfig cfg;
  cfg.max_iters = 40;
  const MinimizeResult r = minimize(builtin("kernel-quadratic"), random_u(g, 5), cfg);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].J, r.trace[k - 1].J);
  const std::string csv = trace_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,J,step,grad_norm");
}

TEST(Minimize, BoxKeepsIteratesFeasible) {
  const GridPtr g = build_grid(Domain::unit(1), {16});
  MinimizeConfig cfg;
  cfg.box = std::pair{-0.5, 0.5};
  const MinimizeResult r = minimize(builtin("anchored"), random_u(g, 9, -0.5, 0.5), cfg);
  for (double v : r.u_star.values()) {
    EXPECT_LE(std::abs(v), 0.5);
    EXPECT_NEAR(v, 0.5, 1e-9);
  }
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.grad_norm, cfg.grad_tol);
}

TEST(Minimize, RestartsAgreeForConvexIntegrand) {
  const GridPtr g = build_grid(Domain::unit(1), {16});
  const Integrand f = Integrand::parse("(w1 - z1)^2 + (w1 - x1)^2 + (z1 - y1)^2", 1, 1).with_symmetry(Symmetry::kDeclared);
  std::vector<double> finals;
  for (std::uint64_t s = 0; s < 5; ++s) finals.push_back(minimize(f, random_u(g, 40 + s)).J_star);
  for (double v : finals) EXPECT_NEAR(v, finals.front(), 1e-5);
}

TEST(Minimize, RejectsNonSmoothAndBadConfig) {
  const GridPtr g = build_grid(Domain::unit(1), {8});
  const GridFunction u = random_u(g, 1);
  try {
    minimize(Integrand::parse("abs(w1) + abs(z1)", 1, 1), u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonSmooth);
  }
  MinimizeConfig bad;
  bad.armijo_c = 1.5;
  EXPECT_THROW(minimize(builtin("anchored"), u, bad), Error);
}

TEST(GradCheck, Examples) {
  const GridPtr g = build_grid(Domain::unit(1), {32});
  const GridFunction x = GridFunction::from_fn(g, 1, [](auto p, auto o) { o[0] = p[0]; });
  EXPECT_LE(grad_check(builtin("quadratic-diff"), random_u(g, 3)), 1e-6);
  EXPECT_LE(grad_check(builtin("square-product"), x), 1e-5);
  EXPECT_LE(grad_check(builtin("linear"), random_u(g, 4)), 1e-10);
}
