#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlf/analysis.hpp"
#include "nlf/error.hpp"
#include "nlf/functional.hpp"
#include "nlf/witness.hpp"

using namespace nlf;

namespace {

bool member(double delta, std::vector<double> x) { return checkerboard_membership(delta, x); }

// Independent coverage oracle for E = (0,1)²: fraction of fine cells (x, y)
// with x in an even cube and y in an odd one, cubes centred at ξδ.
double coverage_oracle(double delta, std::size_t res) {
  auto even = [&](double t) {
    const long k = std::lround(t / delta);
    return k % 2 == 0;
  };
  std::size_t e = 0;
  for (std::size_t i = 0; i < res; ++i) e += even((i + 0.5) / static_cast<double>(res));
  const double fe = static_cast<double>(e) / static_cast<double>(res);
  return fe * (1 - fe);
}

GridFunction constant(const GridPtr& g, double c) { return GridFunction::constant(g, std::vector<double>{c}); }

}  // namespace

TEST(Checkerboard, Membership) {
  EXPECT_TRUE(member(0.5, {0.0}));
  EXPECT_FALSE(member(0.5, {0.5}));
  EXPECT_TRUE(member(1.0, {1.0, 1.0}));
  EXPECT_FALSE(member(1.0, {1.0, 0.0}));
  try {
    member(0.5, {0.25});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBoundary);
  }
  EXPECT_THROW(member(0.0, {0.1}), Error);
}

TEST(Checkerboard, PeriodicityAndComplement) {
  const double delta = 0.3;
  for (double a = -1.0; a < 1.0; a += 0.0371) {
    for (double b = -1.0; b < 1.0; b += 0.0419) {
      const bool m = member(delta, {a, b});
      EXPECT_EQ(m, member(delta, {a + 2 * delta, b}));
      EXPECT_EQ(m, member(delta, {a, b + 2 * delta}));
      EXPECT_NE(m, member(delta, {a + delta, b}));
    }
  }
}

TEST(Coverage, QuarterLaw) {
  const std::vector<PairBox> E{{{Interval{0, 1}}, {Interval{0, 1}}}};
  EXPECT_GE(coverage_fraction(E, std::ldexp(1.0, -10), 4096), 0.2);
  EXPECT_NEAR(coverage_fraction(E, 0.25, 1024), coverage_oracle(0.25, 4096), 2e-3);
  double prev = 1.0;
  for (int s = 3; s <= 8; ++s) {
    const double f = coverage_fraction(E, std::ldexp(1.0, -s), 2048);
    EXPECT_LE(std::abs(f - 0.25), prev + 1e-3);
    prev = std::abs(f - 0.25);
  }
}

TEST(Coverage, StripAndEmpty) {
  const std::vector<PairBox> strip{{{Interval{0, 0.5}}, {Interval{0.25, 1}}}};
  EXPECT_NEAR(coverage_fraction(strip, std::ldexp(1.0, -9), 4096), 0.25, 0.01);
  try {
    coverage_fraction({}, 0.1, 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedFraction);
  }
}

TEST(Oscillation, ThetaOneIsOmegaOne) {
  const GridPtr g = build_grid(Domain::unit(1), {60});
  const GridFunction a = constant(g, 1.0), b = constant(g, -1.0);
  for (std::size_t k = 1; k <= 5; ++k) {
    const GridFunction u = oscillation_sequence(1.0, a, b, k);
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_EQ(u.at(i)[0], 1.0);
  }
}

TEST(Oscillation, MeanAndWeakStarPairing) {
  const GridPtr g = build_grid(Domain::unit(1), {240});
  const GridFunction a = constant(g, 1.0), b = constant(g, -1.0);
  for (std::size_t k : {1u, 2u, 3u, 7u, 16u, 24u}) {
    const GridFunction u = oscillation_sequence(0.5, a, b, k);
    // stripe edges round to cell edges when k does not divide the node count
    const double rounding = 240 % (2 * k) == 0 ? 0.0 : 2.0 * static_cast<double>(k) / 240;
    double mean = 0.0, pair = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      mean += g->weight() * u.at(i)[0];
      pair += g->weight() * u.at(i)[0] * g->node(i)[0];
    }
    EXPECT_LE(std::abs(mean), 1.0 / static_cast<double>(k) + rounding + 1e-12) << k;
    // limit θω₁ + (1 − θ)ω₂ = 0, so ∫ u_k x → 0
    EXPECT_LE(std::abs(pair), 1.0 / static_cast<double>(k) + rounding + 1e-12) << k;

    const std::vector<bool> chi = stripe_indicator(*g, 0.3, k);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double h = g->node(i)[0];
      lhs += g->weight() * (chi[i] ? 1.0 : 0.0) * h;
      rhs += g->weight() * h;
    }
    EXPECT_LE(std::abs(lhs - 0.3 * rhs), 1.0 / static_cast<double>(k) + static_cast<double>(k) / 240 + 1e-12) << k;
  }
}

TEST(Oscillation, MismatchedGrids) {
  const GridPtr g = build_grid(Domain::unit(1), {10});
  const GridPtr h = build_grid(Domain::unit(1), {12});
  try {
    oscillation_sequence(0.5, constant(g, 1.0), constant(h, 0.0), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMismatch);
  }
}

TEST(LscProbe, NonLscExample) {
  const GridPtr g = build_grid(Domain::unit(1), {1024});
  const LscProbeReport r = lsc_probe(builtin("example-4-nonlsc"), scalar_shrink_plan(constant(g, 0), constant(g, 1)), 16);
  ASSERT_EQ(r.J_values.size(), 16u);
  for (double J : r.J_values) EXPECT_NEAR(J, -1.0, 2e-2);
  EXPECT_NEAR(r.J_limit, 0.0, 1e-12);
  EXPECT_TRUE(r.violated);
  EXPECT_NEAR(r.margin, 1.0, 2e-2);
  EXPECT_EQ(r.tail_window, 4u);
  double tail_min = 1e300;
  for (std::size_t k = r.J_values.size() - r.tail_window; k < r.J_values.size(); ++k)
    tail_min = std::min(tail_min, r.J_values[k]);
  EXPECT_EQ(r.liminf_estimate, tail_min);
  const std::string csv = lsc_probe_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,J");
}

TEST(LscProbe, OscillationDichotomy) {
  const GridPtr g = build_grid(Domain::unit(1), {256});
  const SequencePlan plan = oscillation_plan(0.5, constant(g, 1), constant(g, -1));
  const LscProbeReport bad = lsc_probe(builtin("neg-quadratic-diff"), plan, 32);
  EXPECT_TRUE(bad.violated);
  EXPECT_NEAR(bad.liminf_estimate, -2.0, 5e-2);
  const LscProbeReport good = lsc_probe(builtin("quadratic-diff"), plan, 32);
  EXPECT_FALSE(good.violated);
  EXPECT_NEAR(good.liminf_estimate, 2.0, 5e-2);
  EXPECT_EQ(good.mode, ConvergenceMode::kWeakStar);
}

TEST(LscProbe, StrongPlansNeverViolateForContinuousIntegrands) {
  const GridPtr g = build_grid(Domain::unit(1), {64});
  const GridFunction limit = GridFunction::from_fn(g, 1, [](auto x, auto o) { o[0] = x[0] - 0.5; });
  const GridFunction dir = GridFunction::from_fn(g, 1, [](auto x, auto o) { o[0] = std::cos(7 * x[0]); });
  for (const char* name : {"quadratic-diff", "kernel-quadratic", "coercive", "exp-product", "neg-quadratic-diff"}) {
    EXPECT_FALSE(lsc_probe(builtin(name), strong_plan(limit, dir), 16).violated) << name;
  }
}

TEST(Pairings, DictionaryShape) {
  const GridPtr g = build_grid(Domain::unit(2), {8, 8});
  const auto names = pairing_dictionary_names(*g);
  const GridFunction u = GridFunction::constant(g, std::vector<double>{1.0});
  const auto p = pairings(u);
  ASSERT_EQ(names.size(), p.size());
  EXPECT_NEAR(p[0], 1.0, 1e-14);  // pairing with 1 is the mean
}

TEST(Integrability, DifferencePenaltyHasNoWitness) {
  IntegrabilityOptions opts;
  opts.max_nodes = 512;
  const IntegrabilityWitness w = integrability_witness(builtin("quadratic-diff"), Domain::unit(1),
                                                       FieldExpr::parse({"x1"}, 1), FieldExpr::parse({"-x1"}, 1), opts);
  EXPECT_FALSE(w.found);
  EXPECT_EQ(w.branch, "none");
  EXPECT_FALSE(w.u.has_value());
}

TEST(Integrability, DivergentExampleIsFiniteForConstantPsi) {
  IntegrabilityOptions opts;
  opts.max_nodes = 1024;
  const IntegrabilityWitness w =
      integrability_witness(builtin("example-3-divergent"), Domain::unit(1), FieldExpr::constant({0.0}, 1),
                            FieldExpr::constant({0.5}, 1), opts);
  EXPECT_FALSE(w.found);
}

TEST(Integrability, ASplitBranch) {
  // g = f(x,y,φ(x),ψ(y)) = 1/(x²(1−y)²) on {φ > 0, ψ < 0}; the cross term
  // ∫_A∫_{A^c} g diverges for A = (0, 1/2).
  const Integrand f = Integrand::parse("step(w1) * step(-z1) / (x1^2 * (1 - y1)^2)", 1, 1);
  const IntegrabilityWitness w = integrability_witness(f, Domain::unit(1), FieldExpr::constant({1.0}, 1),
                                                       FieldExpr::constant({-1.0}, 1));
  ASSERT_TRUE(w.found);
  EXPECT_EQ(w.branch, "a-split");
  ASSERT_TRUE(w.u.has_value());
  for (double v : w.u->values()) EXPECT_TRUE(v == 1.0 || v == -1.0);
  // replay: J(u) on the finest grid reproduces the reported value
  EXPECT_NEAR(evaluate(f, *w.u).value.value(), w.J_u, 1e-9 * std::abs(w.J_u));
  EXPECT_GE(w.J_u, w.lower_bound * (1 - 1e-12));
  for (std::size_t k = 1; k < w.refinement_values.size(); ++k)
    EXPECT_GT(w.refinement_values[k], w.refinement_values[k - 1]);
}

TEST(Integrability, CheckerboardBranch) {
  const Integrand f = Integrand::parse("1 / (x1 + y1)^3", 1, 1);
  const IntegrabilityWitness w = integrability_witness(f, Domain::unit(1), FieldExpr::constant({0.0}, 1),
                                                       FieldExpr::constant({0.0}, 1));
  ASSERT_TRUE(w.found);
  EXPECT_EQ(w.branch, "checkerboard");
  ASSERT_FALSE(w.nest.empty());
  std::size_t used = 0;
  for (const NestLevel& l : w.nest) {
    if (l.N_l == 0) continue;
    ++used;
    EXPECT_GT(l.min_coverage, 0.1);
    EXPECT_GT(l.delta, 0.0);
  }
  EXPECT_GE(used, 1u);
  EXPECT_GT(w.layered_bound, 0.0);
  EXPECT_GT(w.lower_bound, 0.0);
}

TEST(Homogeneous, ExpProductBlowup) {
  const HomogeneousWitness w = homogeneous_witness(builtin("exp-product"), Domain::unit(1), Exponent(1.0), 1.0);
  ASSERT_TRUE(w.found);
  ASSERT_TRUE(w.u.has_value());
  EXPECT_LE(w.norm, 1.0 + 1e-9);
  EXPECT_NEAR(lp_norm(*w.u).value(), w.norm, 1e-12);
  ASSERT_EQ(w.truncated_J.size(), 8u);
  for (std::size_t k = 0; k < w.ratios.size(); ++k) {
    EXPECT_GE(w.ratios[k], std::ldexp(1.0, 2 * static_cast<int>(k + 1) + 2));
    // E_k measure as prescribed, rounded down to cells
    const double target = 1.0 / (std::ldexp(1.0, static_cast<int>(k + 2)) * (1 + std::abs(w.w_k[k][0])));
    EXPECT_LE(w.measure_E[k], target + 1e-15);
  }
  for (std::size_t k = 1; k < w.truncated_J.size(); ++k) EXPECT_GE(w.truncated_J[k] - w.truncated_J[k - 1], 0.2);
}

TEST(Homogeneous, NormBoundForP2AndBoundedIntegrand) {
  const HomogeneousWitness w = homogeneous_witness(builtin("exp-product"), Domain::unit(1), Exponent(2.0), 1.0);
  if (w.found) {
    EXPECT_LE(w.norm, 1.0 + 1e-9);
  }
  const HomogeneousWitness none =
      homogeneous_witness(Integrand::parse("w1^2 * z1^2", 1, 1), Domain::unit(1), Exponent(2.0), 1.0);
  EXPECT_FALSE(none.found);
  EXPECT_FALSE(none.u.has_value());
  EXPECT_THROW(homogeneous_witness(builtin("kernel-quadratic"), Domain::unit(1), Exponent(2.0), 1.0), Error);
}
