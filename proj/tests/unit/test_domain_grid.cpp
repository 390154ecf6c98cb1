#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlf/domain_grid.hpp"
#include "nlf/error.hpp"
#include "nlf/sampler.hpp"

using namespace nlf;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(BuildGrid, UnitIntervalMidpoints) {
  const GridPtr g = build_grid(Domain::unit(1), {4});
  ASSERT_EQ(g->size(), 4u);
  const std::vector<double> expect{0.125, 0.375, 0.625, 0.875};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g->node(i)[0], expect[i]);
  EXPECT_DOUBLE_EQ(g->weight(), 0.25);
}

TEST(BuildGrid, UnitSquareTwoByTwo) {
  const GridPtr g = build_grid(Domain::unit(2), {2, 2});
  EXPECT_EQ(g->size(), 4u);
  EXPECT_DOUBLE_EQ(g->weight(), 0.25);
  EXPECT_DOUBLE_EQ(g->mass(), 1.0);
}

TEST(BuildGrid, ZeroNodesIsInvalidArgument) {
  EXPECT_EQ(code_of([] { build_grid(Domain::unit(1), {0}); }), ErrorCode::kInvalidArgument);
}

TEST(BuildGrid, DegenerateBoxIsInvalidDomain) {
  EXPECT_EQ(code_of([] { Domain({Interval{1.0, 1.0}}); }), ErrorCode::kInvalidDomain);
  EXPECT_EQ(code_of([] { Domain::parse("2,1"); }), ErrorCode::kInvalidDomain);
}

TEST(BuildGrid, NodesLieInsideTheirCells) {
  const GridPtr g = build_grid(Domain::parse("-1,2;0,0.5"), {7, 5});
  for (std::size_t i = 0; i < g->size(); ++i) {
    for (std::size_t a = 0; a < 2; ++a) {
      const double lo = g->domain().axis(a).lo + g->cell_width(a) * static_cast<double>(g->cell(i)[a]);
      EXPECT_GT(g->node(i)[a], lo);
      EXPECT_LT(g->node(i)[a], lo + g->cell_width(a));
    }
  }
  EXPECT_NEAR(g->mass(), 1.5, 1e-12 * 1.5);
}

TEST(Measure, UnmaskedBoxes) {
  EXPECT_DOUBLE_EQ(Domain::unit(1).measure(16), 1.0);
  EXPECT_DOUBLE_EQ(Domain::parse("-1,1;-1,1").measure(16), 4.0);
}

TEST(Measure, MaskedHalfInterval) {
  const Domain half({Interval{0.0, 1.0}}, [](std::span<const double> x) { return x[0] < 0.5; });
  EXPECT_NEAR(half.measure(10000), 0.5, 1e-4);
}

TEST(Measure, MaskedRefinementConsistency) {
  const Domain d({Interval{0.0, 1.0}, Interval{0.0, 1.0}},
                 [](std::span<const double> x) { return x[0] + 0.3 * x[1] < 0.7; });
  for (std::size_t r : {16u, 64u, 256u}) {
    EXPECT_LE(std::abs(d.measure(r) - d.measure(2 * r)), 2.0 / static_cast<double>(r));
  }
}

TEST(Measure, MaskedGridOnlyCarriesInsideCells) {
  const Domain half({Interval{0.0, 1.0}}, [](std::span<const double> x) { return x[0] < 0.5; });
  const GridPtr g = build_grid(half, {10});
  EXPECT_EQ(g->size(), 5u);
  const Domain none({Interval{0.0, 1.0}}, [](std::span<const double>) { return false; });
  EXPECT_EQ(code_of([&] { build_grid(none, {10}); }), ErrorCode::kInvalidDomain);
}

TEST(PFunction, Examples) {
  const std::vector<double> w{3.0, 4.0};
  EXPECT_DOUBLE_EQ(p_function(w, Exponent(2.0), 1.0).value(), 25.0);
  const std::vector<double> half{0.5}, two{2.0}, one{1.0};
  EXPECT_EQ(p_function(half, Exponent::infinity(), 1.0).value(), 0.0);
  EXPECT_TRUE(p_function(two, Exponent::infinity(), 1.0).is_infinite());
  // strict inequality |w| > M
  EXPECT_EQ(p_function(one, Exponent::infinity(), 1.0).value(), 0.0);
}

TEST(ExponentParse, AcceptsFiniteAndInfinite) {
  EXPECT_DOUBLE_EQ(Exponent::parse("2.5").value(), 2.5);
  EXPECT_TRUE(Exponent::parse("inf").is_infinite());
  EXPECT_DOUBLE_EQ(Exponent(2.0).conjugate(), 2.0);
  EXPECT_DOUBLE_EQ(Exponent(1.0).conjugate(), std::numeric_limits<double>::infinity());
  EXPECT_EQ(code_of([] { Exponent(0.5); }), ErrorCode::kInvalidArgument);
}

TEST(ExtRealArith, SaturatesWithoutNaN) {
  const ExtReal inf = ExtReal::infinity();
  EXPECT_TRUE((inf + ExtReal(-5.0)).is_infinite());
  EXPECT_EQ((inf * ExtReal(0.0)).value(), 0.0);
  EXPECT_TRUE((inf * ExtReal(2.0)).is_infinite());
}

TEST(LpNorm, Examples) {
  const GridPtr g = build_grid(Domain::unit(1), {100});
  EXPECT_NEAR(lp_norm(GridFunction::constant(g, std::vector<double>{1.0}, Exponent(2.0))).value(), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(
      lp_norm(GridFunction::constant(g, std::vector<double>{-3.5}, Exponent::infinity())).value(), 3.5);

  const GridPtr fine = build_grid(Domain::unit(1), {10000});
  const GridFunction x = GridFunction::from_fn(fine, 1, [](auto p, auto out) { out[0] = p[0]; });
  EXPECT_NEAR(lp_norm(x).value(), 1.0 / std::sqrt(3.0), 1e-6);
}

TEST(LpNorm, DiscreteIdentityAndHomogeneity) {
  const GridPtr g = build_grid(Domain::unit(2), {9, 7});
  Rng rng(kDefaultSeed);
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    std::vector<double> v(g->size() * 2);
    for (double& e : v) e = rng.uniform(-2.0, 2.0);
    const GridFunction u(g, 2, v, Exponent(p));
    const double norm = lp_norm(u).value();
    EXPECT_NEAR(std::pow(norm, p), integrated_p_function(u, 1.0).value(),
                1e-13 * integrated_p_function(u, 1.0).value());
    EXPECT_NEAR(lp_norm(u.scaled(-2.5)).value(), 2.5 * norm, 1e-12 * 2.5 * norm);
  }
}

TEST(GridFunctionTest, RejectsBadValues) {
  const GridPtr g = build_grid(Domain::unit(1), {4});
  EXPECT_EQ(code_of([&] { GridFunction(g, 1, {1.0, 2.0}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { GridFunction(g, 1, {1.0, 2.0, NAN, 0.0}); }), ErrorCode::kInvalidArgument);
}

TEST(GridFunctionTest, CsvRoundTrip) {
  const GridPtr g = build_grid(Domain::unit(2), {3, 4});
  const GridFunction u = GridFunction::from_fn(g, 2, [](auto p, auto out) {
    out[0] = p[0] * 0.1 + 1.0 / 3.0;
    out[1] = -p[1];
  });
  const std::string csv = to_csv(u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x1,x2,u1,u2");
  const GridFunction back = grid_function_from_csv(g, csv, Exponent(2.0));
  ASSERT_EQ(back.n(), 2u);
  for (std::size_t k = 0; k < u.values().size(); ++k) EXPECT_EQ(back.values()[k], u.values()[k]);
}

TEST(GridFunctionTest, CsvWithWrongNodesIsMismatch) {
  const GridPtr g = build_grid(Domain::unit(1), {4});
  const GridPtr h = build_grid(Domain::unit(1), {5});
  const std::string csv = to_csv(GridFunction::constant(g, std::vector<double>{1.0}));
  EXPECT_THROW(grid_function_from_csv(h, csv, Exponent(2.0)), Error);
}
