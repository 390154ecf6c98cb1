#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include "nlf/nlf.h"

using nlohmann::json;

namespace {

// Takes ownership of a library-allocated string.
std::string take(char* s) {
  std::string out = s ? s : "";
  nlf_string_free(s);
  return out;
}

struct Fixture {
  nlf_grid* grid = nullptr;
  nlf_integrand* f = nullptr;
  nlf_gridfn* u = nullptr;
  ~Fixture() {
    nlf_gridfn_free(u);
    nlf_integrand_free(f);
    nlf_grid_free(grid);
  }
};

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STRNE(nlf_version(), "");
  EXPECT_STREQ(nlf_status_name(NLF_OK), "ok");
  EXPECT_STREQ(nlf_status_name(NLF_ERR_POLE), "pole");
}

TEST(CApi, GridBasics) {
  nlf_grid* g = nullptr;
  const size_t n[] = {4};
  ASSERT_EQ(nlf_grid_create("0,1", n, 1, &g), NLF_OK);
  EXPECT_EQ(nlf_grid_size(g), 4u);
  EXPECT_EQ(nlf_grid_dim(g), 1u);
  EXPECT_DOUBLE_EQ(nlf_grid_weight(g), 0.25);
  double x = 0;
  ASSERT_EQ(nlf_grid_node(g, 2, &x), NLF_OK);
  EXPECT_DOUBLE_EQ(x, 0.625);
  EXPECT_EQ(nlf_grid_node(g, 9, &x), NLF_ERR_INVALID_ARGUMENT);
  nlf_grid_free(g);

  const size_t zero[] = {0};
  EXPECT_EQ(nlf_grid_create("0,1", zero, 1, &g), NLF_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(nlf_last_error()), "");
  EXPECT_EQ(nlf_grid_create("1,0", n, 1, &g), NLF_ERR_INVALID_DOMAIN);
  const size_t two[] = {3};
  ASSERT_EQ(nlf_grid_create("0,1;0,2", two, 1, &g), NLF_OK);
  EXPECT_EQ(nlf_grid_size(g), 9u);
  nlf_grid_free(g);
  EXPECT_EQ(nlf_grid_create("0,1", n, 1, nullptr), NLF_ERR_INVALID_ARGUMENT);
}

TEST(CApi, IntegrandParseErrorsAndEval) {
  nlf_integrand* f = nullptr;
  EXPECT_EQ(nlf_integrand_create("(w1 +", 1, 1, &f), NLF_ERR_SYNTAX);
  EXPECT_NE(std::string(nlf_last_error()).find("offset 4"), std::string::npos);
  EXPECT_EQ(nlf_integrand_create("w3", 1, 1, &f), NLF_ERR_UNKNOWN_IDENTIFIER);
  EXPECT_EQ(nlf_integrand_create("builtin:none", 0, 0, &f), NLF_ERR_UNKNOWN_NAME);

  ASSERT_EQ(nlf_integrand_create("w2 * z1 + x2", 0, 0, &f), NLF_OK);
  EXPECT_EQ(nlf_integrand_dim_m(f), 2u);
  EXPECT_EQ(nlf_integrand_dim_n(f), 2u);
  nlf_integrand_free(f);

  ASSERT_EQ(nlf_integrand_create("builtin:example-3-divergent", 0, 0, &f), NLF_OK);
  const double x = 0.25, y = 0.0, w = 0.0, z = 0.5;
  double out = 0;
  ASSERT_EQ(nlf_integrand_eval(f, &x, &y, &w, &z, &out), NLF_OK);
  EXPECT_DOUBLE_EQ(out, 2.0);
  char* dom = nullptr;
  ASSERT_EQ(nlf_integrand_domain(f, &dom), NLF_OK);
  EXPECT_FALSE(take(dom).empty());
  nlf_integrand_free(f);

  ASSERT_EQ(nlf_integrand_create("1 / w1", 1, 1, &f), NLF_OK);
  const double w0 = 0.0;
  EXPECT_EQ(nlf_integrand_eval(f, &x, &y, &w0, &z, &out), NLF_ERR_POLE);
  nlf_integrand_free(f);

  char* list = nullptr;
  ASSERT_EQ(nlf_builtin_list(&list), NLF_OK);
  const json j = json::parse(take(list));
  ASSERT_TRUE(j.is_array());
  EXPECT_GE(j.size(), 10u);
  EXPECT_TRUE(j[0].contains("name"));
}

TEST(CApi, EvaluateAndGradient) {
  Fixture fx;
  const size_t n[] = {1000};
  ASSERT_EQ(nlf_grid_create("0,1", n, 1, &fx.grid), NLF_OK);
  ASSERT_EQ(nlf_integrand_create("builtin:product", 0, 0, &fx.f), NLF_OK);
  const char* ex[] = {"x1"};
  ASSERT_EQ(nlf_gridfn_from_exprs(fx.grid, ex, 1, 2.0, &fx.u), NLF_OK);
  double J = 0;
  char* js = nullptr;
  ASSERT_EQ(nlf_evaluate(fx.f, fx.u, &J, &js), NLF_OK);
  EXPECT_NEAR(J, 0.25, 1e-4);
  EXPECT_NEAR(json::parse(take(js)).at("value").get<double>(), J, 0);

  nlf_gridfn* grad = nullptr;
  ASSERT_EQ(nlf_gradient(fx.f, fx.u, &grad), NLF_OK);
  size_t count = 0;
  const double* gv = nlf_gridfn_values(grad, &count);
  ASSERT_EQ(count, 1000u);
  // ∂_w(wz) = z, so grad_i = 2·weight²·Σ_j x_j = 2·weight·mean(x)
  EXPECT_NEAR(gv[0], 2e-3 * 0.5, 1e-12);
  nlf_gridfn_free(grad);

  double err = 1;
  ASSERT_EQ(nlf_grad_check(fx.f, fx.u, 1e-5, 7, &err), NLF_OK);
  EXPECT_LE(err, 1e-6);
}

TEST(CApi, GridFunctionCsvAndMismatch) {
  Fixture fx;
  const size_t n[] = {5};
  ASSERT_EQ(nlf_grid_create("0,1", n, 1, &fx.grid), NLF_OK);
  const double v[] = {1, 2, 3, 4, 5};
  ASSERT_EQ(nlf_gridfn_create(fx.grid, 1, v, INFINITY, &fx.u), NLF_OK);
  char* csv = nullptr;
  ASSERT_EQ(nlf_gridfn_to_csv(fx.u, &csv), NLF_OK);
  const std::string text = take(csv);
  nlf_gridfn* back = nullptr;
  ASSERT_EQ(nlf_gridfn_from_csv(fx.grid, text.c_str(), 2.0, &back), NLF_OK);
  size_t count = 0;
  const double* bv = nlf_gridfn_values(back, &count);
  ASSERT_EQ(count, 5u);
  for (size_t i = 0; i < 5; ++i) EXPECT_EQ(bv[i], v[i]);
  nlf_gridfn_free(back);
  const double nan_v[] = {NAN, 1, 1, 1, 1};
  EXPECT_EQ(nlf_gridfn_create(fx.grid, 1, nan_v, 2.0, &back), NLF_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nlf_gridfn_create(fx.grid, 1, v, 0.5, &back), NLF_ERR_INVALID_ARGUMENT);

  ASSERT_EQ(nlf_integrand_create("w1 + w2 + z1 + z2", 1, 2, &fx.f), NLF_OK);
  double J = 0;
  EXPECT_EQ(nlf_evaluate(fx.f, fx.u, &J, nullptr), NLF_ERR_MISMATCH);
}

TEST(CApi, Checks) {
  nlf_integrand* f = nullptr;
  int refuted = -1;
  char* js = nullptr;
  ASSERT_EQ(nlf_integrand_create("(w1 - z1)^2", 1, 1, &f), NLF_OK);
  ASSERT_EQ(nlf_check_separately_convex(f, "0,1", 0.0, 500, 1, &refuted, &js), NLF_OK);
  EXPECT_EQ(refuted, 0);
  EXPECT_EQ(json::parse(take(js)).at("status").get<std::string>(), "evidence-passed");
  ASSERT_EQ(nlf_check_symmetry(f, "0,1", 200, 1, &refuted, nullptr), NLF_OK);
  EXPECT_EQ(refuted, 0);
  nlf_wlsc_outcome outcome = NLF_WLSC_INCONCLUSIVE;
  ASSERT_EQ(nlf_wlsc_verdict(f, "0,1", 2.0, 32, 500, 1, &outcome, nullptr), NLF_OK);
  EXPECT_EQ(outcome, NLF_WLSC_EVIDENCE);
  nlf_integrand_free(f);

  ASSERT_EQ(nlf_integrand_create("-(w1 - z1)^2", 1, 1, &f), NLF_OK);
  nlf_grid* g = nullptr;
  const size_t n[] = {32};
  ASSERT_EQ(nlf_grid_create("0,1", n, 1, &g), NLF_OK);
  ASSERT_EQ(nlf_check_phi_convex(f, g, 3, 3, 10, 1, &refuted, nullptr), NLF_OK);
  EXPECT_EQ(refuted, 1);
  nlf_integrand_free(f);

  ASSERT_EQ(nlf_integrand_create("exp(w1 * z1)", 1, 1, &f), NLF_OK);
  ASSERT_EQ(nlf_check_homogeneous_bound(f, 1.0, 1.0, 2000, 1, &refuted, nullptr), NLF_OK);
  EXPECT_EQ(refuted, 1);
  nlf_integrand_free(f);

  ASSERT_EQ(nlf_integrand_create("x1 * w1", 1, 1, &f), NLF_OK);
  EXPECT_EQ(nlf_check_homogeneous_bound(f, 1.0, 1.0, 100, 1, &refuted, nullptr), NLF_ERR_NON_HOMOGENEOUS);
  nlf_integrand_free(f);

  ASSERT_EQ(nlf_integrand_create("(w1 - z1)^2", 1, 1, &f), NLF_OK);
  ASSERT_EQ(nlf_check_p_bound(f, g, 2.0, 2.0, 0.0, 1.0, 2.0, 1000, 1, &refuted, nullptr), NLF_OK);
  EXPECT_EQ(refuted, 0);
  nlf_integrand_free(f);
  nlf_grid_free(g);
}

TEST(CApi, Checkerboard) {
  int inside = -1;
  const double x0[] = {0.0};
  ASSERT_EQ(nlf_checkerboard_membership(0.5, x0, 1, &inside), NLF_OK);
  EXPECT_EQ(inside, 1);
  const double xb[] = {0.25};
  EXPECT_EQ(nlf_checkerboard_membership(0.5, xb, 1, &inside), NLF_ERR_BOUNDARY);
  const double box[] = {0, 1, 0, 1};
  double frac = 0;
  ASSERT_EQ(nlf_checkerboard_coverage(box, 1, 1, 1.0 / 1024, 4096, &frac), NLF_OK);
  EXPECT_NEAR(frac, 0.25, 0.01);
  EXPECT_EQ(nlf_checkerboard_coverage(box, 0, 1, 0.1, 64, &frac), NLF_ERR_UNDEFINED_FRACTION);
}

TEST(CApi, ProbesAndWitnesses) {
  Fixture fx;
  const size_t n[] = {512};
  ASSERT_EQ(nlf_grid_create("0,1", n, 1, &fx.grid), NLF_OK);
  ASSERT_EQ(nlf_integrand_create("builtin:example-4-nonlsc", 0, 0, &fx.f), NLF_OK);
  const char* zero[] = {"0"};
  const char* one[] = {"1"};
  nlf_gridfn* lim = nullptr;
  nlf_gridfn* dir = nullptr;
  ASSERT_EQ(nlf_gridfn_from_exprs(fx.grid, zero, 1, 2.0, &lim), NLF_OK);
  ASSERT_EQ(nlf_gridfn_from_exprs(fx.grid, one, 1, 2.0, &dir), NLF_OK);
  int violated = -1;
  char* js = nullptr;
  char* csv = nullptr;
  ASSERT_EQ(nlf_probe_shift(fx.f, "scalar-shrink", lim, dir, 8, &violated, &js, &csv), NLF_OK);
  EXPECT_EQ(violated, 1);
  EXPECT_NEAR(json::parse(take(js)).at("margin").get<double>(), 1.0, 2e-2);
  EXPECT_EQ(take(csv).substr(0, 4), "k,J\n");
  EXPECT_EQ(nlf_probe_shift(fx.f, "sideways", lim, dir, 8, &violated, nullptr, nullptr), NLF_ERR_UNKNOWN_NAME);

  nlf_integrand* q = nullptr;
  ASSERT_EQ(nlf_integrand_create("builtin:quadratic-diff", 0, 0, &q), NLF_OK);
  const char* m1[] = {"-1"};
  nlf_gridfn* neg = nullptr;
  ASSERT_EQ(nlf_gridfn_from_exprs(fx.grid, m1, 1, 2.0, &neg), NLF_OK);
  ASSERT_EQ(nlf_probe_oscillation(q, 0.5, dir, neg, 16, &violated, nullptr, nullptr), NLF_OK);
  EXPECT_EQ(violated, 0);

  int found = -1;
  nlf_gridfn* u = nullptr;
  nlf_integrand* e = nullptr;
  ASSERT_EQ(nlf_integrand_create("builtin:exp-product", 0, 0, &e), NLF_OK);
  ASSERT_EQ(nlf_witness_homogeneous(e, "0,1", 1.0, 1.0, 8, 1u << 16, 0x5EED, &found, &u, &js), NLF_OK);
  EXPECT_EQ(found, 1);
  ASSERT_NE(u, nullptr);
  EXPECT_LE(json::parse(take(js)).at("norm").get<double>(), 1.0 + 1e-9);
  nlf_gridfn_free(u);

  const char* phi[] = {"0"};
  ASSERT_EQ(nlf_witness_integrability(q, "0,1", phi, phi, 64, 512, &found, nullptr, nullptr), NLF_OK);
  EXPECT_EQ(found, 0);

  nlf_gridfn_free(lim);
  nlf_gridfn_free(dir);
  nlf_gridfn_free(neg);
  nlf_integrand_free(q);
  nlf_integrand_free(e);
}

TEST(CApi, DecomposeNullClassMinimize) {
  Fixture fx;
  const size_t n[] = {32};
  ASSERT_EQ(nlf_grid_create("0,1", n, 1, &fx.grid), NLF_OK);
  ASSERT_EQ(nlf_integrand_create("builtin:weighted-quadratic", 0, 0, &fx.f), NLF_OK);
  char* js = nullptr;
  char* gcsv = nullptr;
  ASSERT_EQ(nlf_decompose(fx.f, fx.grid, -2, 2, 33, &js, &gcsv, nullptr), NLF_OK);
  EXPECT_TRUE(json::parse(take(js)).is_object());
  EXPECT_EQ(take(gcsv).substr(0, 13), "x1,y1,w,value");

  nlf_integrand* bad = nullptr;
  ASSERT_EQ(nlf_integrand_create("-w1^2 - z1^2", 1, 1, &bad), NLF_OK);
  EXPECT_EQ(nlf_decompose(bad, fx.grid, -1, 1, 9, nullptr, nullptr, nullptr), NLF_ERR_PHI_NONCONVEX);
  nlf_integrand_free(bad);

  int refuted = -1;
  ASSERT_EQ(nlf_nullclass("(y1 - 0.5) * w1^2", "0", fx.grid, -2, 2, 17, 20, 1, &refuted, nullptr), NLF_OK);
  EXPECT_EQ(refuted, 0);
  ASSERT_EQ(nlf_nullclass("w1^2", "0", fx.grid, -2, 2, 17, 20, 1, &refuted, nullptr), NLF_OK);
  EXPECT_EQ(refuted, 1);

  nlf_integrand* anchored = nullptr;
  ASSERT_EQ(nlf_integrand_create("builtin:anchored", 0, 0, &anchored), NLF_OK);
  const char* zero[] = {"0"};
  nlf_gridfn* u0 = nullptr;
  ASSERT_EQ(nlf_gridfn_from_exprs(fx.grid, zero, 1, 2.0, &u0), NLF_OK);
  nlf_minimize_config cfg;
  nlf_minimize_config_default(&cfg);
  EXPECT_EQ(cfg.max_iters, 500u);
  nlf_gridfn* ustar = nullptr;
  int converged = 0;
  char* trace = nullptr;
  ASSERT_EQ(nlf_minimize(anchored, u0, &cfg, &ustar, &converged, &js, &trace), NLF_OK);
  EXPECT_EQ(converged, 1);
  EXPECT_LE(json::parse(take(js)).at("J_star").get<double>(), 1e-10);
  EXPECT_EQ(take(trace).substr(0, 4), "iter");
  size_t count = 0;
  const double* v = nlf_gridfn_values(ustar, &count);
  for (size_t i = 0; i < count; ++i) EXPECT_NEAR(v[i], 1.0, 1e-6);
  cfg.armijo_c = 2.0;
  EXPECT_EQ(nlf_minimize(anchored, u0, &cfg, nullptr, nullptr, nullptr, nullptr), NLF_ERR_INVALID_ARGUMENT);
  nlf_gridfn_free(ustar);
  nlf_gridfn_free(u0);
  nlf_integrand_free(anchored);
}

TEST(CApi, Repro) {
  char* list = nullptr;
  ASSERT_EQ(nlf_repro_list(&list), NLF_OK);
  const json ids = json::parse(take(list));
  EXPECT_EQ(ids.size(), 7u);
  int matches = 0, adverse = 0;
  char* js = nullptr;
  ASSERT_EQ(nlf_repro("thm-null-class", &matches, &adverse, &js), NLF_OK);
  EXPECT_EQ(matches, 1);
  EXPECT_EQ(adverse, 0);
  EXPECT_EQ(json::parse(take(js)).at("observed").get<std::string>(), "holds");
  EXPECT_EQ(nlf_repro("nope", &matches, &adverse, nullptr), NLF_ERR_UNKNOWN_NAME);
}

TEST(CApi, LastErrorIsThreadLocalAndSticky) {
  nlf_integrand* f = nullptr;
  EXPECT_EQ(nlf_integrand_create("(", 1, 1, &f), NLF_ERR_SYNTAX);
  const std::string msg = nlf_last_error();
  EXPECT_FALSE(msg.empty());
  std::string other;
  std::thread t([&] { other = nlf_last_error(); });
  t.join();
  EXPECT_TRUE(other.empty());
  EXPECT_EQ(std::string(nlf_last_error()), msg);
}
