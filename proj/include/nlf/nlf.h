/* C interface to the non-local functional toolkit.
 *
 * Every fallible call returns an nlf_status; on failure the message is
 * available from nlf_last_error() on the calling thread. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * nlf_string_free. Out-parameters documented as optional may be NULL.
 * Domains are written "lo,hi;lo,hi" with one pair per axis. */
#ifndef NLF_H
#define NLF_H

#include <stddef.h>
#include <stdint.h>

#if defined(NLF_BUILDING_LIBRARY)
#define NLF_API __attribute__((visibility("default")))
#else
#define NLF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nlf_status {
  NLF_OK = 0,
  NLF_ERR_INVALID_ARGUMENT = 1,
  NLF_ERR_INVALID_DOMAIN = 2,
  NLF_ERR_SYNTAX = 3,
  NLF_ERR_UNKNOWN_IDENTIFIER = 4,
  NLF_ERR_ARITY = 5,
  NLF_ERR_POLE = 6,
  NLF_ERR_EVAL_DOMAIN = 7,
  NLF_ERR_NON_SMOOTH = 8,
  NLF_ERR_ASYMMETRIC = 9,
  NLF_ERR_UNSUPPORTED = 10,
  NLF_ERR_PHI_NONCONVEX = 11,
  NLF_ERR_BOUNDARY = 12,
  NLF_ERR_UNDEFINED_FRACTION = 13,
  NLF_ERR_NON_HOMOGENEOUS = 14,
  NLF_ERR_UNKNOWN_NAME = 15,
  NLF_ERR_MISMATCH = 16,
  NLF_ERR_IO = 17,
  NLF_ERR_INTERNAL = 99
} nlf_status;

typedef struct nlf_grid nlf_grid;
typedef struct nlf_integrand nlf_integrand;
typedef struct nlf_gridfn nlf_gridfn;

NLF_API const char* nlf_version(void);
NLF_API const char* nlf_status_name(nlf_status status);
NLF_API const char* nlf_last_error(void);
/* Caps worker threads; 0 restores the hardware default. */
NLF_API void nlf_set_threads(unsigned n);
NLF_API void nlf_string_free(char* s);

/* ---- grids */

/* node_counts has `axes` entries; a single entry applies to every axis. */
NLF_API nlf_status nlf_grid_create(const char* domain, const size_t* node_counts, size_t axes, nlf_grid** out);
NLF_API void nlf_grid_free(nlf_grid* grid);
NLF_API size_t nlf_grid_size(const nlf_grid* grid);
NLF_API size_t nlf_grid_dim(const nlf_grid* grid);
NLF_API double nlf_grid_weight(const nlf_grid* grid);
NLF_API nlf_status nlf_grid_node(const nlf_grid* grid, size_t i, double* out);

/* ---- integrands */

/* spec is "builtin:<name>" or an expression. For expressions, dim_m or
 * dim_n equal to 0 are inferred from the highest variable index used. */
NLF_API nlf_status nlf_integrand_create(const char* spec, size_t dim_m, size_t dim_n, nlf_integrand** out);
NLF_API void nlf_integrand_free(nlf_integrand* f);
NLF_API size_t nlf_integrand_dim_m(const nlf_integrand* f);
NLF_API size_t nlf_integrand_dim_n(const nlf_integrand* f);
/* The builtin's natural domain, or the unit box for expressions. */
NLF_API nlf_status nlf_integrand_domain(const nlf_integrand* f, char** out);
NLF_API nlf_status nlf_integrand_eval(const nlf_integrand* f, const double* x, const double* y, const double* w,
                                      const double* z, double* out);
/* JSON array of {name, text, dim_m, dim_n, domain, description}. */
NLF_API nlf_status nlf_builtin_list(char** json);

/* ---- grid functions (values node-major, p may be INFINITY) */

NLF_API nlf_status nlf_gridfn_create(const nlf_grid* grid, size_t n, const double* values, double p,
                                     nlf_gridfn** out);
/* One expression in x1..xm per component. */
NLF_API nlf_status nlf_gridfn_from_exprs(const nlf_grid* grid, const char* const* exprs, size_t n, double p,
                                         nlf_gridfn** out);
NLF_API nlf_status nlf_gridfn_from_csv(const nlf_grid* grid, const char* csv, double p, nlf_gridfn** out);
NLF_API void nlf_gridfn_free(nlf_gridfn* u);
NLF_API size_t nlf_gridfn_n(const nlf_gridfn* u);
/* Borrowed pointer valid for the lifetime of u. */
NLF_API const double* nlf_gridfn_values(const nlf_gridfn* u, size_t* count);
NLF_API nlf_status nlf_gridfn_to_csv(const nlf_gridfn* u, char** out);

/* ---- functional */

/* value receives +inf for a divergent positive part; json is optional. */
NLF_API nlf_status nlf_evaluate(const nlf_integrand* f, const nlf_gridfn* u, double* value, char** json);
/* Φ at `count` points w (count × n doubles); CSV "w1..wn,phi". */
NLF_API nlf_status nlf_phi_profile(const nlf_integrand* f, const double* x, const nlf_gridfn* psi,
                                   const double* w, size_t count, char** csv);
NLF_API nlf_status nlf_gradient(const nlf_integrand* f, const nlf_gridfn* u, nlf_gridfn** out);
NLF_API nlf_status nlf_grad_check(const nlf_integrand* f, const nlf_gridfn* u, double h, uint64_t seed,
                                  double* out);

/* ---- property checks: *refuted is set to 1 when a witness was found */

NLF_API nlf_status nlf_check_symmetry(const nlf_integrand* f, const char* domain, size_t samples, uint64_t seed,
                                      int* refuted, char** json);
NLF_API nlf_status nlf_check_homogeneous_bound(const nlf_integrand* f, double p, double M, size_t samples,
                                               uint64_t seed, int* refuted, char** json);
/* Certificate with constant alpha, beta and C on the grid. */
NLF_API nlf_status nlf_check_p_bound(const nlf_integrand* f, const nlf_grid* grid, double alpha, double beta,
                                     double C, double M, double p, size_t samples, uint64_t seed, int* refuted,
                                     char** json);
/* value_bound <= 0 selects the mixed-magnitude distribution. */
NLF_API nlf_status nlf_check_separately_convex(const nlf_integrand* f, const char* domain, double value_bound,
                                               size_t samples, uint64_t seed, int* refuted, char** json);
NLF_API nlf_status nlf_check_phi_convex(const nlf_integrand* f, const nlf_grid* grid, size_t psi_count,
                                        size_t x_count, size_t triple_count, uint64_t seed, int* refuted,
                                        char** json);

typedef enum nlf_wlsc_outcome { NLF_WLSC_EVIDENCE = 0, NLF_WLSC_REFUTED = 1, NLF_WLSC_INCONCLUSIVE = 2 } nlf_wlsc_outcome;

NLF_API nlf_status nlf_wlsc_verdict(const nlf_integrand* f, const char* domain, double p, size_t grid_nodes,
                                    size_t samples, uint64_t seed, nlf_wlsc_outcome* outcome, char** json);

/* ---- witnesses */

NLF_API nlf_status nlf_checkerboard_membership(double delta, const double* x, size_t m, int* inside);
/* boxes: box_count records of 4m doubles, lo/hi pairs for x1..xm then y1..ym. */
NLF_API nlf_status nlf_checkerboard_coverage(const double* boxes, size_t box_count, size_t m, double delta,
                                             size_t resolution, double* fraction);
/* kind is "scalar-shrink" (limit + d/k) or "strong" (limit + d/k²). csv optional. */
NLF_API nlf_status nlf_probe_shift(const nlf_integrand* f, const char* kind, const nlf_gridfn* limit,
                                   const nlf_gridfn* direction, size_t k_max, int* violated, char** json,
                                   char** csv);
NLF_API nlf_status nlf_probe_oscillation(const nlf_integrand* f, double theta, const nlf_gridfn* omega1,
                                         const nlf_gridfn* omega2, size_t k_max, int* violated, char** json,
                                         char** csv);
/* phi and psi hold dim_n expressions each; u optional. */
NLF_API nlf_status nlf_witness_integrability(const nlf_integrand* f, const char* domain, const char* const* phi,
                                             const char* const* psi, size_t base_nodes, size_t max_nodes,
                                             int* found, nlf_gridfn** u, char** json);
NLF_API nlf_status nlf_witness_homogeneous(const nlf_integrand* f, const char* domain, double p, double M,
                                           size_t blocks, size_t nodes, uint64_t seed, int* found,
                                           nlf_gridfn** u, char** json);

/* ---- decomposition and null class (n = 1) */

/* w-grid of w_count equispaced points on [w_lo, w_hi]; CSV outputs optional. */
NLF_API nlf_status nlf_decompose(const nlf_integrand* f, const nlf_grid* grid, double w_lo, double w_hi,
                                 size_t w_count, char** json, char** g_csv, char** h_csv);
NLF_API nlf_status nlf_nullclass(const char* g, const char* h, const nlf_grid* grid, double w_lo, double w_hi,
                                 size_t w_count, size_t trials, uint64_t seed, int* refuted, char** json);

/* ---- minimization */

typedef struct nlf_minimize_config {
  size_t max_iters;
  double step0;
  double armijo_c;
  double shrink;
  double grad_tol;
  size_t max_shrinks;
  int use_box;
  double box_lo;
  double box_hi;
} nlf_minimize_config;

NLF_API void nlf_minimize_config_default(nlf_minimize_config* cfg);
/* u_star and trace_csv optional; *converged is optional too. */
NLF_API nlf_status nlf_minimize(const nlf_integrand* f, const nlf_gridfn* u0, const nlf_minimize_config* cfg,
                                nlf_gridfn** u_star, int* converged, char** json, char** trace_csv);

/* ---- reproductions of the worked examples */

NLF_API nlf_status nlf_repro_list(char** json);
/* *matches: observed outcome equals the expected one; *adverse: the
 * expected outcome is itself a refutation or violation. */
NLF_API nlf_status nlf_repro(const char* id, int* matches, int* adverse, char** json);

#ifdef __cplusplus
}
#endif

#endif /* NLF_H */
