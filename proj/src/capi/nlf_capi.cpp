#include "nlf/nlf.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "internal/json_build.hpp"
#include "nlf/analysis.hpp"
#include "nlf/error.hpp"
#include "nlf/functional.hpp"
#include "nlf/minimize.hpp"
#include "nlf/parallel.hpp"
#include "nlf/repro.hpp"
#include "nlf/serialize.hpp"
#include "nlf/witness.hpp"

struct nlf_grid {
  nlf::GridPtr grid;
};

struct nlf_integrand {
  nlf::Integrand f;
  nlf::Domain domain;
};

struct nlf_gridfn {
  nlf::GridFunction u;
};

namespace {

thread_local std::string g_last_error;

nlf_status fail(nlf_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs body, mapping exceptions to status codes.
template <class Body>
nlf_status guarded(Body&& body) {
  try {
    g_last_error.clear();
    body();
    return NLF_OK;
  } catch (const nlf::Error& e) {
    return fail(static_cast<nlf_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(NLF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NLF_ERR_INTERNAL, e.what());
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw nlf::Error(nlf::ErrorCode::kInvalidArgument, what);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

nlf::Domain domain_or(const char* text, const nlf::Domain& fallback) {
  return (text && *text) ? nlf::Domain::parse(text) : fallback;
}

nlf::Sampler sampler(std::size_t samples, std::uint64_t seed) {
  nlf::Sampler s;
  if (samples > 0) s.budget = samples;
  s.seed = seed;
  return s;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  require(count >= 2 && lo < hi, "w-grid needs at least two points and lo < hi");
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k) {
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return v;
}

// Highest index following one of the given variable letters, e.g. "w2" -> 2.
std::size_t highest_index(const std::string& text, const char* letters) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!std::strchr(letters, text[i])) continue;
    if (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_')) continue;
    std::size_t j = i + 1, v = 0;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) v = v * 10 + (text[j++] - '0');
    if (j == i + 1) continue;
    if (j < text.size() && (std::isalpha(static_cast<unsigned char>(text[j])) || text[j] == '_')) continue;
    best = std::max(best, v);
  }
  return best;
}

std::string domain_text(const nlf::Domain& d) {
  std::string out;
  char buf[64];
  for (std::size_t a = 0; a < d.dim(); ++a) {
    std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", a ? ";" : "", d.axis(a).lo, d.axis(a).hi);
    out += buf;
  }
  return out;
}

void put_verdict(const nlf::PropertyVerdict& v, int* refuted, char** json) {
  if (refuted) *refuted = v.refuted() ? 1 : 0;
  put(json, nlf::to_json(v));
}

}  // namespace

extern "C" {

const char* nlf_version(void) { return NLF_VERSION_STRING; }

const char* nlf_status_name(nlf_status status) {
  if (status == NLF_OK) return "ok";
  if (status == NLF_ERR_INTERNAL) return "internal";
  return nlf::error_code_name(static_cast<nlf::ErrorCode>(status));
}

const char* nlf_last_error(void) { return g_last_error.c_str(); }

void nlf_set_threads(unsigned n) { nlf::set_max_threads(n); }

void nlf_string_free(char* s) { std::free(s); }

// ---- grids

nlf_status nlf_grid_create(const char* domain, const size_t* node_counts, size_t axes, nlf_grid** out) {
  return guarded([&] {
    require(domain && node_counts && axes > 0 && out, "null argument");
    std::vector<std::size_t> counts(node_counts, node_counts + axes);
    *out = new nlf_grid{nlf::build_grid(nlf::Domain::parse(domain), std::move(counts))};
  });
}

void nlf_grid_free(nlf_grid* grid) { delete grid; }
size_t nlf_grid_size(const nlf_grid* grid) { return grid ? grid->grid->size() : 0; }
size_t nlf_grid_dim(const nlf_grid* grid) { return grid ? grid->grid->dim() : 0; }
double nlf_grid_weight(const nlf_grid* grid) { return grid ? grid->grid->weight() : 0.0; }

nlf_status nlf_grid_node(const nlf_grid* grid, size_t i, double* out) {
  return guarded([&] {
    require(grid && out, "null argument");
    require(i < grid->grid->size(), "node index out of range");
    const auto x = grid->grid->node(i);
    std::copy(x.begin(), x.end(), out);
  });
}

// ---- integrands

nlf_status nlf_integrand_create(const char* spec, size_t dim_m, size_t dim_n, nlf_integrand** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    const std::string text(spec);
    const std::string prefix = "builtin:";
    if (text.rfind(prefix, 0) == 0) {
      const auto& info = nlf::builtin_info(text.substr(prefix.size()));
      *out = new nlf_integrand{nlf::builtin(info.name), info.domain};
      return;
    }
    const std::size_t m = dim_m ? dim_m : std::max<std::size_t>(1, highest_index(text, "xy"));
    const std::size_t n = dim_n ? dim_n : std::max<std::size_t>(1, highest_index(text, "wz"));
    *out = new nlf_integrand{nlf::Integrand::parse(text, m, n), nlf::Domain::unit(m)};
  });
}

void nlf_integrand_free(nlf_integrand* f) { delete f; }
size_t nlf_integrand_dim_m(const nlf_integrand* f) { return f ? f->f.dim_m() : 0; }
size_t nlf_integrand_dim_n(const nlf_integrand* f) { return f ? f->f.dim_n() : 0; }

nlf_status nlf_integrand_domain(const nlf_integrand* f, char** out) {
  return guarded([&] {
    require(f && out, "null argument");
    *out = dup(domain_text(f->domain));
  });
}

nlf_status nlf_integrand_eval(const nlf_integrand* f, const double* x, const double* y, const double* w,
                              const double* z, double* out) {
  return guarded([&] {
    require(f && x && y && w && z && out, "null argument");
    const std::size_t m = f->f.dim_m(), n = f->f.dim_n();
    *out = f->f.eval({x, m}, {y, m}, {w, n}, {z, n});
  });
}

nlf_status nlf_builtin_list(char** json) {
  return guarded([&] {
    require(json, "null argument");
    nlf::detail::ordered_json a = nlf::detail::ordered_json::array();
    for (const auto& b : nlf::builtin_registry()) {
      a.push_back({{"name", b.name},
                   {"text", b.text},
                   {"dim_m", b.dim_m},
                   {"dim_n", b.dim_n},
                   {"domain", domain_text(b.domain)},
                   {"description", b.description}});
    }
    *json = dup(a.dump());
  });
}

// ---- grid functions

nlf_status nlf_gridfn_create(const nlf_grid* grid, size_t n, const double* values, double p, nlf_gridfn** out) {
  return guarded([&] {
    require(grid && values && out && n > 0, "null argument");
    std::vector<double> v(values, values + grid->grid->size() * n);
    *out = new nlf_gridfn{nlf::GridFunction(grid->grid, n, std::move(v), nlf::Exponent(p))};
  });
}

nlf_status nlf_gridfn_from_exprs(const nlf_grid* grid, const char* const* exprs, size_t n, double p,
                                 nlf_gridfn** out) {
  return guarded([&] {
    require(grid && exprs && out && n > 0, "null argument");
    std::vector<std::string> texts;
    for (std::size_t c = 0; c < n; ++c) {
      require(exprs[c] != nullptr, "null expression");
      texts.emplace_back(exprs[c]);
    }
    const auto field = nlf::FieldExpr::parse(texts, grid->grid->dim());
    *out = new nlf_gridfn{field.sample(grid->grid, nlf::Exponent(p))};
  });
}

nlf_status nlf_gridfn_from_csv(const nlf_grid* grid, const char* csv, double p, nlf_gridfn** out) {
  return guarded([&] {
    require(grid && csv && out, "null argument");
    *out = new nlf_gridfn{nlf::grid_function_from_csv(grid->grid, csv, nlf::Exponent(p))};
  });
}

void nlf_gridfn_free(nlf_gridfn* u) { delete u; }
size_t nlf_gridfn_n(const nlf_gridfn* u) { return u ? u->u.n() : 0; }

const double* nlf_gridfn_values(const nlf_gridfn* u, size_t* count) {
  if (!u) return nullptr;
  if (count) *count = u->u.values().size();
  return u->u.values().data();
}

nlf_status nlf_gridfn_to_csv(const nlf_gridfn* u, char** out) {
  return guarded([&] {
    require(u && out, "null argument");
    *out = dup(nlf::to_csv(u->u));
  });
}

// ---- functional

nlf_status nlf_evaluate(const nlf_integrand* f, const nlf_gridfn* u, double* value, char** json) {
  return guarded([&] {
    require(f && u, "null argument");
    const auto v = nlf::evaluate(f->f, u->u);
    if (value) *value = v.value.value();
    put(json, nlf::to_json(v));
  });
}

nlf_status nlf_phi_profile(const nlf_integrand* f, const double* x, const nlf_gridfn* psi, const double* w,
                           size_t count, char** csv) {
  return guarded([&] {
    require(f && x && psi && w && csv, "null argument");
    const std::size_t n = f->f.dim_n();
    std::vector<std::vector<double>> ws(count);
    for (std::size_t k = 0; k < count; ++k) ws[k].assign(w + k * n, w + (k + 1) * n);
    const auto prof = nlf::phi_profile(f->f, {x, f->f.dim_m()}, psi->u, ws);
    std::string out;
    for (std::size_t c = 0; c < n; ++c) out += "w" + std::to_string(c + 1) + ",";
    out += "phi\n";
    char buf[40];
    for (std::size_t k = 0; k < count; ++k) {
      for (double v : ws[k]) {
        std::snprintf(buf, sizeof buf, "%.17g,", v);
        out += buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g\n", prof.values[k]);
      out += buf;
    }
    *csv = dup(out);
  });
}

nlf_status nlf_gradient(const nlf_integrand* f, const nlf_gridfn* u, nlf_gridfn** out) {
  return guarded([&] {
    require(f && u && out, "null argument");
    *out = new nlf_gridfn{nlf::gradient(f->f, u->u)};
  });
}

nlf_status nlf_grad_check(const nlf_integrand* f, const nlf_gridfn* u, double h, uint64_t seed, double* out) {
  return guarded([&] {
    require(f && u && out, "null argument");
    *out = nlf::grad_check(f->f, u->u, h, seed);
  });
}

// ---- property checks

nlf_status nlf_check_symmetry(const nlf_integrand* f, const char* domain, size_t samples, uint64_t seed,
                              int* refuted, char** json) {
  return guarded([&] {
    require(f, "null argument");
    const auto v = nlf::check_pairwise_symmetry(f->f, samples ? samples : 512, seed, domain_or(domain, f->domain));
    put_verdict(v, refuted, json);
  });
}

nlf_status nlf_check_homogeneous_bound(const nlf_integrand* f, double p, double M, size_t samples, uint64_t seed,
                                       int* refuted, char** json) {
  return guarded([&] {
    require(f, "null argument");
    put_verdict(nlf::check_homogeneous_bound(f->f, nlf::Exponent(p), M, sampler(samples, seed)), refuted, json);
  });
}

nlf_status nlf_check_p_bound(const nlf_integrand* f, const nlf_grid* grid, double alpha, double beta, double C,
                             double M, double p, size_t samples, uint64_t seed, int* refuted, char** json) {
  return guarded([&] {
    require(f && grid, "null argument");
    const auto cert = nlf::BoundCertificate::uniform(grid->grid, alpha, beta, C, M, nlf::Exponent(p));
    const auto v = nlf::validate_p_bound_certificate(f->f.pointwise(), cert, nlf::Exponent(p), sampler(samples, seed));
    put_verdict(v, refuted, json);
  });
}

nlf_status nlf_check_separately_convex(const nlf_integrand* f, const char* domain, double value_bound,
                                       size_t samples, uint64_t seed, int* refuted, char** json) {
  return guarded([&] {
    require(f, "null argument");
    nlf::ConvexityOptions opts;
    opts.box = domain_or(domain, f->domain);
    if (value_bound > 0.0) opts.value_bound = value_bound;
    put_verdict(nlf::check_separately_convex(f->f.pointwise(), sampler(samples, seed), opts), refuted, json);
  });
}

nlf_status nlf_check_phi_convex(const nlf_integrand* f, const nlf_grid* grid, size_t psi_count, size_t x_count,
                                size_t triple_count, uint64_t seed, int* refuted, char** json) {
  return guarded([&] {
    require(f && grid, "null argument");
    const std::size_t n = f->f.dim_n();
    const auto suite = nlf::random_psi_suite(grid->grid, n, psi_count, seed + 1);
    const auto xs = nlf::random_points(grid->grid->domain(), x_count, seed + 2);
    const auto triples = nlf::random_w_triples(n, triple_count, seed + 3);
    put_verdict(nlf::check_phi_convex(f->f, suite, xs, triples, 1e-9, seed), refuted, json);
  });
}

nlf_status nlf_wlsc_verdict(const nlf_integrand* f, const char* domain, double p, size_t grid_nodes,
                            size_t samples, uint64_t seed, nlf_wlsc_outcome* outcome, char** json) {
  return guarded([&] {
    require(f, "null argument");
    nlf::WlscOptions opts;
    opts.box = domain_or(domain, f->domain);
    if (grid_nodes) opts.grid_nodes = grid_nodes;
    const auto r = nlf::wlsc_verdict(f->f, nlf::Exponent(p), sampler(samples, seed), opts);
    if (outcome) {
      *outcome = r.outcome == nlf::WlscOutcome::kEvidence  ? NLF_WLSC_EVIDENCE
                 : r.outcome == nlf::WlscOutcome::kRefuted ? NLF_WLSC_REFUTED
                                                           : NLF_WLSC_INCONCLUSIVE;
    }
    put(json, nlf::to_json(r));
  });
}

// ---- witnesses

nlf_status nlf_checkerboard_membership(double delta, const double* x, size_t m, int* inside) {
  return guarded([&] {
    require(x && inside && m > 0, "null argument");
    *inside = nlf::checkerboard_membership(delta, {x, m}) ? 1 : 0;
  });
}

nlf_status nlf_checkerboard_coverage(const double* boxes, size_t box_count, size_t m, double delta,
                                     size_t resolution, double* fraction) {
  return guarded([&] {
    require(boxes && fraction && m > 0, "null argument");
    std::vector<nlf::PairBox> E(box_count);
    for (std::size_t b = 0; b < box_count; ++b) {
      const double* r = boxes + b * 4 * m;
      for (std::size_t a = 0; a < m; ++a) E[b].x.push_back({r[2 * a], r[2 * a + 1]});
      for (std::size_t a = 0; a < m; ++a) E[b].y.push_back({r[2 * (m + a)], r[2 * (m + a) + 1]});
    }
    *fraction = nlf::coverage_fraction(E, delta, resolution);
  });
}

namespace {

nlf_status run_probe(const nlf_integrand* f, const nlf::SequencePlan& plan, size_t k_max, int* violated,
                     char** json, char** csv) {
  const auto r = nlf::lsc_probe(f->f, plan, k_max);
  if (violated) *violated = r.violated ? 1 : 0;
  put(json, nlf::to_json(r));
  put(csv, nlf::lsc_probe_csv(r));
  return NLF_OK;
}

}  // namespace

nlf_status nlf_probe_shift(const nlf_integrand* f, const char* kind, const nlf_gridfn* limit,
                           const nlf_gridfn* direction, size_t k_max, int* violated, char** json, char** csv) {
  return guarded([&] {
    require(f && kind && limit && direction, "null argument");
    const std::string k(kind);
    if (k == "scalar-shrink") {
      run_probe(f, nlf::scalar_shrink_plan(limit->u, direction->u), k_max, violated, json, csv);
    } else if (k == "strong") {
      run_probe(f, nlf::strong_plan(limit->u, direction->u), k_max, violated, json, csv);
    } else {
      throw nlf::Error(nlf::ErrorCode::kUnknownName, "unknown sequence plan '" + k + "'");
    }
  });
}

nlf_status nlf_probe_oscillation(const nlf_integrand* f, double theta, const nlf_gridfn* omega1,
                                 const nlf_gridfn* omega2, size_t k_max, int* violated, char** json, char** csv) {
  return guarded([&] {
    require(f && omega1 && omega2, "null argument");
    run_probe(f, nlf::oscillation_plan(theta, omega1->u, omega2->u), k_max, violated, json, csv);
  });
}

nlf_status nlf_witness_integrability(const nlf_integrand* f, const char* domain, const char* const* phi,
                                     const char* const* psi, size_t base_nodes, size_t max_nodes, int* found,
                                     nlf_gridfn** u, char** json) {
  return guarded([&] {
    require(f && phi && psi, "null argument");
    const std::size_t n = f->f.dim_n(), m = f->f.dim_m();
    std::vector<std::string> a, b;
    for (std::size_t c = 0; c < n; ++c) {
      require(phi[c] && psi[c], "null expression");
      a.emplace_back(phi[c]);
      b.emplace_back(psi[c]);
    }
    nlf::IntegrabilityOptions opts;
    if (base_nodes) opts.base_nodes = base_nodes;
    if (max_nodes) opts.max_nodes = max_nodes;
    const auto w = nlf::integrability_witness(f->f, domain_or(domain, f->domain), nlf::FieldExpr::parse(a, m),
                                              nlf::FieldExpr::parse(b, m), opts);
    if (found) *found = w.found ? 1 : 0;
    if (u) *u = w.u ? new nlf_gridfn{*w.u} : nullptr;
    put(json, nlf::to_json(w));
  });
}

nlf_status nlf_witness_homogeneous(const nlf_integrand* f, const char* domain, double p, double M, size_t blocks,
                                   size_t nodes, uint64_t seed, int* found, nlf_gridfn** u, char** json) {
  return guarded([&] {
    require(f, "null argument");
    nlf::HomogeneousOptions opts;
    if (blocks) opts.blocks = blocks;
    if (nodes) opts.nodes = nodes;
    opts.seed = seed;
    const auto w = nlf::homogeneous_witness(f->f, domain_or(domain, f->domain), nlf::Exponent(p), M, opts);
    if (found) *found = w.found ? 1 : 0;
    if (u) *u = w.u ? new nlf_gridfn{*w.u} : nullptr;
    put(json, nlf::to_json(w));
  });
}

// ---- decomposition and null class

nlf_status nlf_decompose(const nlf_integrand* f, const nlf_grid* grid, double w_lo, double w_hi, size_t w_count,
                         char** json, char** g_csv, char** h_csv) {
  return guarded([&] {
    require(f && grid, "null argument");
    const auto d = nlf::decompose(f->f, grid->grid, linspace(w_lo, w_hi, w_count));
    put(json, nlf::to_json(d));
    put(g_csv, nlf::decomposition_table_csv(d, d.g));
    put(h_csv, nlf::h_table_csv(d));
  });
}

nlf_status nlf_nullclass(const char* g, const char* h, const nlf_grid* grid, double w_lo, double w_hi,
                         size_t w_count, size_t trials, uint64_t seed, int* refuted, char** json) {
  return guarded([&] {
    require(g && h && grid, "null argument");
    const auto t = nlf::tabulate_null_class(g, h, grid->grid, linspace(w_lo, w_hi, w_count));
    put_verdict(nlf::check_null_class(t, trials ? trials : 20, seed), refuted, json);
  });
}

// ---- minimization

void nlf_minimize_config_default(nlf_minimize_config* cfg) {
  if (!cfg) return;
  const nlf::MinimizeConfig d;
  *cfg = {d.max_iters, d.step0, d.armijo_c, d.shrink, d.grad_tol, d.max_shrinks, 0, 0.0, 0.0};
}

nlf_status nlf_minimize(const nlf_integrand* f, const nlf_gridfn* u0, const nlf_minimize_config* cfg,
                        nlf_gridfn** u_star, int* converged, char** json, char** trace_csv) {
  return guarded([&] {
    require(f && u0, "null argument");
    nlf::MinimizeConfig c;
    if (cfg) {
      c.max_iters = cfg->max_iters;
      c.step0 = cfg->step0;
      c.armijo_c = cfg->armijo_c;
      c.shrink = cfg->shrink;
      c.grad_tol = cfg->grad_tol;
      c.max_shrinks = cfg->max_shrinks;
      if (cfg->use_box) c.box = std::make_pair(cfg->box_lo, cfg->box_hi);
    }
    const auto r = nlf::minimize(f->f, u0->u, c);
    if (u_star) *u_star = new nlf_gridfn{r.u_star};
    if (converged) *converged = r.converged ? 1 : 0;
    put(json, nlf::to_json(r));
    put(trace_csv, nlf::trace_csv(r));
  });
}

// ---- reproductions

nlf_status nlf_repro_list(char** json) {
  return guarded([&] {
    require(json, "null argument");
    *json = dup(nlf::detail::ordered_json(nlf::repro_ids()).dump());
  });
}

nlf_status nlf_repro(const char* id, int* matches, int* adverse, char** json) {
  return guarded([&] {
    require(id, "null argument");
    const auto r = nlf::run_repro(id);
    if (matches) *matches = r.matches ? 1 : 0;
    if (adverse) *adverse = r.adverse ? 1 : 0;
    put(json, r.json);
  });
}

}  // extern "C"
