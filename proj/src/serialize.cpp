#include <cmath>
#include <cstdio>

#include "internal/json_build.hpp"

namespace nlf {
namespace detail {

ordered_json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

ordered_json numbers(std::span<const double> v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

ordered_json json_of(const FunctionalValue& v) {
  ordered_json j;
  j["value"] = number(v.value.value());
  j["neg_part"] = number(v.neg_part);
  j["pos_part"] = number(v.pos_part.value());
  j["nodes"] = v.nodes;
  j["integrand"] = v.integrand;
  return j;
}

ordered_json json_of(const PropertyVerdict& v) {
  ordered_json j;
  j["property"] = v.property;
  j["status"] = to_string(v.status);
  j["samples"] = v.samples;
  j["tolerance"] = number(v.tolerance);
  j["seed"] = v.seed;
  if (v.witness) {
    ordered_json w;
    ordered_json fields = ordered_json::object();
    for (const auto& [k, vals] : v.witness->fields) fields[k] = numbers(vals);
    w["fields"] = fields;
    w["lhs"] = number(v.witness->lhs);
    w["relation"] = v.witness->relation;
    w["rhs"] = number(v.witness->rhs);
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  ordered_json stats = ordered_json::object();
  for (const auto& [k, x] : v.stats) stats[k] = number(x);
  j["stats"] = stats;
  j["notes"] = v.notes;
  return j;
}

ordered_json json_of(const WlscReport& r) {
  ordered_json j;
  j["outcome"] = to_string(r.outcome);
  j["criterion"] = r.criterion;
  j["separate_convexity"] = json_of(r.separate);
  j["phi_convexity"] = json_of(r.phi);
  j["symmetry"] = r.symmetry ? json_of(*r.symmetry) : ordered_json(nullptr);
  j["notes"] = r.notes;
  return j;
}

ordered_json json_of(const LscProbeReport& r) {
  ordered_json j;
  j["integrand"] = r.integrand;
  j["plan"] = r.plan_kind;
  j["mode"] = to_string(r.mode);
  j["J_values"] = numbers(r.J_values);
  j["J_limit"] = number(r.J_limit);
  j["liminf_estimate"] = number(r.liminf_estimate);
  j["tail_window"] = r.tail_window;
  j["tolerance"] = number(r.tolerance);
  j["quadrature_error"] = number(r.quadrature_error);
  j["verdict"] = r.violated ? "violated" : "holds";
  j["margin"] = number(r.margin);
  j["gap_decay"] = number(r.gap_decay);
  j["pairing_defects"] = numbers(r.pairing_defects);
  return j;
}

ordered_json json_of(const MinimizeResult& r) {
  ordered_json j;
  j["J_star"] = number(r.J_star);
  j["iters"] = r.iters;
  j["grad_norm"] = number(r.grad_norm);
  j["converged"] = r.converged;
  j["status"] = to_string(r.status);
  j["nodes"] = r.u_star.size();
  return j;
}

ordered_json json_of(const IntegrabilityWitness& w) {
  ordered_json j;
  j["found"] = w.found;
  j["branch"] = w.branch;
  j["levels"] = w.levels;
  j["refinement_values"] = numbers(w.refinement_values);
  j["J_u"] = number(w.J_u);
  j["lower_bound"] = number(w.lower_bound);
  j["layered_bound"] = number(w.layered_bound);
  if (!w.split.empty()) j["split"] = numbers(w.split);
  ordered_json nest = ordered_json::array();
  for (const auto& l : w.nest) {
    nest.push_back({{"measure", number(l.measure)},
                    {"self_integral", number(l.self_integral)},
                    {"N_l", l.N_l},
                    {"delta", number(l.delta)},
                    {"min_coverage", number(l.min_coverage)}});
  }
  j["nest"] = nest;
  j["notes"] = w.notes;
  return j;
}

ordered_json json_of(const HomogeneousWitness& w) {
  ordered_json j;
  j["found"] = w.found;
  j["blocks"] = w.w_k.size();
  ordered_json pairs = ordered_json::array();
  for (std::size_t k = 0; k < w.w_k.size(); ++k) {
    pairs.push_back({{"w", numbers(w.w_k[k])},
                     {"z", numbers(w.z_k[k])},
                     {"ratio", number(w.ratios[k])},
                     {"measure_E", number(w.measure_E[k])},
                     {"measure_F", number(w.measure_F[k])},
                     {"lower_bound", number(w.block_lower_bounds[k])}});
  }
  j["pairs"] = pairs;
  j["truncated_J"] = numbers(w.truncated_J);
  j["norm"] = number(w.norm);
  j["norm_bound"] = number(w.norm_bound);
  j["notes"] = w.notes;
  return j;
}

ordered_json json_of(const Decomposition& d, bool with_tables) {
  ordered_json j;
  j["nodes"] = d.N();
  j["w_grid"] = numbers(d.w_grid);
  j["M_ladder"] = numbers(d.M_ladder);
  j["unstable_entries"] = d.unstable_entries;
  j["g_mean_defect"] = number(d.g_mean_defect);
  j["residual"] = number(d.residual);
  j["f_tilde_separately_convex"] = json_of(d.f_tilde_convexity);
  j["notes"] = d.notes;
  if (with_tables) {
    j["gamma"] = numbers(d.gamma);
    j["gamma_mean"] = numbers(d.gamma_mean);
    j["g"] = numbers(d.g);
    j["h"] = numbers(d.h);
  }
  return j;
}

}  // namespace detail

std::string to_json(const FunctionalValue& v) { return detail::json_of(v).dump(); }
std::string to_json(const PropertyVerdict& v) { return detail::json_of(v).dump(); }
std::string to_json(const WlscReport& r) { return detail::json_of(r).dump(); }
std::string to_json(const LscProbeReport& r) { return detail::json_of(r).dump(); }
std::string to_json(const MinimizeResult& r) { return detail::json_of(r).dump(); }
std::string to_json(const IntegrabilityWitness& w) { return detail::json_of(w).dump(); }
std::string to_json(const HomogeneousWitness& w) { return detail::json_of(w).dump(); }
std::string to_json(const Decomposition& d, bool with_tables) { return detail::json_of(d, with_tables).dump(); }

namespace {

void append_coords(std::string& out, std::span<const double> x) {
  char buf[40];
  for (double v : x) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    out += buf;
  }
}

std::string axis_header(const char* name, std::size_t m) {
  std::string h;
  for (std::size_t a = 0; a < m; ++a) h += std::string(name) + std::to_string(a + 1) + ",";
  return h;
}

}  // namespace

std::string decomposition_table_csv(const Decomposition& d, const std::vector<double>& table) {
  const std::size_t N = d.N(), W = d.W(), m = d.grid->dim();
  std::string out = axis_header("x", m) + axis_header("y", m) + "w,value\n";
  char buf[64];
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < W; ++k) {
        append_coords(out, d.grid->node(i));
        append_coords(out, d.grid->node(j));
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", d.w_grid[k], table[(i * N + j) * W + k]);
        out += buf;
      }
    }
  }
  return out;
}

std::string h_table_csv(const Decomposition& d) {
  const std::size_t N = d.N(), m = d.grid->dim();
  std::string out = axis_header("x", m) + axis_header("y", m) + "h\n";
  char buf[40];
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      append_coords(out, d.grid->node(i));
      append_coords(out, d.grid->node(j));
      std::snprintf(buf, sizeof buf, "%.17g\n", d.h[i * N + j]);
      out += buf;
    }
  }
  return out;
}

}  // namespace nlf
