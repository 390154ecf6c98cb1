#include "nlf/witness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "nlf/error.hpp"
#include "nlf/parallel.hpp"
#include "nlf/sampler.hpp"
#include "nlf/summation.hpp"

namespace nlf {

// ------------------------------------------------------------ checkerboards

namespace {

// 0 = even cube, 1 = odd cube, -1 = on a face
int cube_parity(double t) {
  const double fl = std::floor(t);
  const double frac = t - fl;
  if (std::abs(frac - 0.5) <= 1e-12 * std::max(1.0, std::abs(t))) return -1;
  const double xi = frac < 0.5 ? fl : fl + 1.0;
  return std::fmod(std::abs(xi), 2.0) == 1.0 ? 1 : 0;
}

// Membership with face points (measure zero) sent to the complement.
bool in_checkerboard(double delta, std::span<const double> x) {
  int parity = 0;
  for (double xj : x) {
    const int p = cube_parity(xj / delta);
    if (p < 0) return false;
    parity ^= p;
  }
  return parity == 0;
}

}  // namespace

bool checkerboard_membership(double delta, std::span<const double> x) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "checkerboard delta must be positive");
  int parity = 0;
  for (double xj : x) {
    const int p = cube_parity(xj / delta);
    if (p < 0) throw Error(ErrorCode::kBoundary, "point lies on a checkerboard cube face");
    parity ^= p;
  }
  return parity == 0;
}

double even_parity_fraction(const Interval& iv, double delta, std::size_t resolution) {
  if (resolution == 0) throw Error(ErrorCode::kInvalidArgument, "resolution must be >= 1");
  const double h = iv.length() / static_cast<double>(resolution);
  double even = 0.0;
  for (std::size_t c = 0; c < resolution; ++c) {
    const double x = iv.lo + (static_cast<double>(c) + 0.5) * h;
    const int p = cube_parity(x / delta);
    even += p < 0 ? 0.5 : (p == 0 ? 1.0 : 0.0);
  }
  return even / static_cast<double>(resolution);
}

double coverage_fraction(const std::vector<PairBox>& E, double delta, std::size_t resolution) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "checkerboard delta must be positive");
  // P(Σξ even) over a product of axes = (1 + Π(2e_j − 1)) / 2
  auto in_s = [&](const std::vector<Interval>& box) {
    double prod = 1.0;
    for (const auto& iv : box) prod *= 2.0 * even_parity_fraction(iv, delta, resolution) - 1.0;
    return 0.5 * (1.0 + prod);
  };
  CompensatedSum covered, total;
  for (const auto& b : E) {
    if (b.x.size() != b.y.size() || b.x.empty()) {
      throw Error(ErrorCode::kMismatch, "E boxes need matching x and y dimensions");
    }
    double vol = 1.0;
    for (const auto& iv : b.x) vol *= std::max(0.0, iv.length());
    for (const auto& iv : b.y) vol *= std::max(0.0, iv.length());
    if (vol <= 0.0) continue;
    total.add(vol);
    covered.add(vol * in_s(b.x) * (1.0 - in_s(b.y)));
  }
  if (total.value() <= 0.0) throw Error(ErrorCode::kUndefinedFraction, "coverage fraction of an empty set");
  return covered.value() / total.value();
}

// ------------------------------------------------------------- oscillation

std::vector<bool> stripe_indicator(const Grid& grid, double theta, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "stripe count k must be >= 1");
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  const double n1 = static_cast<double>(grid.nodes_per_axis()[0]);
  std::vector<bool> chi(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = (static_cast<double>(grid.cell(i)[0]) + 0.5) * static_cast<double>(k) / n1;
    chi[i] = (t - std::floor(t)) < theta;
  }
  return chi;
}

GridFunction oscillation_sequence(double theta, const GridFunction& omega1, const GridFunction& omega2,
                                  std::size_t k) {
  if (omega1.grid_ptr() != omega2.grid_ptr() || omega1.n() != omega2.n()) {
    throw Error(ErrorCode::kMismatch, "oscillation needs omega1 and omega2 on the same grid");
  }
  const auto chi = stripe_indicator(omega1.grid(), theta, k);
  const std::size_t n = omega1.n();
  std::vector<double> vals(omega1.size() * n);
  for (std::size_t i = 0; i < omega1.size(); ++i) {
    const auto src = chi[i] ? omega1.at(i) : omega2.at(i);
    std::copy(src.begin(), src.end(), vals.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return omega1.with_values(std::move(vals));
}

// ------------------------------------------------------ sequences, probes

const char* to_string(ConvergenceMode m) {
  switch (m) {
    case ConvergenceMode::kWeak: return "weak";
    case ConvergenceMode::kWeakStar: return "weak-star";
    case ConvergenceMode::kStrong: return "strong";
  }
  return "strong";
}

namespace {

GridFunction affine(const GridFunction& a, const GridFunction& b, double cb) {
  if (a.grid_ptr() != b.grid_ptr() || a.n() != b.n()) throw Error(ErrorCode::kMismatch, "grid functions differ");
  std::vector<double> v(a.values().begin(), a.values().end());
  for (std::size_t q = 0; q < v.size(); ++q) v[q] += cb * b.values()[q];
  return a.with_values(std::move(v));
}

}  // namespace

SequencePlan scalar_shrink_plan(const GridFunction& limit, const GridFunction& direction) {
  affine(limit, direction, 0.0);  // validates
  SequencePlan plan{"scalar-shrink",
                    [limit, direction](std::size_t k) {
                      return affine(limit, direction, 1.0 / static_cast<double>(k));
                    },
                    limit, ConvergenceMode::kStrong};
  return plan;
}

SequencePlan oscillation_plan(double theta, const GridFunction& omega1, const GridFunction& omega2) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in [0, 1]");
  const GridFunction limit = affine(omega1.scaled(theta), omega2, 1.0 - theta);
  return SequencePlan{"oscillation",
                      [theta, omega1, omega2](std::size_t k) {
                        return oscillation_sequence(theta, omega1, omega2, k);
                      },
                      limit, ConvergenceMode::kWeakStar};
}

SequencePlan strong_plan(const GridFunction& limit, const GridFunction& direction) {
  affine(limit, direction, 0.0);
  return SequencePlan{"strong",
                      [limit, direction](std::size_t k) {
                        const double kk = static_cast<double>(k);
                        return affine(limit, direction, 1.0 / (kk * kk));
                      },
                      limit, ConvergenceMode::kStrong};
}

std::vector<std::string> pairing_dictionary_names(const Grid& grid) {
  std::vector<std::string> names{"1"};
  for (std::size_t j = 0; j < grid.dim(); ++j) {
    const std::string x = "x" + std::to_string(j + 1);
    names.push_back(x);
    names.push_back(x + "^2");
    names.push_back("step(" + x + "-mid)");
  }
  return names;
}

std::vector<double> pairings(const GridFunction& u) {
  const Grid& g = u.grid();
  const std::size_t m = g.dim();
  const std::size_t D = 1 + 3 * m;
  std::vector<CompensatedSum> acc(D * u.n());
  std::vector<double> h(D);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto x = g.node(i);
    h[0] = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& iv = g.domain().axis(j);
      h[1 + 3 * j] = x[j];
      h[2 + 3 * j] = x[j] * x[j];
      h[3 + 3 * j] = x[j] >= 0.5 * (iv.lo + iv.hi) ? 1.0 : 0.0;
    }
    const auto v = u.at(i);
    for (std::size_t c = 0; c < u.n(); ++c) {
      for (std::size_t d = 0; d < D; ++d) acc[c * D + d].add(g.weight() * v[c] * h[d]);
    }
  }
  std::vector<double> out(acc.size());
  for (std::size_t q = 0; q < acc.size(); ++q) out[q] = acc[q].value();
  return out;
}

namespace {

// A tail gap J_limit − J_k decaying at least like k^{-1/2} is read as closing
// (finite k_max sees a strongly convergent sequence still short of its limit).
constexpr double kClosingGapExponent = 0.5;

// Least-squares slope of −log(gap) against log k over the tail window; 0 when
// some tail gap is not positive.
double tail_gap_decay(const LscProbeReport& r) {
  const std::size_t K = r.J_values.size();
  if (r.tail_window < 2) return 0.0;
  std::vector<double> lx, ly;
  for (std::size_t k = K - r.tail_window; k < K; ++k) {
    const double gap = r.J_limit - r.J_values[k];
    if (!(gap > r.tolerance)) return 0.0;
    lx.push_back(std::log(static_cast<double>(k + 1)));
    ly.push_back(-std::log(gap));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t q = 0; q < lx.size(); ++q) {
    mx += lx[q] / n;
    my += ly[q] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t q = 0; q < lx.size(); ++q) {
    sxy += (lx[q] - mx) * (ly[q] - my);
    sxx += (lx[q] - mx) * (lx[q] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

LscProbeReport lsc_probe(const Integrand& f, const SequencePlan& plan, std::size_t k_max) {
  if (k_max == 0) throw Error(ErrorCode::kInvalidArgument, "k_max must be >= 1");
  LscProbeReport r;
  r.plan_kind = plan.kind;
  r.mode = plan.mode;
  r.integrand = f.label();
  const FunctionalValue lim = evaluate(f, plan.declared_limit);
  r.J_limit = lim.value.value();
  r.quadrature_error = 1e-9 * (lim.pos_part.value() + lim.neg_part);
  const auto lim_pair = pairings(plan.declared_limit);
  for (std::size_t k = 1; k <= k_max; ++k) {
    const GridFunction uk = plan.generator(k);
    if (uk.grid_ptr() != plan.declared_limit.grid_ptr()) {
      throw Error(ErrorCode::kMismatch, "sequence element and declared limit live on different grids");
    }
    r.J_values.push_back(evaluate(f, uk).value.value());
    const auto pk = pairings(uk);
    double defect = 0.0;
    for (std::size_t d = 0; d < pk.size(); ++d) defect = std::max(defect, std::abs(pk[d] - lim_pair[d]));
    r.pairing_defects.push_back(defect);
  }
  r.tail_window = std::min(k_max, std::max<std::size_t>(3, k_max / 4));
  r.liminf_estimate = *std::min_element(r.J_values.end() - static_cast<std::ptrdiff_t>(r.tail_window),
                                        r.J_values.end());
  r.tolerance = 1e-6 * (1.0 + std::abs(r.J_limit)) + r.quadrature_error;
  r.margin = r.J_limit - r.liminf_estimate;
  r.gap_decay = tail_gap_decay(r);
  r.violated = r.liminf_estimate < r.J_limit - r.tolerance && r.gap_decay < kClosingGapExponent;
  return r;
}

std::string lsc_probe_csv(const LscProbeReport& r) {
  std::string out = "k,J\n";
  char buf[64];
  for (std::size_t k = 0; k < r.J_values.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k + 1, r.J_values[k]);
    out += buf;
  }
  return out;
}

// -------------------------------------------------- integrability witness

FieldExpr FieldExpr::parse(const std::vector<std::string>& texts, std::size_t dim_m) {
  if (texts.empty()) throw Error(ErrorCode::kInvalidArgument, "field needs at least one component");
  FieldExpr fe;
  fe.dim_m = dim_m;
  for (const auto& t : texts) {
    Expr e = parse_expr(t, dim_m, 1);
    if (e.depends_on(VarKind::kY) || e.depends_on(VarKind::kW) || e.depends_on(VarKind::kZ)) {
      throw Error(ErrorCode::kInvalidArgument, "field components may only use x variables: " + t);
    }
    fe.components.push_back(std::move(e));
  }
  return fe;
}

FieldExpr FieldExpr::constant(std::vector<double> value, std::size_t dim_m) {
  FieldExpr fe;
  fe.dim_m = dim_m;
  for (double v : value) fe.components.push_back(Expr::constant(v));
  return fe;
}

GridFunction FieldExpr::sample(const GridPtr& grid, Exponent p) const {
  if (grid->dim() != dim_m) throw Error(ErrorCode::kMismatch, "field dimension differs from the grid");
  const std::size_t n = components.size();
  std::vector<double> vals(grid->size() * n);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const EvalArgs a{grid->node(i), grid->node(i), {}, {}};
    for (std::size_t c = 0; c < n; ++c) vals[i * n + c] = components[c].eval(a);
  }
  return GridFunction(grid, n, std::move(vals), p);
}

namespace {

struct PairTable {
  std::size_t N = 0;
  double w2 = 0.0;
  std::vector<double> g;  // i·N + j
  double at(std::size_t i, std::size_t j) const { return g[i * N + j]; }
};

PairTable tabulate_pairs(const Integrand& f, const GridFunction& phi, const GridFunction& psi) {
  PairTable t;
  t.N = phi.size();
  t.w2 = phi.grid().weight() * phi.grid().weight();
  t.g.resize(t.N * t.N);
  parallel_for(t.N, [&](std::size_t i) {
    for (std::size_t j = 0; j < t.N; ++j) {
      double v;
      try {
        v = f({phi.grid().node(i), phi.grid().node(j), phi.at(i), psi.at(j)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kPole) throw;
        throw PoleError({{i, j}}, 1, e.what());
      }
      if (!std::isfinite(v)) throw Error(ErrorCode::kEvalDomain, "integrand overflow while tabulating g");
      t.g[i * t.N + j] = v;
    }
  });
  return t;
}

bool diverges(const std::vector<double>& q, double threshold) {
  if (!q.empty() && q.back() > threshold) return true;
  for (std::size_t l = 2; l < q.size(); ++l) {
    if (q[l - 2] > 0.0 && q[l - 1] >= 2.0 * q[l - 2] && q[l] >= 2.0 * q[l - 1]) return true;
  }
  return false;
}

struct SplitCandidate {
  std::size_t axis;
  double position;
  bool below;  // A = {x_axis < position} if true, else {x_axis >= position}
  std::vector<double> values;
  bool contains(std::span<const double> x) const { return below ? x[axis] < position : x[axis] >= position; }
};

GridFunction glue(const std::vector<bool>& inS, const GridFunction& phi, const GridFunction& psi) {
  const std::size_t n = phi.n();
  std::vector<double> vals(phi.size() * n);
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const auto src = inS[i] ? phi.at(i) : psi.at(i);
    std::copy(src.begin(), src.end(), vals.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  return phi.with_values(std::move(vals));
}

double cross_integral(const PairTable& t, const std::vector<bool>& inS) {
  CompensatedSum s;
  for (std::size_t i = 0; i < t.N; ++i) {
    if (!inS[i]) continue;
    for (std::size_t j = 0; j < t.N; ++j) {
      if (!inS[j]) s.add(t.w2 * t.at(i, j));
    }
  }
  return s.value();
}

}  // namespace

IntegrabilityWitness integrability_witness(const Integrand& f, const Domain& domain, const FieldExpr& phi,
                                           const FieldExpr& psi, const IntegrabilityOptions& opts) {
  if (phi.components.size() != f.dim_n() || psi.components.size() != f.dim_n()) {
    throw Error(ErrorCode::kMismatch, "phi and psi need n components");
  }
  if (domain.dim() != f.dim_m()) throw Error(ErrorCode::kMismatch, "domain dimension differs from m");
  if (opts.base_nodes == 0 || opts.max_nodes < opts.base_nodes) {
    throw Error(ErrorCode::kInvalidArgument, "invalid refinement range");
  }
  const std::size_t m = f.dim_m();
  IntegrabilityWitness out;

  // per-axis node counts so that the total stays within max_nodes
  auto per_axis = [&](std::size_t total) {
    return std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(total), 1.0 / static_cast<double>(m)))));
  };
  std::vector<SplitCandidate> cands;
  for (std::size_t a = 0; a < m; ++a) {
    const auto& iv = domain.axis(a);
    for (int q = 1; q < 8; ++q) {
      const double pos = iv.lo + iv.length() * q / 8.0;
      cands.push_back({a, pos, true, {}});
      cands.push_back({a, pos, false, {}});
    }
  }

  GridPtr grid;
  PairTable table;
  GridFunction phi_u = FieldExpr::constant(std::vector<double>(f.dim_n(), 0.0), m).sample(build_grid(domain, {2}));
  GridFunction psi_u = phi_u;
  bool divergent = false;
  for (std::size_t total = opts.base_nodes; total <= opts.max_nodes; total *= 2) {
    grid = build_grid(domain, {per_axis(total)});
    phi_u = phi.sample(grid);
    psi_u = psi.sample(grid);
    table = tabulate_pairs(f, phi_u, psi_u);
    out.levels.push_back(grid->size());
    std::vector<bool> inA(grid->size());
    CompensatedSum q;
    for (double v : table.g) q.add(table.w2 * v);
    out.refinement_values.push_back(q.value());
    for (auto& c : cands) {
      for (std::size_t i = 0; i < grid->size(); ++i) inA[i] = c.contains(grid->node(i));
      c.values.push_back(cross_integral(table, inA));
    }
    if (diverges(out.refinement_values, opts.divergence_threshold)) {
      divergent = true;
      break;
    }
  }
  for (double v : table.g) {
    if (v < 0.0) {
      out.notes.push_back("g takes negative values; the lower bounds assume a nonnegative integrand");
      break;
    }
  }
  if (!divergent) {
    out.branch = "none";
    out.notes.push_back("no divergence detected under refinement");
    return out;
  }
  const std::size_t N = grid->size();

  // first branch: a single split A with divergent cross integral
  const SplitCandidate* best = nullptr;
  for (const auto& c : cands) {
    if (diverges(c.values, opts.divergence_threshold) && (!best || c.values.back() > best->values.back())) best = &c;
  }
  if (best) {
    std::vector<bool> inA(N);
    for (std::size_t i = 0; i < N; ++i) inA[i] = best->contains(grid->node(i));
    out.found = true;
    out.branch = "a-split";
    out.split = {static_cast<double>(best->axis), best->position, best->below ? 1.0 : 0.0};
    out.u = glue(inA, phi_u, psi_u);
    out.lower_bound = cross_integral(table, inA);
    out.layered_bound = out.lower_bound;
    out.J_u = evaluate(f, *out.u).value.value();
    return out;
  }

  // second branch: nested halving along axis 1 and checkerboard layers
  const std::size_t n1 = grid->nodes_per_axis()[0];
  std::size_t depth_cap = opts.max_depth;
  {
    std::size_t cells = n1, d = 0;
    while (cells >= 16 && d < depth_cap) {
      cells /= 2;
      ++d;
    }
    if (d < depth_cap) {
      out.notes.push_back("nesting depth limited to " + std::to_string(d) + " by the grid resolution");
      depth_cap = d;
    }
  }
  auto self_integral = [&](const std::vector<std::size_t>& nodes) {
    CompensatedSum s;
    for (std::size_t i : nodes) {
      for (std::size_t j : nodes) s.add(table.w2 * table.at(i, j));
    }
    return s.value();
  };
  // A_k as a range [lo, hi) of axis-1 cell indices
  std::vector<std::pair<std::size_t, std::size_t>> ranges{{0, n1}};
  auto nodes_in = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t c = grid->cell(i)[0];
      if (c >= lo && c < hi) v.push_back(i);
    }
    return v;
  };
  for (std::size_t k = 0; k < depth_cap; ++k) {
    const auto [lo, hi] = ranges.back();
    const std::size_t mid = lo + (hi - lo) / 2;
    const double left = self_integral(nodes_in(lo, mid));
    const double right = self_integral(nodes_in(mid, hi));
    ranges.emplace_back(left >= right ? std::make_pair(lo, mid) : std::make_pair(mid, hi));
  }

  std::vector<bool> inS(N, false);
  const double len1 = domain.axis(0).length();
  const double h1 = grid->cell_width(0);
  for (std::size_t l = 0; l + 1 < ranges.size(); ++l) {
    const auto [lo, hi] = ranges[l];
    const auto [nlo, nhi] = ranges[l + 1];
    std::vector<std::size_t> tilde;
    for (std::size_t i : nodes_in(lo, hi)) {
      const std::size_t c = grid->cell(i)[0];
      if (c < nlo || c >= nhi) tilde.push_back(i);
    }
    NestLevel lev;
    lev.measure = static_cast<double>(tilde.size()) * grid->weight();
    lev.self_integral = self_integral(tilde);
    const double ell = static_cast<double>(l + 1);
    if (lev.self_integral < 1.0 / ell || tilde.empty()) {
      out.nest.push_back(lev);
      continue;
    }
    // dyadic layers E_0 = {g < 1}, E_j = {2^{j−1} <= g < 2^j}; floor(j) is the
    // value g is known to exceed on E_j
    auto layer_of = [](double v) -> std::size_t {
      if (!(v >= 1.0)) return 0;
      return static_cast<std::size_t>(std::floor(std::log2(v))) + 1;
    };
    auto floor_of = [](std::size_t j) { return j == 0 ? 0.0 : std::ldexp(1.0, static_cast<int>(j) - 1); };
    std::vector<double> layer_pairs;
    for (std::size_t a : tilde) {
      for (std::size_t b : tilde) {
        const std::size_t j = layer_of(table.at(a, b));
        if (j >= layer_pairs.size()) layer_pairs.resize(j + 1, 0.0);
        layer_pairs[j] += 1.0;
      }
    }
    double acc = 0.0;
    std::size_t Nl = layer_pairs.size();
    for (std::size_t j = 0; j < layer_pairs.size(); ++j) {
      acc += floor_of(j) * layer_pairs[j] * table.w2;
      if (acc >= 1.0 / (2.0 * ell)) {
        Nl = j + 1;
        break;
      }
    }
    lev.N_l = Nl;
    // largest δ = |X₁|·2^{-s} whose S_δ × S_δ^c holds an eighth of each
    // resolvable layer (at least kMinPairs node pairs)
    constexpr double kMinPairs = 16.0;
    std::size_t thin = 0;
    for (std::size_t j = 0; j < Nl; ++j) thin += layer_pairs[j] > 0.0 && layer_pairs[j] < kMinPairs;
    if (thin > 0) {
      out.notes.push_back("level " + std::to_string(l + 1) + ": " + std::to_string(thin) +
                          " layer(s) below the resolution floor left out of the coverage minimum");
    }
    double best_delta = 0.0, best_cov = -1.0;
    for (double delta = 0.5 * len1; delta >= 2.0 * h1; delta *= 0.5) {
      std::vector<double> hit(Nl, 0.0);
      std::vector<bool> member(tilde.size());
      for (std::size_t q = 0; q < tilde.size(); ++q) member[q] = in_checkerboard(delta, grid->node(tilde[q]));
      for (std::size_t qa = 0; qa < tilde.size(); ++qa) {
        if (!member[qa]) continue;
        for (std::size_t qb = 0; qb < tilde.size(); ++qb) {
          if (member[qb]) continue;
          const std::size_t j = layer_of(table.at(tilde[qa], tilde[qb]));
          if (j < Nl) hit[j] += 1.0;
        }
      }
      double cov = 1.0;
      for (std::size_t j = 0; j < Nl; ++j) {
        if (layer_pairs[j] >= kMinPairs) cov = std::min(cov, hit[j] / layer_pairs[j]);
      }
      if (cov > best_cov) {
        best_cov = cov;
        best_delta = delta;
      }
      if (cov >= 0.125) break;
    }
    lev.delta = best_delta;
    lev.min_coverage = best_cov;
    if (best_cov < 0.125) {
      out.notes.push_back("level " + std::to_string(l + 1) + ": no tested delta covers an eighth of every layer");
    }
    if (best_delta > 0.0) {
      for (std::size_t i : tilde) inS[i] = in_checkerboard(best_delta, grid->node(i));
      for (std::size_t a : tilde) {
        if (!inS[a]) continue;
        for (std::size_t b : tilde) {
          if (inS[b]) continue;
          const std::size_t j = layer_of(table.at(a, b));
          if (j < Nl) out.layered_bound += floor_of(j) * table.w2;
        }
      }
    }
    out.nest.push_back(lev);
  }
  if (std::none_of(inS.begin(), inS.end(), [](bool b) { return b; })) {
    out.branch = "none";
    out.notes.push_back("divergence detected but no nesting level qualified");
    return out;
  }
  out.found = true;
  out.branch = "checkerboard";
  out.u = glue(inS, phi_u, psi_u);
  out.lower_bound = cross_integral(table, inS);
  out.J_u = evaluate(f, *out.u).value.value();
  return out;
}

// ---------------------------------------------------- homogeneous witness

HomogeneousWitness homogeneous_witness(const Integrand& f, const Domain& domain, Exponent p, double M,
                                       const HomogeneousOptions& opts) {
  if (!f.homogeneous()) {
    throw Error(ErrorCode::kNonHomogeneous, "blowup construction needs an integrand without x, y dependence");
  }
  if (!(M > 0.0)) throw Error(ErrorCode::kInvalidArgument, "M must be positive");
  if (domain.dim() != f.dim_m()) throw Error(ErrorCode::kMismatch, "domain dimension differs from m");
  const std::size_t n = f.dim_n();
  const std::vector<double> origin(f.dim_m(), 0.0);
  HomogeneousWitness out;

  // candidate (w, z) along rays through the origin
  std::vector<std::vector<double>> dirs;
  for (int sw : {1, -1}) {
    for (int sz : {1, -1}) {
      std::vector<double> d(2 * n);
      for (std::size_t c = 0; c < n; ++c) {
        d[c] = sw;
        d[n + c] = sz;
      }
      dirs.push_back(d);
    }
  }
  Rng rng(opts.seed);
  const std::size_t n_radii = 240;
  const std::size_t extra = opts.search_budget / n_radii;
  for (std::size_t q = 0; q < extra; ++q) {
    std::vector<double> d(2 * n);
    for (double& v : d) v = rng.uniform(-1.0, 1.0);
    dirs.push_back(d);
  }
  struct Cand {
    std::vector<double> w, z;
    double f, ratio, weight;  // weight = (1 + p_M(w))(1 + p_M(z))
  };
  std::vector<Cand> cands;
  for (const auto& d : dirs) {
    for (std::size_t s = 0; s < n_radii; ++s) {
      const double t = std::exp2(-2.0 + static_cast<double>(s) / 16.0);
      Cand c;
      c.w.assign(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n));
      c.z.assign(d.begin() + static_cast<std::ptrdiff_t>(n), d.end());
      for (double& v : c.w) v *= t;
      for (double& v : c.z) v *= t;
      const ExtReal den = (ExtReal(1.0) + p_function(c.w, p, M)) * (ExtReal(1.0) + p_function(c.z, p, M));
      if (den.is_infinite()) continue;
      double fv;
      try {
        fv = f({origin, origin, c.w, c.z});
      } catch (const Error&) {
        continue;
      }
      if (!std::isfinite(fv)) continue;
      c.f = fv;
      c.weight = den.value();
      c.ratio = fv / c.weight;
      cands.push_back(std::move(c));
    }
  }

  const GridPtr grid = build_grid(
      domain, {std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::pow(
                                            static_cast<double>(opts.nodes), 1.0 / static_cast<double>(domain.dim())))))});
  const double L = grid->mass();
  const double wt = grid->weight();
  const std::size_t N = grid->size();
  std::vector<double> vals(N * n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [start, end) of E_k then F_k
  std::size_t cursor = 0;
  for (std::size_t k = 1; k <= opts.blocks; ++k) {
    const double target = std::ldexp(1.0, static_cast<int>(2 * k + 2));
    const Cand* pick = nullptr;
    for (const auto& c : cands) {
      if (c.ratio >= target && (!pick || c.weight < pick->weight)) pick = &c;
    }
    if (!pick) {
      out.notes.push_back("no sampled pair reaches growth ratio 2^" + std::to_string(2 * k + 2) + "; stopped at " +
                          std::to_string(k - 1) + " blocks");
      break;
    }
    const double scale = L / std::ldexp(1.0, static_cast<int>(k + 1));
    const double mE = scale / (1.0 + p_function(pick->w, p, M).value());
    const double mF = scale / (1.0 + p_function(pick->z, p, M).value());
    const auto cE = static_cast<std::size_t>(std::floor(mE / wt));
    const auto cF = static_cast<std::size_t>(std::floor(mF / wt));
    if (cE == 0 || cF == 0 || cursor + cE + cF > N) {
      out.notes.push_back("block " + std::to_string(k) + " is below the grid resolution; stopped at " +
                          std::to_string(k - 1) + " blocks");
      break;
    }
    for (std::size_t i = cursor; i < cursor + cE; ++i) std::copy(pick->w.begin(), pick->w.end(), vals.begin() + i * n);
    runs.emplace_back(cursor, cursor + cE);
    cursor += cE;
    for (std::size_t i = cursor; i < cursor + cF; ++i) std::copy(pick->z.begin(), pick->z.end(), vals.begin() + i * n);
    runs.emplace_back(cursor, cursor + cF);
    cursor += cF;
    out.w_k.push_back(pick->w);
    out.z_k.push_back(pick->z);
    out.ratios.push_back(pick->ratio);
    out.measure_E.push_back(static_cast<double>(cE) * wt);
    out.measure_F.push_back(static_cast<double>(cF) * wt);
    out.block_lower_bounds.push_back(pick->f * out.measure_E.back() * out.measure_F.back());
  }
  if (out.w_k.empty()) return out;

  const GridFunction u(grid, n, vals, p);
  out.norm = lp_norm(u).value();
  out.norm_bound = p.is_infinite() ? M : std::pow(L, 1.0 / p.value());
  for (std::size_t K = 1; K <= out.w_k.size(); ++K) {
    std::vector<double> trunc(N * n, 0.0);
    const std::size_t end = runs[2 * K - 1].second;
    std::copy(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(end * n), trunc.begin());
    out.truncated_J.push_back(evaluate(f, GridFunction(grid, n, std::move(trunc), p)).value.value());
  }
  out.u = u;
  out.found = true;
  return out;
}

}  // namespace nlf
