#include "nlf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>

#include "nlf/error.hpp"
#include "nlf/parallel.hpp"
#include "nlf/summation.hpp"

namespace nlf {

namespace {

constexpr double kGrowthLimit = 1e6;

double sum_abs(std::initializer_list<double> xs) {
  double s = 0.0;
  for (double x : xs) s += std::abs(x);
  return s;
}

// f value, or nullopt when the sample hits a pole or an invalid argument.
template <class F>
std::optional<double> try_eval(const F& f, const EvalArgs& a) {
  try {
    const double v = f(a);
    if (std::isnan(v)) return std::nullopt;
    return v;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPole || e.code() == ErrorCode::kEvalDomain) return std::nullopt;
    throw;
  }
}

void draw_values(Rng& rng, std::span<double> out, const std::optional<double>& bound) {
  if (bound) {
    for (double& v : out) v = rng.uniform(-*bound, *bound);
  } else {
    rng.mixed_vector(out);
  }
}

}  // namespace

// ------------------------------------------------------------ growth bounds

PropertyVerdict check_homogeneous_bound(const Integrand& f, Exponent p, double M, const Sampler& sampler) {
  if (!f.homogeneous()) {
    throw Error(ErrorCode::kNonHomogeneous, "growth bound check needs an integrand without x, y dependence");
  }
  if (!(M > 0.0)) throw Error(ErrorCode::kInvalidArgument, "M must be positive");
  const std::size_t n = f.dim_n();
  const std::vector<double> origin(f.dim_m(), 0.0);

  std::vector<double> radii;
  if (p.is_infinite()) {
    double r = std::min(1.0, M);
    while (true) {
      radii.push_back(r);
      if (r >= M) break;
      r = std::min(2.0 * r, M);
    }
  } else {
    for (int l = 0; l <= 12; ++l) radii.push_back(std::ldexp(1.0, l));
  }
  const std::size_t per_level = std::max<std::size_t>(16, sampler.budget / radii.size());

  Rng rng(sampler.seed);
  std::vector<double> w(n), z(n);
  auto ratio_at = [&](std::span<const double> wv, std::span<const double> zv, double& fv) -> std::optional<double> {
    auto v = try_eval(f, {origin, origin, wv, zv});
    if (!v) return std::nullopt;
    fv = *v;
    const ExtReal den = (ExtReal(1.0) + p_function(wv, p, M)) * (ExtReal(1.0) + p_function(zv, p, M));
    if (den.is_infinite()) return 0.0;
    if (std::isinf(fv)) return std::numeric_limits<double>::infinity();
    return fv / den.value();
  };

  struct Best {
    double ratio = -std::numeric_limits<double>::infinity();
    double fv = 0.0;
    std::vector<double> w, z;
  };
  std::vector<Best> level_best;
  Best overall;
  std::size_t samples = 0;
  bool saw_negative = false;

  for (std::size_t l = 0; l < radii.size(); ++l) {
    const double R = radii[l];
    Best best;
    auto consider = [&](std::span<const double> wv, std::span<const double> zv) {
      double fv = 0.0;
      auto r = ratio_at(wv, zv, fv);
      if (!r) return;
      ++samples;
      if (fv < 0.0) saw_negative = true;
      if (*r > best.ratio) {
        best.ratio = *r;
        best.fv = fv;
        best.w.assign(wv.begin(), wv.end());
        best.z.assign(zv.begin(), zv.end());
      }
    };
    if (l == 0) {
      std::vector<double> zero(n, 0.0);
      consider(zero, zero);
    }
    // diagonal corners and axis points of the box
    for (int sw : {1, -1}) {
      for (int sz : {1, -1}) {
        std::fill(w.begin(), w.end(), sw * R);
        std::fill(z.begin(), z.end(), sz * R);
        consider(w, z);
      }
    }
    for (std::size_t c = 0; c < n; ++c) {
      std::fill(w.begin(), w.end(), 0.0);
      std::fill(z.begin(), z.end(), 0.0);
      w[c] = R;
      z[c] = R;
      consider(w, z);
    }
    for (std::size_t s = 0; s < per_level; ++s) {
      for (double& v : w) v = rng.uniform(-R, R);
      for (double& v : z) v = rng.uniform(-R, R);
      consider(w, z);
    }
    if (best.ratio > overall.ratio) overall = best;
    level_best.push_back(best);

    if (l >= 3) {
      const double r0 = level_best[l - 3].ratio, r1 = level_best[l - 2].ratio, r2 = level_best[l - 1].ratio;
      const double r3 = best.ratio;
      if (r3 > kGrowthLimit && r0 < r1 && r1 < r2 && r2 < r3) {
        Witness wit;
        wit.set("w", best.w).set("z", best.z).set("f", {best.fv}).set("R", {R});
        std::vector<double> trend;
        for (std::size_t q = l - 3; q <= l; ++q) trend.push_back(level_best[q].ratio);
        wit.set("ratio_trend", trend);
        wit.lhs = best.ratio;
        wit.rhs = kGrowthLimit;
        wit.relation = "<=";
        auto v = PropertyVerdict::refute("homogeneous-bound", std::move(wit), samples, kGrowthLimit, sampler.seed);
        v.stats.emplace_back("M", M);
        if (saw_negative) v.notes.push_back("negative integrand values were sampled");
        return v;
      }
    }
  }
  auto v = PropertyVerdict::pass("homogeneous-bound", samples, kGrowthLimit, sampler.seed);
  v.stats.emplace_back("C", overall.ratio);
  v.stats.emplace_back("M", M);
  v.stats.emplace_back("max_radius", radii.back());
  if (saw_negative) v.notes.push_back("negative integrand values were sampled");
  return v;
}

BoundCertificate BoundCertificate::uniform(GridPtr grid, double alpha, double beta, double C, double M, Exponent p) {
  BoundCertificate c;
  const std::size_t N = grid->size();
  c.M = M;
  c.alpha.assign(N * N, alpha);
  c.beta.assign(N, beta);
  c.C = C;
  c.pstar = p.conjugate();
  c.grid = std::move(grid);
  return c;
}

double BoundCertificate::bound(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                               std::span<const double> z, Exponent p) const {
  const std::size_t N = grid->size();
  const std::size_t i = grid->locate(x);
  const std::size_t j = grid->locate(y);
  const ExtReal pw = p_function(w, p, M);
  const ExtReal pz = p_function(z, p, M);
  const ExtReal b = ExtReal(alpha[i * N + j]) + ExtReal(beta[i]) * pz + ExtReal(beta[j]) * pw + ExtReal(C) * pw * pz;
  return b.value();
}

PropertyVerdict validate_p_bound_certificate(const PointwiseFn& f, const BoundCertificate& cert, Exponent p,
                                             const Sampler& sampler) {
  if (!cert.grid) throw Error(ErrorCode::kInvalidArgument, "certificate has no grid");
  const std::size_t N = cert.grid->size();
  if (cert.alpha.size() != N * N || cert.beta.size() != N) {
    throw Error(ErrorCode::kMismatch, "certificate tables do not match its grid");
  }
  if (cert.C < 0.0) throw Error(ErrorCode::kInvalidArgument, "certificate constant C must be >= 0");
  for (double a : cert.alpha) {
    if (a < 0.0) throw Error(ErrorCode::kInvalidArgument, "certificate alpha must be >= 0");
  }
  for (double b : cert.beta) {
    if (b < 0.0) throw Error(ErrorCode::kInvalidArgument, "certificate beta must be >= 0");
  }
  const Domain& dom = cert.grid->domain();
  if (dom.dim() != f.dim_m) throw Error(ErrorCode::kMismatch, "certificate grid dimension differs from m");
  Rng rng(sampler.seed);
  std::vector<double> x(f.dim_m), y(f.dim_m), w(f.dim_n), z(f.dim_n);
  std::size_t done = 0;
  for (std::size_t s = 0; s < sampler.budget; ++s) {
    rng.point_in(dom, x);
    rng.point_in(dom, y);
    rng.mixed_vector(w);
    rng.mixed_vector(z);
    auto v = try_eval(f, {x, y, w, z});
    if (!v) continue;
    ++done;
    const double b = cert.bound(x, y, w, z, p);
    const double tol = 1e-9 * (1.0 + std::abs(b));
    if (std::abs(*v) > b + tol) {
      Witness wit;
      wit.set("x", x).set("y", y).set("w", w).set("z", z).set("f", {*v});
      wit.lhs = std::abs(*v);
      wit.rhs = b;
      wit.relation = "<=";
      return PropertyVerdict::refute("p-bound", std::move(wit), done, 1e-9, sampler.seed);
    }
  }
  auto v = PropertyVerdict::pass("p-bound", done, 1e-9, sampler.seed);
  v.notes.push_back("pointwise domination only; integrability of the tabulated alpha and beta is not certified");
  return v;
}

// ------------------------------------------------------------- convexity

PropertyVerdict check_separately_convex(const PointwiseFn& f, const Sampler& sampler, const ConvexityOptions& opts) {
  if (opts.box.dim() != f.dim_m) throw Error(ErrorCode::kMismatch, "sampling box dimension differs from m");
  const std::size_t n = f.dim_n;
  Rng rng(sampler.seed);
  std::vector<double> x(f.dim_m), y(f.dim_m), fixed(n), a(n), b(n), mid(n);
  std::size_t done = 0;
  std::size_t skipped = 0;
  double worst = 0.0;
  for (std::size_t s = 0; s < sampler.budget; ++s) {
    rng.point_in(opts.box, x);
    rng.point_in(opts.box, y);
    draw_values(rng, fixed, opts.value_bound);
    draw_values(rng, a, opts.value_bound);
    draw_values(rng, b, opts.value_bound);
    const double theta = rng.uniform();
    for (std::size_t c = 0; c < n; ++c) mid[c] = theta * a[c] + (1.0 - theta) * b[c];
    // alternate between the w slot and the z slot
    const bool w_slot = (s % 2) == 0;
    auto at = [&](std::span<const double> v) {
      return w_slot ? try_eval(f, {x, y, v, fixed}) : try_eval(f, {x, y, fixed, v});
    };
    const auto fa = at(a), fb = at(b), fm = at(mid);
    if (!fa || !fb || !fm || std::isinf(*fa) || std::isinf(*fb) || std::isinf(*fm)) {
      ++skipped;
      continue;
    }
    ++done;
    const double lhs = theta * *fa + (1.0 - theta) * *fb;
    const double tol = 1e-9 * (1.0 + sum_abs({*fa, *fb, *fm}));
    worst = std::max(worst, (*fm - lhs) / (1.0 + sum_abs({*fa, *fb, *fm})));
    if (lhs < *fm - tol) {
      Witness wit;
      wit.set("x", x).set("y", y).set(w_slot ? "z" : "w", fixed).set("v1", a).set("v2", b).set("theta", {theta});
      wit.set("slot", {w_slot ? 0.0 : 1.0});
      wit.set("f_v1", {*fa}).set("f_v2", {*fb}).set("f_mid", {*fm});
      wit.lhs = lhs;
      wit.rhs = *fm;
      wit.relation = ">=";
      auto v = PropertyVerdict::refute("separate-convexity", std::move(wit), done, 1e-9, sampler.seed);
      v.stats.emplace_back("skipped", static_cast<double>(skipped));
      return v;
    }
  }
  auto v = PropertyVerdict::pass("separate-convexity", done, 1e-9, sampler.seed);
  v.stats.emplace_back("max_relative_defect", worst);
  v.stats.emplace_back("skipped", static_cast<double>(skipped));
  return v;
}

std::vector<GridFunction> random_psi_suite(const GridPtr& grid, std::size_t n, std::size_t count, std::uint64_t seed,
                                           double scale) {
  Rng rng(seed);
  std::vector<GridFunction> out;
  const Domain& d = grid->domain();
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> vals(grid->size() * n);
    switch (k % 3) {
      case 0: {  // piecewise constant in the node order
        const std::size_t pieces = 8;
        std::vector<double> levels(pieces * n);
        for (double& v : levels) v = rng.uniform(-scale, scale);
        for (std::size_t i = 0; i < grid->size(); ++i) {
          const std::size_t piece = i * pieces / grid->size();
          for (std::size_t c = 0; c < n; ++c) vals[i * n + c] = levels[piece * n + c];
        }
        break;
      }
      case 1: {  // smooth: affine plus a sine wave along each axis
        std::vector<double> coef(n * (2 + 2 * d.dim()));
        for (double& v : coef) v = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < grid->size(); ++i) {
          const auto x = grid->node(i);
          for (std::size_t c = 0; c < n; ++c) {
            const double* q = coef.data() + c * (2 + 2 * d.dim());
            double v = q[0];
            for (std::size_t j = 0; j < d.dim(); ++j) {
              const double t = (x[j] - d.axis(j).lo) / d.axis(j).length();
              v += q[2 + 2 * j] * t + q[3 + 2 * j] * std::sin(2.0 * M_PI * (1.0 + q[1]) * t);
            }
            vals[i * n + c] = scale * v / (1.0 + static_cast<double>(d.dim()));
          }
        }
        break;
      }
      default:
        for (double& v : vals) v = rng.uniform(-scale, scale);
    }
    out.emplace_back(grid, n, std::move(vals));
  }
  return out;
}

std::vector<std::vector<double>> random_points(const Domain& d, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(count, std::vector<double>(d.dim()));
  for (auto& x : pts) rng.point_in(d, x);
  return pts;
}

std::vector<WTriple> random_w_triples(std::size_t n, std::size_t count, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::vector<WTriple> out(count);
  for (auto& t : out) {
    t.w1.resize(n);
    t.w2.resize(n);
    for (double& v : t.w1) v = rng.uniform(-scale, scale);
    for (double& v : t.w2) v = rng.uniform(-scale, scale);
    t.theta = rng.uniform(0.05, 0.95);
  }
  return out;
}

namespace {

// Determinant by Gaussian elimination with partial pivoting.
double determinant(std::vector<double> a, std::size_t n) {
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    }
    if (a[piv * n + c] == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      det = -det;
    }
    det *= a[c * n + c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double fct = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= fct * a[c * n + k];
    }
  }
  return det;
}

std::optional<double> min_eigenvalue(const std::vector<double>& h, std::size_t n) {
  if (n == 1) return h[0];
  if (n == 2) {
    const double a = h[0], b = 0.5 * (h[1] + h[2]), d = h[3];
    return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  }
  return std::nullopt;
}

}  // namespace

PropertyVerdict check_phi_convex(const Integrand& f, const std::vector<GridFunction>& psi_suite,
                                 const std::vector<std::vector<double>>& x_samples,
                                 const std::vector<WTriple>& w_triples, double tol, std::uint64_t seed) {
  if (psi_suite.empty()) throw Error(ErrorCode::kInvalidArgument, "psi suite must not be empty");
  const std::size_t n = f.dim_n();
  for (const auto& psi : psi_suite) {
    if (psi.n() != n || psi.grid().dim() != f.dim_m()) {
      throw Error(ErrorCode::kMismatch, "psi suite dimensions do not match the integrand");
    }
  }
  for (const auto& t : w_triples) {
    if (t.w1.size() != n || t.w2.size() != n) throw Error(ErrorCode::kMismatch, "w triple has wrong dimension");
  }
  const PointwiseFn pf = f.pointwise();
  std::optional<IntegrandDeriv> deriv;
  if (f.smooth_w()) deriv.emplace(f);

  struct Cell {
    std::optional<Witness> witness;
    double min_det = std::numeric_limits<double>::infinity();
    double min_eig = std::numeric_limits<double>::infinity();
    std::size_t tests = 0;
  };
  const std::size_t X = x_samples.size();
  std::vector<Cell> cells(psi_suite.size() * X);
  parallel_for(cells.size(), [&](std::size_t idx) {
    const std::size_t a = idx / X;
    const std::size_t b = idx % X;
    const auto& psi = psi_suite[a];
    const auto& x = x_samples[b];
    Cell& cell = cells[idx];
    std::vector<double> mid(n);
    for (const auto& t : w_triples) {
      for (std::size_t c = 0; c < n; ++c) mid[c] = t.theta * t.w1[c] + (1.0 - t.theta) * t.w2[c];
      const double p1 = phi_value(pf, x, psi, t.w1);
      const double p2 = phi_value(pf, x, psi, t.w2);
      const double pm = phi_value(pf, x, psi, mid);
      ++cell.tests;
      if (deriv) {
        const auto H = phi_hessian(*deriv, x, psi, mid);
        cell.min_det = std::min(cell.min_det, determinant(H, n));
        if (auto e = min_eigenvalue(H, n)) cell.min_eig = std::min(cell.min_eig, *e);
      }
      const double lhs = t.theta * p1 + (1.0 - t.theta) * p2;
      const double tau = tol * (1.0 + sum_abs({p1, p2, pm}));
      if (lhs < pm - tau) {
        Witness wit;
        wit.set("psi_index", {static_cast<double>(a)}).set("x", x).set("w1", t.w1).set("w2", t.w2);
        wit.set("theta", {t.theta}).set("phi_w1", {p1}).set("phi_w2", {p2}).set("phi_mid", {pm});
        wit.lhs = lhs;
        wit.rhs = pm;
        wit.relation = ">=";
        cell.witness = std::move(wit);
        return;
      }
    }
  });
  std::size_t tests = 0;
  double min_det = std::numeric_limits<double>::infinity();
  double min_eig = std::numeric_limits<double>::infinity();
  for (auto& cell : cells) {
    tests += cell.tests;
    min_det = std::min(min_det, cell.min_det);
    min_eig = std::min(min_eig, cell.min_eig);
    if (cell.witness) {
      auto v = PropertyVerdict::refute("phi-convexity", std::move(*cell.witness), tests, tol, seed);
      if (deriv) v.stats.emplace_back("min_hessian_det", min_det);
      return v;
    }
  }
  auto v = PropertyVerdict::pass("phi-convexity", tests, tol, seed);
  if (deriv) {
    v.stats.emplace_back("min_hessian_det", min_det);
    if (n <= 2) v.stats.emplace_back("min_hessian_eig", min_eig);
  } else {
    v.notes.push_back("integrand not smooth in w; Hessian of Phi not sampled");
  }
  v.stats.emplace_back("psi_count", static_cast<double>(psi_suite.size()));
  v.stats.emplace_back("x_count", static_cast<double>(X));
  v.stats.emplace_back("triple_count", static_cast<double>(w_triples.size()));
  return v;
}

const char* to_string(WlscOutcome o) {
  switch (o) {
    case WlscOutcome::kEvidence: return "wlsc-evidence";
    case WlscOutcome::kRefuted: return "wlsc-refuted";
    case WlscOutcome::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

WlscReport wlsc_verdict(const Integrand& f, Exponent p, const Sampler& sampler, const WlscOptions& opts) {
  WlscReport r;
  if (f.symmetry() == Symmetry::kUnknown || f.symmetry() == Symmetry::kRefuted) {
    r.symmetry = check_pairwise_symmetry(f, 512, sampler.seed, opts.box);
    if (r.symmetry->refuted()) {
      r.notes.push_back("integrand is not pairwise symmetric; both criteria are applied to f as given");
    }
  }
  r.separate = check_separately_convex(f.pointwise(), sampler, {opts.box, std::nullopt});

  auto grid = build_grid(opts.box, {opts.grid_nodes});
  auto suite = random_psi_suite(grid, f.dim_n(), opts.psi_count, sampler.seed + 1);
  for (auto& psi : suite) psi = GridFunction(psi.grid_ptr(), psi.n(), {psi.values().begin(), psi.values().end()}, p);
  const auto xs = random_points(opts.box, opts.x_count, sampler.seed + 2);
  const auto triples = random_w_triples(f.dim_n(), opts.triple_count, sampler.seed + 3);
  r.phi = check_phi_convex(f, suite, xs, triples, 1e-9, sampler.seed);

  if (r.phi.refuted()) {
    r.outcome = WlscOutcome::kRefuted;
    r.criterion = "phi-convexity";
  } else if (r.separate.passed()) {
    r.outcome = WlscOutcome::kEvidence;
    r.criterion = "separate-convexity";
  } else if (r.phi.passed() && r.phi.samples > 0) {
    r.outcome = WlscOutcome::kEvidence;
    r.criterion = "phi-convexity";
    r.notes.push_back("not separately convex; evidence rests on Phi convexity alone");
  } else {
    r.outcome = WlscOutcome::kInconclusive;
    r.criterion = "none";
  }
  return r;
}

// --------------------------------------------------------- decomposition

double GKnots::at_node(std::size_t i, std::size_t j, double w) const {
  const std::size_t W = w_grid.size();
  const std::size_t base = (i * grid->size() + j) * W;
  const double* c = centred.data() + base;
  const double* g1 = cum1.data() + base;
  const double* g2 = cum2.data() + base;
  if (w <= w_grid.front()) {
    const double t = w_grid.front() - w;
    return g2[0] - g1[0] * t + 0.5 * t * t * c[0];
  }
  if (w >= w_grid.back()) {
    const double t = w - w_grid.back();
    return g2[W - 1] + g1[W - 1] * t + 0.5 * t * t * c[W - 1];
  }
  const auto it = std::upper_bound(w_grid.begin(), w_grid.end(), w);
  const std::size_t k = static_cast<std::size_t>(it - w_grid.begin()) - 1;
  const double h = w_grid[k + 1] - w_grid[k];
  const double t = w - w_grid[k];
  const double cw = c[k] + (c[k + 1] - c[k]) * t / h;
  return g2[k] + g1[k] * t + t * t * (2.0 * c[k] + cw) / 6.0;
}

double GKnots::at(std::span<const double> x, std::span<const double> y, double w) const {
  return at_node(grid->locate(x), grid->locate(y), w);
}

namespace {

// Fills cum1/cum2 at the knots for one node pair, integrating the
// piecewise-linear c outwards from w = 0.
void integrate_from_zero(const std::vector<double>& wg, const double* c, double* g1, double* g2) {
  const std::size_t W = wg.size();
  double c0;
  if (0.0 <= wg.front()) {
    c0 = c[0];
  } else if (0.0 >= wg.back()) {
    c0 = c[W - 1];
  } else {
    const auto it = std::upper_bound(wg.begin(), wg.end(), 0.0);
    const std::size_t k = static_cast<std::size_t>(it - wg.begin()) - 1;
    c0 = c[k] + (c[k + 1] - c[k]) * (0.0 - wg[k]) / (wg[k + 1] - wg[k]);
  }
  // rightwards
  double a = 0.0, ca = c0, G1 = 0.0, G2 = 0.0;
  for (std::size_t k = 0; k < W; ++k) {
    if (wg[k] < 0.0) continue;
    const double h = wg[k] - a;
    const double cb = c[k];
    G2 += G1 * h + h * h * (2.0 * ca + cb) / 6.0;
    G1 += h * (ca + cb) / 2.0;
    g1[k] = G1;
    g2[k] = G2;
    a = wg[k];
    ca = cb;
  }
  // leftwards
  double b = 0.0, cb = c0;
  G1 = 0.0;
  G2 = 0.0;
  for (std::size_t k = W; k-- > 0;) {
    if (wg[k] >= 0.0) continue;
    const double h = b - wg[k];
    const double cl = c[k];
    G2 += -G1 * h + h * h * (cl + 2.0 * cb) / 6.0;
    G1 -= h * (cl + cb) / 2.0;
    g1[k] = G1;
    g2[k] = G2;
    b = wg[k];
    cb = cl;
  }
}

}  // namespace

Decomposition decompose(const Integrand& f, GridPtr grid, std::vector<double> w_grid, const DecomposeOptions& opts) {
  if (f.dim_n() != 1) {
    throw Error(ErrorCode::kUnsupported, "the decomposition is only constructed for n = 1");
  }
  if (grid->dim() != f.dim_m()) throw Error(ErrorCode::kMismatch, "grid dimension differs from m");
  if (w_grid.size() < 2 || !std::is_sorted(w_grid.begin(), w_grid.end()) ||
      std::adjacent_find(w_grid.begin(), w_grid.end()) != w_grid.end()) {
    throw Error(ErrorCode::kInvalidArgument, "w grid needs at least two strictly increasing points");
  }
  if (opts.M_ladder.empty() || !std::is_sorted(opts.M_ladder.begin(), opts.M_ladder.end()) ||
      opts.M_ladder.front() <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "M ladder must be positive and increasing");
  }
  if (opts.z_grid_points < 2) throw Error(ErrorCode::kInvalidArgument, "z grid needs at least two points");
  const Integrand sym = require_symmetric(f, grid->domain());
  const IntegrandDeriv d(sym);

  Decomposition dec;
  dec.grid = grid;
  dec.w_grid = std::move(w_grid);
  dec.M_ladder = opts.M_ladder;
  const std::size_t N = grid->size();
  const std::size_t W = dec.w_grid.size();
  const std::size_t L = opts.M_ladder.size();
  const bool z_dep = d.hess_depends_on_z();
  dec.gamma_M.assign(L, std::vector<double>(N * N * W));

  parallel_for(N, [&](std::size_t i) {
    const auto x = grid->node(i);
    double w = 0.0, z = 0.0;
    const EvalArgs args{x, {}, {&w, 1}, {&z, 1}};
    for (std::size_t j = 0; j < N; ++j) {
      EvalArgs a = args;
      a.y = grid->node(j);
      auto hess = [&](double zz) {
        z = zz;
        return d.hess(0, 0, a);
      };
      for (std::size_t k = 0; k < W; ++k) {
        w = dec.w_grid[k];
        double running = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < L; ++l) {
          const double M = opts.M_ladder[l];
          double best;
          if (!z_dep) {
            best = hess(0.0);
          } else {
            const std::size_t P = opts.z_grid_points;
            const double step = 2.0 * M / static_cast<double>(P - 1);
            std::size_t arg = 0;
            best = std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < P; ++t) {
              const double v = hess(-M + step * static_cast<double>(t));
              if (v < best) {
                best = v;
                arg = t;
              }
            }
            double lo = -M + step * static_cast<double>(arg == 0 ? 0 : arg - 1);
            double hi = -M + step * static_cast<double>(std::min(arg + 1, P - 1));
            constexpr double kInvPhi = 0.6180339887498949;
            double c1 = hi - kInvPhi * (hi - lo), c2 = lo + kInvPhi * (hi - lo);
            double f1 = hess(c1), f2 = hess(c2);
            for (std::size_t it = 0; it < opts.golden_iterations; ++it) {
              if (f1 < f2) {
                hi = c2;
                c2 = c1;
                f2 = f1;
                c1 = hi - kInvPhi * (hi - lo);
                f1 = hess(c1);
              } else {
                lo = c1;
                c1 = c2;
                f1 = f2;
                c2 = lo + kInvPhi * (hi - lo);
                f2 = hess(c2);
              }
            }
            best = std::min({best, f1, f2});
          }
          if (!std::isfinite(best)) {
            throw Error(ErrorCode::kEvalDomain, "second w-derivative is not finite on the decomposition grid");
          }
          running = std::min(running, best);
          dec.gamma_M[l][(i * N + j) * W + k] = running;
        }
      }
    }
  });

  dec.gamma = dec.gamma_M.back();
  if (L >= 2) {
    const auto& prev = dec.gamma_M[L - 2];
    for (std::size_t e = 0; e < dec.gamma.size(); ++e) {
      if (std::abs(dec.gamma[e] - prev[e]) > opts.stabilization_tol * (1.0 + std::abs(prev[e]))) {
        ++dec.unstable_entries;
      }
    }
    if (dec.unstable_entries > 0) {
      dec.notes.push_back(std::to_string(dec.unstable_entries) +
                          " gamma entries did not stabilise along the M ladder; the largest M is used");
    }
  }

  // y-means and the nonnegativity condition on them
  const double wt = grid->weight();
  const double mass = grid->mass();
  dec.gamma_mean.assign(N * W, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < W; ++k) {
      CompensatedSum s, sa;
      for (std::size_t j = 0; j < N; ++j) {
        const double v = dec.gamma[(i * N + j) * W + k];
        s.add(wt * v);
        sa.add(wt * std::abs(v));
      }
      if (s.value() < -opts.mean_tol * (1.0 + sa.value())) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "y-integral of gamma is %.6g < 0 at x node %zu, w = %.6g", s.value(), i,
                      dec.w_grid[k]);
        throw Error(ErrorCode::kPhiNonconvex, std::string(buf) + "; no separately convex representative exists");
      }
      dec.gamma_mean[i * W + k] = s.value() / mass;
    }
  }

  auto knots = std::make_shared<GKnots>();
  knots->grid = grid;
  knots->w_grid = dec.w_grid;
  knots->centred.resize(N * N * W);
  knots->cum1.resize(N * N * W);
  knots->cum2.resize(N * N * W);
  parallel_for(N, [&](std::size_t i) {
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t base = (i * N + j) * W;
      for (std::size_t k = 0; k < W; ++k) {
        knots->centred[base + k] = dec.gamma[base + k] - dec.gamma_mean[i * W + k];
      }
      integrate_from_zero(knots->w_grid, knots->centred.data() + base, knots->cum1.data() + base,
                          knots->cum2.data() + base);
    }
  });
  dec.g = knots->cum2;
  dec.knots = knots;

  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < W; ++k) {
      CompensatedSum s;
      for (std::size_t j = 0; j < N; ++j) s.add(wt * dec.g[(i * N + j) * W + k]);
      dec.g_mean_defect = std::max(dec.g_mean_defect, std::abs(s.value()));
    }
  }

  dec.h.resize(N * N);
  const double zero = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      dec.h[i * N + j] = sym({grid->node(i), grid->node(j), {&zero, 1}, {&zero, 1}});
    }
  }

  const PointwiseFn base = sym.pointwise();
  std::shared_ptr<const GKnots> gk = knots;
  dec.f_tilde = PointwiseFn{f.dim_m(), 1,
                            [base, gk](const EvalArgs& a) {
                              return base(a) - gk->at(a.x, a.y, a.w[0]) - gk->at(a.y, a.x, a.z[0]);
                            },
                            "ftilde(" + f.label() + ")"};

  // f = f̃ + g(x,y,w) + g(y,x,z) on the tabulated nodes; zero up to rounding
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < W; k += std::max<std::size_t>(1, W / 8)) {
        const double w = dec.w_grid[k];
        const double z = dec.w_grid[W - 1 - k];
        const EvalArgs a{grid->node(i), grid->node(j), {&w, 1}, {&z, 1}};
        const double fv = base(a);
        const double rebuilt = dec.f_tilde(a) + knots->at_node(i, j, w) + knots->at_node(j, i, z);
        dec.residual = std::max(dec.residual, std::abs(fv - rebuilt) / (1.0 + std::abs(fv)));
      }
    }
  }

  double hsym = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < i; ++j) hsym = std::max(hsym, std::abs(dec.h[i * N + j] - dec.h[j * N + i]));
  }
  if (hsym > 1e-12) dec.notes.push_back("h table is not symmetric (max defect " + std::to_string(hsym) + ")");

  const double wmax = std::max(std::abs(dec.w_grid.front()), std::abs(dec.w_grid.back()));
  dec.f_tilde_convexity = check_separately_convex(dec.f_tilde, opts.convexity_sampler, {grid->domain(), wmax});
  dec.notes.push_back("p-regularity bounds of the second derivatives are assumed, not certified");
  return dec;
}

// ------------------------------------------------------------ null class

namespace {

double interp_linear(const std::vector<double>& xs, const double* ys, double x) {
  if (x <= xs.front()) return ys[0];
  if (x >= xs.back()) return ys[xs.size() - 1];
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double t = (x - xs[k]) / (xs[k + 1] - xs[k]);
  return ys[k] + t * (ys[k + 1] - ys[k]);
}

void validate_tables(const NullClassTables& t) {
  if (!t.grid) throw Error(ErrorCode::kInvalidArgument, "null-class tables have no grid");
  const std::size_t N = t.grid->size();
  if (t.w_grid.size() < 2 || !std::is_sorted(t.w_grid.begin(), t.w_grid.end())) {
    throw Error(ErrorCode::kInvalidArgument, "w grid needs at least two increasing points");
  }
  if (t.g.size() != N * N * t.w_grid.size() || t.h.size() != N * N) {
    throw Error(ErrorCode::kMismatch, "null-class table sizes do not match the grid");
  }
}

}  // namespace

PointwiseFn NullClassTables::assembled() const {
  validate_tables(*this);
  auto self = std::make_shared<const NullClassTables>(*this);
  return PointwiseFn{grid->dim(), 1,
                     [self](const EvalArgs& a) {
                       const std::size_t N = self->grid->size();
                       const std::size_t W = self->w_grid.size();
                       const std::size_t i = self->grid->locate(a.x);
                       const std::size_t j = self->grid->locate(a.y);
                       return interp_linear(self->w_grid, self->g.data() + (i * N + j) * W, a.w[0]) +
                              interp_linear(self->w_grid, self->g.data() + (j * N + i) * W, a.z[0]) +
                              self->h[i * N + j];
                     },
                     "null-class"};
}

NullClassTables tabulate_null_class(const std::string& g_text, const std::string& h_text, GridPtr grid,
                                    std::vector<double> w_grid) {
  const std::size_t m = grid->dim();
  const Expr g = parse_expr(g_text, m, 1);
  const Expr h = parse_expr(h_text, m, 1);
  if (g.depends_on(VarKind::kZ)) throw Error(ErrorCode::kInvalidArgument, "g must not depend on z");
  if (h.depends_on(VarKind::kW) || h.depends_on(VarKind::kZ)) {
    throw Error(ErrorCode::kInvalidArgument, "h must depend on x and y only");
  }
  const Program gp(g), hp(h);
  NullClassTables t;
  t.grid = grid;
  t.w_grid = std::move(w_grid);
  const std::size_t N = grid->size();
  const std::size_t W = t.w_grid.size();
  t.g.resize(N * N * W);
  t.h.resize(N * N);
  const double zero = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      for (std::size_t k = 0; k < W; ++k) {
        t.g[(i * N + j) * W + k] = gp({grid->node(i), grid->node(j), {&t.w_grid[k], 1}, {&zero, 1}});
      }
      t.h[i * N + j] = hp({grid->node(i), grid->node(j), {&zero, 1}, {&zero, 1}});
    }
  }
  validate_tables(t);
  return t;
}

Integrand assemble_null_integrand(const std::string& g_text, const std::string& h_text, std::size_t dim_m) {
  const Expr g = parse_expr(g_text, dim_m, 1);
  const Expr h = parse_expr(h_text, dim_m, 1);
  if (g.depends_on(VarKind::kZ)) throw Error(ErrorCode::kInvalidArgument, "g must not depend on z");
  if (h.depends_on(VarKind::kW) || h.depends_on(VarKind::kZ)) {
    throw Error(ErrorCode::kInvalidArgument, "h must depend on x and y only");
  }
  return Integrand(g + swap_pairs(g) + h, dim_m, 1, "g(x,y,w)+g(y,x,z)+h(x,y) with g=" + g_text + ", h=" + h_text);
}

PropertyVerdict check_null_class(const NullClassTables& t, std::size_t trials, std::uint64_t seed) {
  validate_tables(t);
  const Grid& grid = *t.grid;
  const std::size_t N = grid.size();
  const std::size_t W = t.w_grid.size();
  const double wt = grid.weight();
  constexpr double kTol = 1e-8;
  std::size_t checks = 0;

  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      ++checks;
      const double a = t.h[i * N + j], b = t.h[j * N + i];
      if (std::abs(a - b) > kTol * (1.0 + std::abs(a))) {
        Witness wit;
        auto xi = grid.node(i), xj = grid.node(j);
        wit.set("x", {xi.begin(), xi.end()}).set("y", {xj.begin(), xj.end()}).set("h_xy", {a}).set("h_yx", {b});
        wit.lhs = std::abs(a - b);
        wit.rhs = kTol * (1.0 + std::abs(a));
        wit.relation = "<=";
        return PropertyVerdict::refute("null-class:h-symmetric", std::move(wit), checks, kTol, seed);
      }
    }
  }
  {
    CompensatedSum s, sa;
    for (double v : t.h) {
      s.add(wt * wt * v);
      sa.add(wt * wt * std::abs(v));
    }
    ++checks;
    if (std::abs(s.value()) > kTol * (1.0 + sa.value())) {
      Witness wit;
      wit.set("integral_h", {s.value()});
      wit.lhs = std::abs(s.value());
      wit.rhs = kTol * (1.0 + sa.value());
      wit.relation = "<=";
      return PropertyVerdict::refute("null-class:h-mean", std::move(wit), checks, kTol, seed);
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < W; ++k) {
      CompensatedSum s, sa;
      for (std::size_t j = 0; j < N; ++j) {
        const double v = t.g[(i * N + j) * W + k];
        s.add(wt * v);
        sa.add(wt * std::abs(v));
      }
      ++checks;
      if (std::abs(s.value()) > kTol * (1.0 + sa.value())) {
        Witness wit;
        auto xi = grid.node(i);
        wit.set("x", {xi.begin(), xi.end()}).set("w", {t.w_grid[k]}).set("integral_g_dy", {s.value()});
        wit.lhs = std::abs(s.value());
        wit.rhs = kTol * (1.0 + sa.value());
        wit.relation = "<=";
        return PropertyVerdict::refute("null-class:g-mean", std::move(wit), checks, kTol, seed);
      }
    }
  }

  const PointwiseFn f0 = t.assembled();
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::vector<double> vals(N);
    for (double& v : vals) v = rng.uniform(t.w_grid.front(), t.w_grid.back());
    const GridFunction u(t.grid, 1, std::move(vals));
    const double J = evaluate(f0, u).value.value();
    const double norm = lp_norm(u).value();
    const double tol = 1e-7 * (1.0 + norm * norm);
    worst = std::max(worst, std::abs(J));
    ++checks;
    if (std::abs(J) > tol) {
      Witness wit;
      wit.set("trial", {static_cast<double>(trial)}).set("u", {u.values().begin(), u.values().end()});
      wit.set("J", {J});
      wit.lhs = std::abs(J);
      wit.rhs = tol;
      wit.relation = "<=";
      return PropertyVerdict::refute("null-class:functional", std::move(wit), checks, 1e-7, seed);
    }
  }
  auto v = PropertyVerdict::pass("null-class", checks, kTol, seed);
  v.stats.emplace_back("max_abs_J", worst);
  v.stats.emplace_back("trials", static_cast<double>(trials));
  return v;
}

}  // namespace nlf
