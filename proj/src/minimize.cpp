#include "nlf/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nlf/error.hpp"
#include "nlf/functional.hpp"
#include "nlf/sampler.hpp"
#include "nlf/summation.hpp"

namespace nlf {

void MinimizeConfig::validate() const {
  if (max_iters == 0) throw Error(ErrorCode::kInvalidArgument, "max_iters must be positive");
  if (!(step0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step0 must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw Error(ErrorCode::kInvalidArgument, "armijo_c must lie in (0,1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw Error(ErrorCode::kInvalidArgument, "shrink must lie in (0,1)");
  if (!(grad_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "grad_tol must be positive");
  if (box && !(box->first <= box->second)) throw Error(ErrorCode::kInvalidArgument, "box needs lo <= hi");
}

const char* to_string(MinimizeStatus s) {
  switch (s) {
    case MinimizeStatus::kConverged: return "converged";
    case MinimizeStatus::kMaxIters: return "max-iters";
    case MinimizeStatus::kStalled: return "stalled";
  }
  return "max-iters";
}

namespace {

void project(std::vector<double>& v, const MinimizeConfig& cfg) {
  if (!cfg.box) return;
  for (double& x : v) x = std::clamp(x, cfg.box->first, cfg.box->second);
}

// Integrand whose discrete J equals that of f and whose gradient formula
// needs only ∂_w: f itself if symmetric, else its symmetrisation.
Integrand symmetric_representative(const Integrand& f, const Domain& box) {
  if (f.symmetric()) return f;
  const Integrand checked = verify_symmetry(f, 512, kDefaultSeed, box);
  return checked.symmetric() ? checked : symmetrize(f);
}

}  // namespace

MinimizeResult minimize(const Integrand& f, const GridFunction& u0, const MinimizeConfig& cfg) {
  cfg.validate();
  const Integrand sym = require_symmetric(f, u0.grid().domain());
  const IntegrandDeriv d(sym);
  const double wt = u0.grid().weight();

  std::vector<double> cur(u0.values().begin(), u0.values().end());
  project(cur, cfg);
  GridFunction u = u0.with_values(cur);
  double J = evaluate(sym, u).value.value();

  MinimizeResult res{u, J, 0, 0.0, false, MinimizeStatus::kMaxIters, {}};
  res.trace.push_back({0, J, 0.0, 0.0});
  std::vector<double> trial(cur.size()), riesz(cur.size());
  for (std::size_t it = 1; it <= cfg.max_iters + 1; ++it) {
    const GridFunction g = gradient(d, u);
    for (std::size_t q = 0; q < cur.size(); ++q) riesz[q] = g.values()[q] / wt;
    // projected gradient: u − P(u − r)
    for (std::size_t q = 0; q < cur.size(); ++q) trial[q] = cur[q] - riesz[q];
    project(trial, cfg);
    CompensatedSum pg2;
    for (std::size_t q = 0; q < cur.size(); ++q) pg2.add(wt * (cur[q] - trial[q]) * (cur[q] - trial[q]));
    res.grad_norm = std::sqrt(pg2.value());
    if (it == 1) res.trace.front().grad_norm = res.grad_norm;
    if (res.grad_norm <= cfg.grad_tol) {
      res.converged = true;
      res.status = MinimizeStatus::kConverged;
      break;
    }
    if (it > cfg.max_iters) break;

    double step = cfg.step0;
    bool accepted = false;
    double J_new = J;
    for (std::size_t s = 0; s <= cfg.max_shrinks; ++s) {
      for (std::size_t q = 0; q < cur.size(); ++q) trial[q] = cur[q] - step * riesz[q];
      project(trial, cfg);
      // sufficient decrease measured along the actual (projected) displacement
      CompensatedSum decrease;
      for (std::size_t q = 0; q < cur.size(); ++q) decrease.add(g.values()[q] * (cur[q] - trial[q]));
      J_new = evaluate(sym, u.with_values(trial)).value.value();
      if (J_new <= J - cfg.armijo_c * decrease.value() && J_new <= J) {
        accepted = true;
        break;
      }
      step *= cfg.shrink;
    }
    if (!accepted) {
      res.status = MinimizeStatus::kStalled;
      break;
    }
    cur = trial;
    u = u.with_values(cur);
    J = J_new;
    res.iters = it;
    res.trace.push_back({it, J, step, res.grad_norm});
  }
  res.u_star = u;
  res.J_star = J;
  return res;
}

double grad_check(const Integrand& f, const GridFunction& u, double h, std::uint64_t seed) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be positive");
  const Integrand sym = symmetric_representative(f, u.grid().domain());
  const GridFunction g = gradient(IntegrandDeriv(sym), u);
  Rng rng(seed);
  std::vector<double> v(u.values().size()), up(v.size()), um(v.size());
  double worst = 0.0;
  for (int r = 0; r < 32; ++r) {
    double norm = 0.0;
    for (double& x : v) {
      x = rng.uniform(-1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    CompensatedSum dir;
    for (std::size_t q = 0; q < v.size(); ++q) {
      dir.add(g.values()[q] * v[q]);
      up[q] = u.values()[q] + h * v[q];
      um[q] = u.values()[q] - h * v[q];
    }
    const double Jp = evaluate(sym, u.with_values(up)).value.value();
    const double Jm = evaluate(sym, u.with_values(um)).value.value();
    const double fd = (Jp - Jm) / (2.0 * h);
    worst = std::max(worst, std::abs(dir.value() - fd) / (1.0 + std::abs(dir.value())));
  }
  return worst;
}

std::string trace_csv(const MinimizeResult& r) {
  std::string out = "iter,J,step,grad_norm\n";
  char buf[128];
  for (const auto& row : r.trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", row.iter, row.J, row.step, row.grad_norm);
    out += buf;
  }
  return out;
}

}  // namespace nlf
