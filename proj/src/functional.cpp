#include "nlf/functional.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nlf/parallel.hpp"
#include "nlf/summation.hpp"

namespace nlf {

PoleError::PoleError(std::vector<std::pair<std::size_t, std::size_t>> pairs, std::size_t total,
                     const std::string& detail)
    : Error(ErrorCode::kPole,
            [&] {
              std::string s = "pole encountered at " + std::to_string(total) + " node pair(s):";
              for (const auto& [i, j] : pairs) s += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
              if (total > pairs.size()) s += " ...";
              return s + " [" + detail + "]";
            }()),
      pairs_(std::move(pairs)),
      total_(total) {}

namespace {

struct RowResult {
  CompensatedSum pos;
  CompensatedSum neg;
  std::vector<std::pair<std::size_t, std::size_t>> poles;
  std::size_t pole_count = 0;
  std::string pole_detail;
  bool overflow = false;
};

template <class F>
FunctionalValue evaluate_direct(const F& f, const GridFunction& u, bool transpose, const std::string& label) {
  const std::size_t N = u.size();
  const double w2 = u.grid().weight() * u.grid().weight();
  std::vector<RowResult> rows(N);
  parallel_for(N, [&](std::size_t a) {
    RowResult& r = rows[a];
    for (std::size_t b = 0; b < N; ++b) {
      const std::size_t i = transpose ? b : a;
      const std::size_t j = transpose ? a : b;
      double v;
      try {
        v = f(EvalArgs{u.grid().node(i), u.grid().node(j), u.at(i), u.at(j)});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kPole) throw;
        if (r.poles.size() < PoleError::kMaxReported) r.poles.emplace_back(i, j);
        if (r.pole_detail.empty()) r.pole_detail = e.what();
        ++r.pole_count;
        continue;
      }
      if (!std::isfinite(v)) r.overflow = true;
      if (v >= 0) {
        r.pos.add(v);
      } else {
        r.neg.add(-v);
      }
    }
  });
  std::vector<std::pair<std::size_t, std::size_t>> poles;
  std::size_t pole_total = 0;
  std::string detail;
  CompensatedSum pos, neg;
  for (const auto& r : rows) {
    if (r.overflow) throw Error(ErrorCode::kEvalDomain, "integrand overflow during quadrature");
    pole_total += r.pole_count;
    for (const auto& p : r.poles) {
      if (poles.size() < PoleError::kMaxReported) poles.push_back(p);
    }
    if (detail.empty()) detail = r.pole_detail;
    pos.add(r.pos);
    neg.add(r.neg);
  }
  if (pole_total > 0) {
    std::sort(poles.begin(), poles.end());
    throw PoleError(std::move(poles), pole_total, detail);
  }
  FunctionalValue fv;
  fv.pos_part = w2 * pos.value();
  fv.neg_part = w2 * neg.value();
  fv.value = fv.pos_part.value() - fv.neg_part;
  fv.nodes = N;
  fv.integrand = label;
  return fv;
}

// Homogeneous f: J depends only on the value distribution of u.
std::optional<FunctionalValue> evaluate_grouped(const Integrand& f, const GridFunction& u) {
  const std::size_t N = u.size();
  if (N < 256) return std::nullopt;
  std::map<std::vector<double>, std::size_t> counts;
  for (std::size_t i = 0; i < N; ++i) {
    const auto v = u.at(i);
    ++counts[std::vector<double>(v.begin(), v.end())];
    if (counts.size() * 4 > N) return std::nullopt;
  }
  std::vector<std::pair<std::vector<double>, double>> groups(counts.begin(), counts.end());
  const double w = u.grid().weight();
  const std::vector<double> origin(f.dim_m(), 0.0);
  CompensatedSum pos, neg;
  for (const auto& [va, ca] : groups) {
    for (const auto& [vb, cb] : groups) {
      double v;
      try {
        v = f({origin, origin, va, vb});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kPole) throw;
        throw PoleError({}, static_cast<std::size_t>(ca * cb), e.what());
      }
      if (!std::isfinite(v)) throw Error(ErrorCode::kEvalDomain, "integrand overflow during quadrature");
      const double term = (ca * w) * (cb * w) * v;
      if (term >= 0) {
        pos.add(term);
      } else {
        neg.add(-term);
      }
    }
  }
  FunctionalValue fv;
  fv.pos_part = pos.value();
  fv.neg_part = neg.value();
  fv.value = pos.value() - neg.value();
  fv.nodes = N;
  fv.integrand = f.label();
  return fv;
}

void check_dims(std::size_t m, std::size_t n, const GridFunction& u) {
  if (u.grid().dim() != m || u.n() != n) {
    throw Error(ErrorCode::kMismatch, "integrand dimensions (m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                                          ") do not match grid function (m=" + std::to_string(u.grid().dim()) +
                                          ", n=" + std::to_string(u.n()) + ")");
  }
}

}  // namespace

FunctionalValue evaluate(const Integrand& f, const GridFunction& u, const EvaluateOptions& opts) {
  check_dims(f.dim_m(), f.dim_n(), u);
  if (f.homogeneous() && opts.allow_grouping && !opts.transpose) {
    if (auto grouped = evaluate_grouped(f, u)) return *grouped;
  }
  return evaluate_direct(f, u, opts.transpose, f.label());
}

FunctionalValue evaluate(const PointwiseFn& f, const GridFunction& u, const EvaluateOptions& opts) {
  check_dims(f.dim_m, f.dim_n, u);
  return evaluate_direct(f, u, opts.transpose, f.label);
}

double phi_value(const PointwiseFn& f, std::span<const double> x, const GridFunction& psi,
                 std::span<const double> w) {
  CompensatedSum s;
  for (std::size_t j = 0; j < psi.size(); ++j) s.add(f({x, psi.grid().node(j), w, psi.at(j)}));
  const double v = psi.grid().weight() * s.value();
  if (!std::isfinite(v)) throw Error(ErrorCode::kEvalDomain, "Phi overflow");
  return v;
}

PhiProfile phi_profile(const Integrand& f, std::span<const double> x, const GridFunction& psi,
                       const std::vector<std::vector<double>>& w_samples) {
  if (x.size() != f.dim_m()) throw Error(ErrorCode::kMismatch, "x has wrong dimension");
  check_dims(f.dim_m(), f.dim_n(), psi);
  PhiProfile prof;
  prof.x.assign(x.begin(), x.end());
  prof.w_samples = w_samples;
  prof.values.resize(w_samples.size());
  const PointwiseFn pf = f.pointwise();
  parallel_for(w_samples.size(), [&](std::size_t k) {
    if (w_samples[k].size() != f.dim_n()) throw Error(ErrorCode::kMismatch, "w sample has wrong dimension");
    CompensatedSum s;
    std::vector<std::pair<std::size_t, std::size_t>> poles;
    std::size_t pole_total = 0;
    std::string detail;
    for (std::size_t j = 0; j < psi.size(); ++j) {
      try {
        s.add(pf({x, psi.grid().node(j), w_samples[k], psi.at(j)}));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kPole) throw;
        if (poles.size() < PoleError::kMaxReported) poles.emplace_back(k, j);
        if (detail.empty()) detail = e.what();
        ++pole_total;
      }
    }
    if (pole_total) throw PoleError(std::move(poles), pole_total, detail);
    prof.values[k] = psi.grid().weight() * s.value();
  });
  return prof;
}

std::vector<double> phi_hessian(const IntegrandDeriv& d, std::span<const double> x, const GridFunction& psi,
                                std::span<const double> w) {
  const std::size_t n = d.base().dim_n();
  std::vector<CompensatedSum> acc(n * n);
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const EvalArgs args{x, psi.grid().node(j), w, psi.at(j)};
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) acc[a * n + b].add(d.hess(a, b, args));
    }
  }
  std::vector<double> h(n * n);
  for (std::size_t k = 0; k < n * n; ++k) h[k] = psi.grid().weight() * acc[k].value();
  return h;
}

Integrand require_symmetric(const Integrand& f, const Domain& box) {
  if (f.symmetric()) return f;
  if (f.symmetry() == Symmetry::kRefuted) {
    throw Error(ErrorCode::kAsymmetric, "integrand '" + f.label() + "' is not pairwise symmetric");
  }
  Integrand checked = verify_symmetry(f, 512, kDefaultSeed, box);
  if (!checked.symmetric()) {
    throw Error(ErrorCode::kAsymmetric, "integrand '" + f.label() + "' is not pairwise symmetric");
  }
  return checked;
}

GridFunction gradient(const IntegrandDeriv& d, const GridFunction& u) {
  const Integrand& f = d.base();
  check_dims(f.dim_m(), f.dim_n(), u);
  if (!f.symmetric()) {
    throw Error(ErrorCode::kAsymmetric, "gradient needs a pairwise symmetric integrand");
  }
  const std::size_t N = u.size();
  const std::size_t n = u.n();
  const double w2 = u.grid().weight() * u.grid().weight();
  std::vector<double> g(N * n);
  parallel_for(N, [&](std::size_t i) {
    std::vector<CompensatedSum> acc(n);
    for (std::size_t j = 0; j < N; ++j) {
      const EvalArgs args{u.grid().node(i), u.grid().node(j), u.at(i), u.at(j)};
      for (std::size_t c = 0; c < n; ++c) acc[c].add(d.grad(c, args));
    }
    for (std::size_t c = 0; c < n; ++c) g[i * n + c] = 2.0 * w2 * acc[c].value();
  });
  for (double v : g) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kEvalDomain, "gradient overflow");
  }
  return u.with_values(std::move(g));
}

GridFunction gradient(const Integrand& f, const GridFunction& u) {
  const Integrand sym = require_symmetric(f, u.grid().domain());
  return gradient(IntegrandDeriv(sym), u);
}

}  // namespace nlf
