// nlf: command-line front end over the C API in nlf/nlf.h.
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nlf/nlf.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRefuted = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  ApiError(nlf_status s, const std::string& what) : std::runtime_error(what), status(s) {}
  nlf_status status;
};

void check(nlf_status s) {
  if (s != NLF_OK) throw ApiError(s, std::string(nlf_status_name(s)) + ": " + nlf_last_error());
}

struct StrFree {
  void operator()(char* p) const { nlf_string_free(p); }
};
using CStr = std::unique_ptr<char, StrFree>;

struct GridFree {
  void operator()(nlf_grid* p) const { nlf_grid_free(p); }
};
struct FnFree {
  void operator()(nlf_integrand* p) const { nlf_integrand_free(p); }
};
struct UFree {
  void operator()(nlf_gridfn* p) const { nlf_gridfn_free(p); }
};
using Grid = std::unique_ptr<nlf_grid, GridFree>;
using Fn = std::unique_ptr<nlf_integrand, FnFree>;
using U = std::unique_ptr<nlf_gridfn, UFree>;

std::string take(char* p) {
  CStr owner(p);
  return p ? std::string(p) : std::string();
}

json take_json(char* p) { return json::parse(take(p)); }

// Options shared by every subcommand; unset strings mean "use the default".
struct Options {
  std::string f;
  std::string grid = "64";
  std::string domain;
  std::string p = "2";
  double M = 1.0;
  bool M_set = false;
  std::uint64_t seed = 0x5EED;
  std::string out;
  unsigned threads = 0;
  std::size_t samples = 0;

  // subcommand specific
  std::string kind;
  std::string u, u_csv, psi = "0", x, w_range = "-2,2";
  std::size_t w_count = 81;
  std::string limit = "0", direction = "1", omega1 = "1", omega2 = "-1", plan = "scalar-shrink";
  double theta = 0.5;
  std::size_t k_max = 32;
  double delta = 1.0 / 64.0;
  std::string E = "unit-square";
  std::size_t resolution = 4096;
  std::string phi_field = "x1", psi_field = "x1";
  std::size_t base_nodes = 0, max_nodes = 0, blocks = 8, nodes = 0;
  double alpha = 1.0, beta = 1.0, C = 1.0, value_bound = 0.0;
  std::size_t psi_count = 10, x_count = 8, triple_count = 50;
  std::string g = "(y1 - 0.5) * w1^2", h = "0";
  std::size_t trials = 20;
  std::size_t max_iters = 500;
  double step0 = 1.0, grad_tol = 1e-7;
  std::string u0 = "0";
  std::string id;
  bool list = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double parse_real(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("invalid ") + what + " '" + s + "'");
  }
}

std::vector<double> parse_reals(const std::string& s, const char* what) {
  std::vector<double> v;
  for (const auto& part : split(s, ',')) v.push_back(parse_real(part, what));
  return v;
}

double parse_p(const std::string& s) {
  if (s == "inf" || s == "infinity") return INFINITY;
  const double p = parse_real(s, "--p");
  if (!(p >= 1.0)) throw UsageError("--p must be >= 1 or inf");
  return p;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Minimal line plot: one polyline per series, scaled into a fixed frame.
std::string svg_plot(const std::string& title, const std::vector<double>& xs,
                     const std::vector<std::vector<double>>& series) {
  const double W = 480, H = 320, pad = 40;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (double x : xs) x0 = std::min(x0, x), x1 = std::max(x1, x);
  for (const auto& s : series) {
    for (double y : s) {
      if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
  auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
    << "\" fill=\"none\" stroke=\"#888\"/>\n";
  o << "<text x=\"" << pad << "\" y=\"" << pad - 12 << "\" font-size=\"13\">" << title << "</text>\n";
  o << "<text x=\"4\" y=\"" << pad << "\" font-size=\"10\">" << y1 << "</text>\n";
  o << "<text x=\"4\" y=\"" << H - pad << "\" font-size=\"10\">" << y0 << "</text>\n";
  o << "<text x=\"" << pad << "\" y=\"" << H - pad + 14 << "\" font-size=\"10\">" << x0 << "</text>\n";
  o << "<text x=\"" << W - pad - 30 << "\" y=\"" << H - pad + 14 << "\" font-size=\"10\">" << x1 << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    o << "<polyline fill=\"none\" stroke=\"" << colours[k % 4] << "\" points=\"";
    for (std::size_t i = 0; i < xs.size() && i < series[k].size(); ++i) {
      if (std::isfinite(series[k][i])) o << px(xs[i]) << "," << py(series[k][i]) << " ";
    }
    o << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), o_(o) {
    start_ = std::chrono::steady_clock::now();
    if (!o_.out.empty()) fs::create_directories(o_.out);
  }

  void input(const std::string& key, json value) { inputs_[key] = std::move(value); }
  void result(const std::string& key, json value) { results_[key] = std::move(value); }

  void artifact(const std::string& name, const std::string& content) {
    if (o_.out.empty()) return;
    std::ofstream f(fs::path(o_.out) / name, std::ios::binary);
    f << content;
    if (!f) throw ApiError(NLF_ERR_IO, "cannot write " + name);
    artifacts_.push_back(name);
  }

  int finish(int code) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json report;
    report["command"] = command_;
    report["inputs"] = inputs_;
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a(command_ + inputs_.dump())));
    report["inputs_digest"] = digest;
    report["seed"] = o_.seed;
    report["results"] = results_;
    report["artifacts"] = artifacts_;
    report["exit_code"] = code;
    report["version"] = nlf_version();
    report["wall_time"] = secs;
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!o_.out.empty()) {
      std::ofstream f(fs::path(o_.out) / "report.json", std::ios::binary);
      f << text;
    }
    return code;
  }

 private:
  std::string command_;
  const Options& o_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::object();
  json results_ = json::object();
  json artifacts_ = json::array();
};

// ---- resource helpers

Fn make_integrand(const Options& o) {
  if (o.f.empty()) throw UsageError("--f is required");
  std::size_t m = 0;
  if (!o.domain.empty()) m = split(o.domain, ';').size();
  nlf_integrand* f = nullptr;
  check(nlf_integrand_create(o.f.c_str(), o.f.rfind("builtin:", 0) == 0 ? 0 : m, 0, &f));
  return Fn(f);
}

std::string domain_for(const Options& o, const nlf_integrand* f) {
  if (!o.domain.empty()) return o.domain;
  if (!f) return "0,1";
  return take([&] {
    char* d = nullptr;
    check(nlf_integrand_domain(f, &d));
    return d;
  }());
}

Grid make_grid(const Options& o, const std::string& domain) {
  std::vector<std::size_t> counts;
  for (const auto& part : split(o.grid, ',')) {
    const double v = parse_real(part, "--grid");
    if (!(v >= 1) || v != std::floor(v)) throw UsageError("--grid expects positive integers");
    counts.push_back(static_cast<std::size_t>(v));
  }
  if (counts.empty()) throw UsageError("--grid is empty");
  nlf_grid* g = nullptr;
  check(nlf_grid_create(domain.c_str(), counts.data(), counts.size(), &g));
  return Grid(g);
}

U field(const nlf_grid* grid, const std::string& exprs, double p) {
  const auto parts = split(exprs, ';');
  std::vector<const char*> ptrs;
  for (const auto& s : parts) ptrs.push_back(s.c_str());
  if (ptrs.empty()) throw UsageError("empty field expression");
  nlf_gridfn* u = nullptr;
  check(nlf_gridfn_from_exprs(grid, ptrs.data(), ptrs.size(), p, &u));
  return U(u);
}

// Constant-per-component field broadcast to n components when a single
// expression is given for a vector integrand.
U field_n(const nlf_grid* grid, const std::string& exprs, std::size_t n, double p) {
  auto parts = split(exprs, ';');
  if (parts.size() == 1 && n > 1) {
    std::string joined = parts[0];
    for (std::size_t c = 1; c < n; ++c) joined += ";" + parts[0];
    return field(grid, joined, p);
  }
  return field(grid, exprs, p);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ApiError(NLF_ERR_IO, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void common_inputs(Run& run, const Options& o, const std::string& domain) {
  run.input("f", o.f);
  run.input("grid", o.grid);
  run.input("domain", domain);
  run.input("p", o.p);
}

// ---- subcommands

int cmd_eval(const Options& o) {
  Run run("eval", o);
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  Grid grid = make_grid(o, dom);
  common_inputs(run, o, dom);
  const double p = parse_p(o.p);
  U u;
  if (!o.u_csv.empty()) {
    nlf_gridfn* raw = nullptr;
    check(nlf_gridfn_from_csv(grid.get(), read_file(o.u_csv).c_str(), p, &raw));
    u.reset(raw);
    run.input("u_csv", o.u_csv);
  } else {
    const std::string expr = o.u.empty() ? "0" : o.u;
    u = field_n(grid.get(), expr, nlf_integrand_dim_n(f.get()), p);
    run.input("u", expr);
  }
  char* js = nullptr;
  check(nlf_evaluate(f.get(), u.get(), nullptr, &js));
  run.result("functional", take_json(js));
  return run.finish(kExitOk);
}

int cmd_phi(const Options& o) {
  Run run("phi", o);
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  Grid grid = make_grid(o, dom);
  common_inputs(run, o, dom);
  const std::size_t n = nlf_integrand_dim_n(f.get()), m = nlf_integrand_dim_m(f.get());
  U psi = field_n(grid.get(), o.psi, n, parse_p(o.p));
  std::vector<double> x;
  if (o.x.empty()) {
    for (const auto& axis : split(dom, ';')) {
      const auto b = parse_reals(axis, "--domain");
      x.push_back(0.5 * (b[0] + b[1]));
    }
  } else {
    x = parse_reals(o.x, "--x");
  }
  if (x.size() != m) throw UsageError("--x needs one coordinate per axis");
  const auto range = parse_reals(o.w_range, "--w-range");
  if (range.size() != 2 || !(range[0] < range[1]) || o.w_count < 2) throw UsageError("bad --w-range/--w-count");
  // Profile along w1 with the remaining components held at zero.
  std::vector<double> ws(o.w_count * n, 0.0), t(o.w_count);
  for (std::size_t k = 0; k < o.w_count; ++k) {
    t[k] = range[0] + (range[1] - range[0]) * static_cast<double>(k) / static_cast<double>(o.w_count - 1);
    ws[k * n] = t[k];
  }
  char* csv = nullptr;
  check(nlf_phi_profile(f.get(), x.data(), psi.get(), ws.data(), o.w_count, &csv));
  const std::string text = take(csv);
  std::vector<double> values;
  for (const auto& line : split(text, '\n')) {
    if (line.empty() || line[0] == 'w') continue;
    values.push_back(parse_real(split(line, ',').back(), "phi value"));
  }
  run.input("psi", o.psi);
  run.input("x", x);
  run.input("w_range", range);
  run.input("w_count", o.w_count);
  json vals = json::array();
  for (double v : values) vals.push_back(v);
  run.result("phi", vals);
  run.artifact("phi.csv", text);
  run.artifact("phi.svg", svg_plot("phi along w1", t, {values}));
  return run.finish(kExitOk);
}

int cmd_check(const Options& o) {
  Run run("check " + o.kind, o);
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  common_inputs(run, o, dom);
  run.input("samples", o.samples);
  int refuted = 0;
  char* js = nullptr;
  const double p = parse_p(o.p);
  if (o.kind == "symmetry") {
    check(nlf_check_symmetry(f.get(), dom.c_str(), o.samples, o.seed, &refuted, &js));
  } else if (o.kind == "homogeneous-bound") {
    run.input("M", o.M);
    check(nlf_check_homogeneous_bound(f.get(), p, o.M, o.samples, o.seed, &refuted, &js));
  } else if (o.kind == "p-bound") {
    Grid grid = make_grid(o, dom);
    run.input("M", o.M);
    run.input("alpha", o.alpha);
    run.input("beta", o.beta);
    run.input("C", o.C);
    check(nlf_check_p_bound(f.get(), grid.get(), o.alpha, o.beta, o.C, o.M, p, o.samples, o.seed, &refuted, &js));
  } else if (o.kind == "sep-convex") {
    run.input("value_bound", o.value_bound);
    check(nlf_check_separately_convex(f.get(), dom.c_str(), o.value_bound, o.samples, o.seed, &refuted, &js));
  } else if (o.kind == "phi-convex") {
    Grid grid = make_grid(o, dom);
    run.input("psi_count", o.psi_count);
    run.input("x_count", o.x_count);
    run.input("triple_count", o.triple_count);
    check(nlf_check_phi_convex(f.get(), grid.get(), o.psi_count, o.x_count, o.triple_count, o.seed, &refuted,
                               &js));
  } else if (o.kind == "wlsc") {
    nlf_wlsc_outcome outcome = NLF_WLSC_INCONCLUSIVE;
    const std::size_t nodes = static_cast<std::size_t>(parse_real(split(o.grid, ',')[0], "--grid"));
    check(nlf_wlsc_verdict(f.get(), dom.c_str(), p, nodes, o.samples, o.seed, &outcome, &js));
    refuted = outcome == NLF_WLSC_REFUTED;
  } else {
    throw UsageError("unknown check '" + o.kind + "'");
  }
  run.result("verdict", take_json(js));
  return run.finish(refuted ? kExitRefuted : kExitOk);
}

std::string unit_square_box(const std::string& E) {
  if (E == "unit-square") return "0,1|0,1";
  return E;
}

int cmd_witness(const Options& o) {
  Run run("witness " + o.kind, o);
  if (o.kind == "checkerboard") {
    // --E "x-box|y-box", each box "lo,hi;lo,hi"; several boxes separated by '+'.
    std::vector<double> flat;
    std::size_t m = 0, count = 0;
    for (const auto& box : split(unit_square_box(o.E), '+')) {
      const auto halves = split(box, '|');
      if (halves.size() != 2) throw UsageError("--E box must be 'x-box|y-box'");
      const auto xa = split(halves[0], ';'), ya = split(halves[1], ';');
      if (xa.size() != ya.size() || (m && xa.size() != m)) throw UsageError("--E boxes need matching dimensions");
      m = xa.size();
      for (const auto* axes : {&xa, &ya}) {
        for (const auto& a : *axes) {
          const auto b = parse_reals(a, "--E");
          if (b.size() != 2) throw UsageError("--E axis must be 'lo,hi'");
          flat.insert(flat.end(), b.begin(), b.end());
        }
      }
      ++count;
    }
    double fraction = 0.0;
    check(nlf_checkerboard_coverage(flat.data(), count, m, o.delta, o.resolution, &fraction));
    run.input("E", o.E);
    run.input("delta", o.delta);
    run.input("resolution", o.resolution);
    run.result("coverage_fraction", fraction);
    run.result("quarter_gap", 0.25 - fraction);
    return run.finish(kExitOk);
  }
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  common_inputs(run, o, dom);
  const double p = parse_p(o.p);
  if (o.kind == "oscillation") {
    Grid grid = make_grid(o, dom);
    const std::size_t n = nlf_integrand_dim_n(f.get());
    U w1 = field_n(grid.get(), o.omega1, n, p), w2 = field_n(grid.get(), o.omega2, n, p);
    int violated = 0;
    char *js = nullptr, *csv = nullptr;
    check(nlf_probe_oscillation(f.get(), o.theta, w1.get(), w2.get(), o.k_max, &violated, &js, &csv));
    run.input("theta", o.theta);
    run.input("omega1", o.omega1);
    run.input("omega2", o.omega2);
    run.input("k_max", o.k_max);
    json r = take_json(js);
    run.result("probe", r);
    run.artifact("probe.csv", take(csv));
    std::vector<double> ks, Js;
    for (std::size_t k = 0; k < r["J_values"].size(); ++k) {
      ks.push_back(static_cast<double>(k + 1));
      Js.push_back(r["J_values"][k].is_number() ? r["J_values"][k].get<double>() : NAN);
    }
    run.artifact("probe.svg", svg_plot("J(u_k)", ks, {Js}));
    return run.finish(violated ? kExitRefuted : kExitOk);
  }
  if (o.kind == "integrability") {
    const auto a = split(o.phi_field, ';'), b = split(o.psi_field, ';');
    const std::size_t n = nlf_integrand_dim_n(f.get());
    if (a.size() != n || b.size() != n) throw UsageError("--phi/--psi need one expression per component");
    std::vector<const char*> pa, pb;
    for (const auto& s : a) pa.push_back(s.c_str());
    for (const auto& s : b) pb.push_back(s.c_str());
    int found = 0;
    nlf_gridfn* u = nullptr;
    char* js = nullptr;
    check(nlf_witness_integrability(f.get(), dom.c_str(), pa.data(), pb.data(), o.base_nodes, o.max_nodes, &found,
                                    &u, &js));
    U owner(u);
    run.input("phi", o.phi_field);
    run.input("psi", o.psi_field);
    run.result("witness", take_json(js));
    if (u) {
      char* csv = nullptr;
      check(nlf_gridfn_to_csv(u, &csv));
      run.artifact("u.csv", take(csv));
    }
    return run.finish(found ? kExitRefuted : kExitOk);
  }
  if (o.kind == "homogeneous") {
    int found = 0;
    nlf_gridfn* u = nullptr;
    char* js = nullptr;
    check(nlf_witness_homogeneous(f.get(), dom.c_str(), p, o.M, o.blocks, o.nodes, o.seed, &found, &u, &js));
    U owner(u);
    run.input("M", o.M);
    run.input("blocks", o.blocks);
    run.input("nodes", o.nodes);
    json r = take_json(js);
    run.result("witness", r);
    std::vector<double> ks, Js;
    for (std::size_t k = 0; k < r["truncated_J"].size(); ++k) {
      ks.push_back(static_cast<double>(k + 1));
      Js.push_back(r["truncated_J"][k].is_number() ? r["truncated_J"][k].get<double>() : NAN);
    }
    run.artifact("truncated_J.svg", svg_plot("J of the first K blocks", ks, {Js}));
    if (u) {
      char* csv = nullptr;
      check(nlf_gridfn_to_csv(u, &csv));
      run.artifact("u.csv", take(csv));
    }
    return run.finish(found ? kExitRefuted : kExitOk);
  }
  throw UsageError("unknown witness '" + o.kind + "'");
}

int cmd_probe(const Options& o) {
  Run run("probe", o);
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  Grid grid = make_grid(o, dom);
  common_inputs(run, o, dom);
  const std::size_t n = nlf_integrand_dim_n(f.get());
  const double p = parse_p(o.p);
  int violated = 0;
  char *js = nullptr, *csv = nullptr;
  run.input("plan", o.plan);
  run.input("k_max", o.k_max);
  if (o.plan == "oscillation") {
    U w1 = field_n(grid.get(), o.omega1, n, p), w2 = field_n(grid.get(), o.omega2, n, p);
    run.input("theta", o.theta);
    run.input("omega1", o.omega1);
    run.input("omega2", o.omega2);
    check(nlf_probe_oscillation(f.get(), o.theta, w1.get(), w2.get(), o.k_max, &violated, &js, &csv));
  } else if (o.plan == "scalar-shrink" || o.plan == "strong") {
    U lim = field_n(grid.get(), o.limit, n, p), dir = field_n(grid.get(), o.direction, n, p);
    run.input("limit", o.limit);
    run.input("direction", o.direction);
    check(nlf_probe_shift(f.get(), o.plan.c_str(), lim.get(), dir.get(), o.k_max, &violated, &js, &csv));
  } else {
    throw UsageError("unknown --plan '" + o.plan + "'");
  }
  json r = take_json(js);
  run.result("probe", r);
  run.artifact("probe.csv", take(csv));
  std::vector<double> ks, Js, lim;
  for (std::size_t k = 0; k < r["J_values"].size(); ++k) {
    ks.push_back(static_cast<double>(k + 1));
    Js.push_back(r["J_values"][k].is_number() ? r["J_values"][k].get<double>() : NAN);
    lim.push_back(r["J_limit"].is_number() ? r["J_limit"].get<double>() : NAN);
  }
  run.artifact("probe.svg", svg_plot("J(u_k) and J(limit)", ks, {Js, lim}));
  return run.finish(violated ? kExitRefuted : kExitOk);
}

int cmd_decompose(const Options& o) {
  Run run("decompose", o);
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  Grid grid = make_grid(o, dom);
  common_inputs(run, o, dom);
  const auto range = parse_reals(o.w_range, "--w-range");
  if (range.size() != 2) throw UsageError("--w-range must be lo,hi");
  run.input("w_range", range);
  run.input("w_count", o.w_count);
  char *js = nullptr, *g = nullptr, *h = nullptr;
  const nlf_status s = nlf_decompose(f.get(), grid.get(), range[0], range[1], o.w_count, &js, &g, &h);
  if (s == NLF_ERR_PHI_NONCONVEX) {
    // A mathematical outcome rather than a tool failure.
    run.result("outcome", "phi-nonconvex");
    run.result("detail", nlf_last_error());
    return run.finish(kExitRefuted);
  }
  check(s);
  run.result("outcome", "decomposed");
  run.result("decomposition", take_json(js));
  run.artifact("g.csv", take(g));
  run.artifact("h.csv", take(h));
  return run.finish(kExitOk);
}

int cmd_nullclass(const Options& o) {
  Run run("nullclass", o);
  const std::string dom = o.domain.empty() ? "0,1" : o.domain;
  Grid grid = make_grid(o, dom);
  const auto range = parse_reals(o.w_range, "--w-range");
  if (range.size() != 2) throw UsageError("--w-range must be lo,hi");
  run.input("g", o.g);
  run.input("h", o.h);
  run.input("grid", o.grid);
  run.input("domain", dom);
  run.input("w_range", range);
  run.input("w_count", o.w_count);
  run.input("trials", o.trials);
  int refuted = 0;
  char* js = nullptr;
  check(nlf_nullclass(o.g.c_str(), o.h.c_str(), grid.get(), range[0], range[1], o.w_count, o.trials, o.seed,
                      &refuted, &js));
  run.result("verdict", take_json(js));
  return run.finish(refuted ? kExitRefuted : kExitOk);
}

int cmd_minimize(const Options& o) {
  Run run("minimize", o);
  Fn f = make_integrand(o);
  const std::string dom = domain_for(o, f.get());
  Grid grid = make_grid(o, dom);
  common_inputs(run, o, dom);
  U u0 = field_n(grid.get(), o.u0, nlf_integrand_dim_n(f.get()), parse_p(o.p));
  nlf_minimize_config cfg;
  nlf_minimize_config_default(&cfg);
  cfg.max_iters = o.max_iters;
  cfg.step0 = o.step0;
  cfg.grad_tol = o.grad_tol;
  if (o.M_set) {
    cfg.use_box = 1;
    cfg.box_lo = -o.M;
    cfg.box_hi = o.M;
    run.input("M", o.M);
  }
  run.input("u0", o.u0);
  run.input("max_iters", o.max_iters);
  run.input("step0", o.step0);
  run.input("grad_tol", o.grad_tol);
  nlf_gridfn* u = nullptr;
  char *js = nullptr, *trace = nullptr;
  check(nlf_minimize(f.get(), u0.get(), &cfg, &u, nullptr, &js, &trace));
  U owner(u);
  run.result("minimize", take_json(js));
  const std::string tr = take(trace);
  run.artifact("trace.csv", tr);
  std::vector<double> it, Js;
  for (const auto& line : split(tr, '\n')) {
    if (line.empty() || line[0] == 'i') continue;
    const auto cols = split(line, ',');
    it.push_back(parse_real(cols[0], "trace"));
    Js.push_back(parse_real(cols[1], "trace"));
  }
  run.artifact("trace.svg", svg_plot("J per iteration", it, {Js}));
  char* csv = nullptr;
  check(nlf_gridfn_to_csv(u, &csv));
  run.artifact("u_star.csv", take(csv));
  return run.finish(kExitOk);
}

int cmd_repro(const Options& o) {
  if (o.list) {
    char* js = nullptr;
    check(nlf_repro_list(&js));
    std::cout << take_json(js).dump(2) << "\n";
    return kExitOk;
  }
  if (o.id.empty()) throw UsageError("repro needs an id (or --list)");
  Run run("repro " + o.id, o);
  run.input("id", o.id);
  int matches = 0, adverse = 0;
  char* js = nullptr;
  check(nlf_repro(o.id.c_str(), &matches, &adverse, &js));
  run.result("repro", take_json(js));
  return run.finish(matches && !adverse ? kExitOk : kExitRefuted);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical toolkit for non-local integral functionals"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nlf_version()));
  Options o;

  auto common = [&](CLI::App* sub, bool needs_f) {
    auto* fopt = sub->add_option("--f", o.f, "integrand expression or builtin:<name>");
    if (needs_f) fopt->required();
    sub->add_option("--grid", o.grid, "nodes per axis, N[,N...]");
    sub->add_option("--domain", o.domain, "box lo,hi[;lo,hi...] (default: the integrand's)");
    sub->add_option("--p", o.p, "exponent: 1, 2, ..., inf");
    sub->add_option_function<double>(
        "--M", [&](double v) { o.M = v, o.M_set = true; }, "bound M (box constraint for minimize)");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--out", o.out, "output directory for report.json and plot data");
    sub->add_option("--threads", o.threads, "worker thread cap");
    sub->add_option("--samples", o.samples, "sample budget for randomized checks");
  };

  auto* eval = app.add_subcommand("eval", "evaluate J(u)");
  common(eval, true);
  eval->add_option("--u", o.u, "u as expressions in x1..xm, one per component separated by ';'");
  eval->add_option("--u-csv", o.u_csv, "u from a CSV file with header x1..xm,u1..un");

  auto* phi = app.add_subcommand("phi", "profile of Phi along w1");
  common(phi, true);
  phi->add_option("--psi", o.psi, "psi as expressions in x1..xm");
  phi->add_option("--x", o.x, "base point x (default: domain centre)");
  phi->add_option("--w-range", o.w_range, "lo,hi");
  phi->add_option("--w-count", o.w_count, "number of w samples");

  auto* chk = app.add_subcommand("check", "property checks");
  common(chk, true);
  chk->add_option("kind", o.kind, "symmetry | homogeneous-bound | p-bound | sep-convex | phi-convex | wlsc")
      ->required()
      ->check(CLI::IsMember({"symmetry", "homogeneous-bound", "p-bound", "sep-convex", "phi-convex", "wlsc"}));
  chk->add_option("--alpha", o.alpha, "p-bound certificate alpha");
  chk->add_option("--beta", o.beta, "p-bound certificate beta");
  chk->add_option("--C", o.C, "p-bound certificate C");
  chk->add_option("--value-bound", o.value_bound, "sep-convex: draw w, z from [-b, b]");
  chk->add_option("--psi-count", o.psi_count, "phi-convex: number of random psi");
  chk->add_option("--x-count", o.x_count, "phi-convex: number of x samples");
  chk->add_option("--triple-count", o.triple_count, "phi-convex: number of (w1, w2, theta) triples");

  auto* wit = app.add_subcommand("witness", "constructive witnesses");
  common(wit, false);
  wit->add_option("kind", o.kind, "checkerboard | oscillation | integrability | homogeneous")
      ->required()
      ->check(CLI::IsMember({"checkerboard", "oscillation", "integrability", "homogeneous"}));
  wit->add_option("--delta", o.delta, "checkerboard cube side");
  wit->add_option("--E", o.E, "unit-square or 'x-box|y-box' boxes joined by '+'");
  wit->add_option("--resolution", o.resolution, "cells per axis and box");
  wit->add_option("--theta", o.theta, "stripe fraction assigned to omega1");
  wit->add_option("--omega1", o.omega1, "first oscillation profile (expressions)");
  wit->add_option("--omega2", o.omega2, "second oscillation profile (expressions)");
  wit->add_option("--k-max", o.k_max, "last sequence index");
  wit->add_option("--phi", o.phi_field, "phi expressions for integrability");
  wit->add_option("--psi", o.psi_field, "psi expressions for integrability");
  wit->add_option("--base-nodes", o.base_nodes, "integrability: nodes per axis at the coarsest level");
  wit->add_option("--max-nodes", o.max_nodes, "integrability: nodes per axis at the finest level");
  wit->add_option("--blocks", o.blocks, "homogeneous: number of blocks");
  wit->add_option("--nodes", o.nodes, "total grid nodes for the homogeneous witness");

  auto* probe = app.add_subcommand("probe", "lower semicontinuity probe along a sequence");
  common(probe, true);
  probe->add_option("--plan", o.plan, "scalar-shrink | strong | oscillation");
  probe->add_option("--limit", o.limit, "declared limit (expressions)");
  probe->add_option("--direction", o.direction, "shift direction d in limit + d/k or d/k^2");
  probe->add_option("--theta", o.theta, "stripe fraction assigned to omega1");
  probe->add_option("--omega1", o.omega1, "first oscillation profile (expressions)");
  probe->add_option("--omega2", o.omega2, "second oscillation profile (expressions)");
  probe->add_option("--k-max", o.k_max, "last sequence index");

  auto* dec = app.add_subcommand("decompose", "separately convex decomposition tables");
  common(dec, true);
  dec->add_option("--w-range", o.w_range, "w-grid interval lo,hi");
  dec->add_option("--w-count", o.w_count, "w-grid points");

  auto* nul = app.add_subcommand("nullclass", "check a null-class candidate g, h");
  nul->set_help_flag("--help", "print this help message and exit");
  common(nul, false);
  nul->add_option("--g", o.g, "g(x, y, w) expression");
  nul->add_option("--h", o.h, "h(x, y) expression");
  nul->add_option("--w-range", o.w_range, "w-grid interval lo,hi");
  nul->add_option("--w-count", o.w_count, "w-grid points");
  nul->add_option("--trials", o.trials, "random u trials");

  auto* mini = app.add_subcommand("minimize", "projected gradient descent");
  common(mini, true);
  mini->add_option("--u0", o.u0, "starting point expressions");
  mini->add_option("--max-iters", o.max_iters, "iteration cap");
  mini->add_option("--step0", o.step0, "initial Armijo step");
  mini->add_option("--grad-tol", o.grad_tol, "projected gradient tolerance");

  auto* rep = app.add_subcommand("repro", "reproduce a worked example");
  common(rep, false);
  rep->add_option("id", o.id, "example id");
  rep->add_flag("--list", o.list, "list example ids");

  // The default w-grid for decompose and nullclass is coarser than phi's.
  dec->preparse_callback([&](std::size_t) { o.w_count = 33; });
  nul->preparse_callback([&](std::size_t) { o.w_count = 33; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (o.threads) nlf_set_threads(o.threads);
  try {
    if (*eval) return cmd_eval(o);
    if (*phi) return cmd_phi(o);
    if (*chk) return cmd_check(o);
    if (*wit) return cmd_witness(o);
    if (*probe) return cmd_probe(o);
    if (*dec) return cmd_decompose(o);
    if (*nul) return cmd_nullclass(o);
    if (*mini) return cmd_minimize(o);
    if (*rep) return cmd_repro(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
