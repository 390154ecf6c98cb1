#include "nlf/domain_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nlf/error.hpp"
#include "nlf/summation.hpp"

namespace nlf {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const char* what) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return Exponent::kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("cannot parse ") + what + ": '" + text + "'");
  }
  if (used != t.size()) {
    throw Error(ErrorCode::kInvalidArgument, std::string("cannot parse ") + what + ": '" + text + "'");
  }
  return v;
}

}  // namespace

Exponent::Exponent(double p) : p_(p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "exponent p must lie in [1, inf]");
}

Exponent Exponent::parse(const std::string& text) { return Exponent(parse_double(text, "exponent")); }

double Exponent::conjugate() const {
  if (is_infinite()) return 1.0;
  if (p_ == 1.0) return kInf;
  return p_ / (p_ - 1.0);
}

std::string Exponent::to_string() const { return is_infinite() ? "inf" : fmt_double(p_); }

Domain::Domain(std::vector<Interval> box, MaskFn mask) : box_(std::move(box)), mask_(std::move(mask)) {
  if (box_.empty()) throw Error(ErrorCode::kInvalidDomain, "domain needs at least one axis");
  for (std::size_t j = 0; j < box_.size(); ++j) {
    const auto& iv = box_[j];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.lo < iv.hi)) {
      throw Error(ErrorCode::kInvalidDomain,
                  "degenerate box on axis " + std::to_string(j + 1) + ": (" + fmt_double(iv.lo) + ", " +
                      fmt_double(iv.hi) + ")");
    }
  }
}

Domain Domain::unit(std::size_t m) { return Domain(std::vector<Interval>(m, Interval{0.0, 1.0})); }

Domain Domain::parse(const std::string& text) {
  std::vector<Interval> box;
  for (const auto& part : split(text, ';')) {
    const auto bounds = split(part, ',');
    if (bounds.size() != 2) {
      throw Error(ErrorCode::kInvalidArgument, "domain axis must be 'lo,hi', got '" + part + "'");
    }
    box.push_back({parse_double(bounds[0], "domain bound"), parse_double(bounds[1], "domain bound")});
  }
  return Domain(std::move(box));
}

bool Domain::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < box_.size(); ++j) {
    if (!(x[j] > box_[j].lo && x[j] < box_[j].hi)) return false;
  }
  return !mask_ || mask_(x);
}

double Domain::box_volume() const {
  double v = 1.0;
  for (const auto& iv : box_) v *= iv.length();
  return v;
}

double Domain::measure(std::size_t resolution) const {
  if (resolution == 0) throw Error(ErrorCode::kInvalidArgument, "measure resolution must be >= 1");
  if (!mask_) return box_volume();
  const std::size_t m = dim();
  std::size_t total = 1;
  for (std::size_t j = 0; j < m; ++j) total *= resolution;
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> x(m);
  std::size_t inside = 0;
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    for (std::size_t j = m; j-- > 0;) {
      idx[j] = rem % resolution;
      rem /= resolution;
      x[j] = box_[j].lo + (static_cast<double>(idx[j]) + 0.5) * box_[j].length() / static_cast<double>(resolution);
    }
    if (mask_(x)) ++inside;
  }
  return box_volume() * static_cast<double>(inside) / static_cast<double>(total);
}

std::string Domain::to_string() const {
  std::string s;
  for (std::size_t j = 0; j < box_.size(); ++j) {
    if (j) s += ';';
    s += fmt_double(box_[j].lo) + ',' + fmt_double(box_[j].hi);
  }
  if (mask_) s += " (masked)";
  return s;
}

Grid::Grid(Domain domain, std::vector<std::size_t> nodes_per_axis)
    : domain_(std::move(domain)), nodes_per_axis_(std::move(nodes_per_axis)) {
  const std::size_t m = domain_.dim();
  if (nodes_per_axis_.size() == 1 && m > 1) nodes_per_axis_.assign(m, nodes_per_axis_[0]);
  if (nodes_per_axis_.size() != m) {
    throw Error(ErrorCode::kInvalidArgument, "nodes_per_axis needs one entry per axis");
  }
  std::size_t total = 1;
  weight_ = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (nodes_per_axis_[j] == 0) throw Error(ErrorCode::kInvalidArgument, "nodes per axis must be >= 1");
    total *= nodes_per_axis_[j];
    weight_ *= cell_width(j);
  }
  lookup_.assign(total, -1);
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> x(m);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    for (std::size_t j = m; j-- > 0;) {
      idx[j] = rem % nodes_per_axis_[j];
      rem /= nodes_per_axis_[j];
      x[j] = domain_.axis(j).lo + (static_cast<double>(idx[j]) + 0.5) * cell_width(j);
    }
    if (domain_.has_mask() && !domain_.contains(x)) continue;
    lookup_[c] = static_cast<std::ptrdiff_t>(cell_index_.size() / m);
    coords_.insert(coords_.end(), x.begin(), x.end());
    cell_index_.insert(cell_index_.end(), idx.begin(), idx.end());
  }
  if (cell_index_.empty()) throw Error(ErrorCode::kInvalidDomain, "mask leaves no grid cell");
}

std::size_t Grid::locate(std::span<const double> x) const {
  const std::size_t m = dim();
  std::size_t linear = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double t = (x[j] - domain_.axis(j).lo) / cell_width(j);
    auto k = static_cast<std::ptrdiff_t>(std::floor(t));
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(nodes_per_axis_[j]) - 1);
    linear = linear * nodes_per_axis_[j] + static_cast<std::size_t>(k);
  }
  if (lookup_[linear] >= 0) return static_cast<std::size_t>(lookup_[linear]);
  // masked cell: fall back to the nearest unmasked node
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < m; ++j) d += (node(i)[j] - x[j]) * (node(i)[j] - x[j]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::string Grid::describe() const {
  std::string s = domain_.to_string() + " nodes=";
  for (std::size_t j = 0; j < nodes_per_axis_.size(); ++j) {
    if (j) s += 'x';
    s += std::to_string(nodes_per_axis_[j]);
  }
  return s;
}

GridPtr build_grid(const Domain& domain, std::vector<std::size_t> nodes_per_axis) {
  return std::make_shared<const Grid>(domain, std::move(nodes_per_axis));
}

GridFunction::GridFunction(GridPtr grid, std::size_t n, std::vector<double> values, Exponent p)
    : grid_(std::move(grid)), n_(n), values_(std::move(values)), p_(p) {
  if (!grid_) throw Error(ErrorCode::kInvalidArgument, "grid function needs a grid");
  if (n_ == 0) throw Error(ErrorCode::kInvalidArgument, "codomain dimension must be >= 1");
  if (values_.size() != grid_->size() * n_) {
    throw Error(ErrorCode::kInvalidArgument, "grid function has " + std::to_string(values_.size()) +
                                                 " values, expected " + std::to_string(grid_->size() * n_));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "grid function values must be finite");
  }
}

GridFunction GridFunction::constant(GridPtr grid, std::span<const double> value, Exponent p) {
  std::vector<double> vals;
  vals.reserve(grid->size() * value.size());
  for (std::size_t i = 0; i < grid->size(); ++i) vals.insert(vals.end(), value.begin(), value.end());
  return GridFunction(std::move(grid), value.size(), std::move(vals), p);
}

GridFunction GridFunction::from_fn(GridPtr grid, std::size_t n,
                                   const std::function<void(std::span<const double>, std::span<double>)>& fn,
                                   Exponent p) {
  std::vector<double> vals(grid->size() * n);
  for (std::size_t i = 0; i < grid->size(); ++i) fn(grid->node(i), std::span<double>(vals.data() + i * n, n));
  return GridFunction(std::move(grid), n, std::move(vals), p);
}

GridFunction GridFunction::scaled(double c) const {
  std::vector<double> vals(values_);
  for (double& v : vals) v *= c;
  return GridFunction(grid_, n_, std::move(vals), p_);
}

GridFunction GridFunction::with_values(std::vector<double> values) const {
  return GridFunction(grid_, n_, std::move(values), p_);
}

double euclidean_norm(std::span<const double> w) {
  if (w.size() == 1) return std::abs(w[0]);
  double s = 0.0;
  for (double v : w) s += v * v;
  return std::sqrt(s);
}

ExtReal p_function(std::span<const double> w, Exponent p, double M) {
  if (!(M > 0.0)) throw Error(ErrorCode::kInvalidArgument, "p_function needs M > 0");
  const double r = euclidean_norm(w);
  if (p.is_infinite()) return r > M ? ExtReal::infinity() : ExtReal(0.0);
  if (p.value() == 1.0) return r;
  if (p.value() == 2.0) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return s;
  }
  return std::pow(r, p.value());
}

ExtReal integrated_p_function(const GridFunction& u, double M) {
  CompensatedSum s;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const ExtReal v = p_function(u.at(i), u.p(), M);
    if (v.is_infinite()) return ExtReal::infinity();
    s.add(u.grid().weight() * v.value());
  }
  return s.value();
}

ExtReal lp_norm(const GridFunction& u) {
  if (u.p().is_infinite()) {
    double mx = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) mx = std::max(mx, euclidean_norm(u.at(i)));
    return mx;
  }
  // M is irrelevant for finite p
  const double integral = integrated_p_function(u, 1.0).value();
  if (u.p().value() == 1.0) return integral;
  if (u.p().value() == 2.0) return std::sqrt(integral);
  return std::pow(integral, 1.0 / u.p().value());
}

std::string to_csv(const GridFunction& u) {
  std::ostringstream os;
  const std::size_t m = u.grid().dim();
  for (std::size_t j = 0; j < m; ++j) os << (j ? "," : "") << 'x' << (j + 1);
  for (std::size_t c = 0; c < u.n(); ++c) os << ",u" << (c + 1);
  os << '\n';
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto x = u.grid().node(i);
    for (std::size_t j = 0; j < m; ++j) os << (j ? "," : "") << fmt_double(x[j]);
    for (double v : u.at(i)) os << ',' << fmt_double(v);
    os << '\n';
  }
  return os.str();
}

GridFunction grid_function_from_csv(GridPtr grid, const std::string& text, Exponent p) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kIo, "grid function CSV is empty");
  const auto header = split(trim(line), ',');
  const std::size_t m = grid->dim();
  if (header.size() <= m) throw Error(ErrorCode::kIo, "grid function CSV header needs x and u columns");
  for (std::size_t j = 0; j < m; ++j) {
    if (trim(header[j]) != "x" + std::to_string(j + 1)) {
      throw Error(ErrorCode::kIo, "grid function CSV header column " + std::to_string(j + 1) + " must be x" +
                                      std::to_string(j + 1));
    }
  }
  const std::size_t n = header.size() - m;
  for (std::size_t c = 0; c < n; ++c) {
    if (trim(header[m + c]) != "u" + std::to_string(c + 1)) {
      throw Error(ErrorCode::kIo, "grid function CSV header column must be u" + std::to_string(c + 1));
    }
  }
  std::vector<double> values;
  values.reserve(grid->size() * n);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != m + n) throw Error(ErrorCode::kIo, "CSV row " + std::to_string(row + 2) + " has wrong width");
    if (row >= grid->size()) throw Error(ErrorCode::kMismatch, "CSV has more rows than grid nodes");
    const auto x = grid->node(row);
    for (std::size_t j = 0; j < m; ++j) {
      const double xv = parse_double(cells[j], "coordinate");
      if (std::abs(xv - x[j]) > 1e-9 * (1.0 + std::abs(x[j]))) {
        throw Error(ErrorCode::kMismatch, "CSV row " + std::to_string(row + 2) + " does not match grid node");
      }
    }
    for (std::size_t c = 0; c < n; ++c) values.push_back(parse_double(cells[m + c], "value"));
    ++row;
  }
  if (row != grid->size()) {
    throw Error(ErrorCode::kMismatch, "CSV has " + std::to_string(row) + " rows, grid has " +
                                          std::to_string(grid->size()) + " nodes");
  }
  return GridFunction(std::move(grid), n, std::move(values), p);
}

}  // namespace nlf
