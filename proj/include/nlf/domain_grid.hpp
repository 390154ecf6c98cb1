#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nlf/ext_real.hpp"

namespace nlf {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

/// Integrability exponent p ∈ [1, ∞].
class Exponent {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  constexpr Exponent() = default;
  explicit Exponent(double p);
  static Exponent infinity() { return Exponent(kInf); }
  /// Accepts "1", "2.5", "inf".
  static Exponent parse(const std::string& text);

  double value() const { return p_; }
  bool is_infinite() const { return p_ == kInf; }
  /// Hölder conjugate p* with 1/p + 1/p* = 1.
  double conjugate() const;
  std::string to_string() const;

 private:
  double p_ = 2.0;
};

using MaskFn = std::function<bool(std::span<const double>)>;

/// Bounded box in R^m, optionally restricted by a per-cell membership test.
class Domain {
 public:
  Domain() = default;
  /// Throws kInvalidDomain when some axis has lo >= hi.
  explicit Domain(std::vector<Interval> box, MaskFn mask = {});

  static Domain unit(std::size_t m);
  /// "lo,hi;lo,hi" (one pair per axis).
  static Domain parse(const std::string& text);

  std::size_t dim() const { return box_.size(); }
  const std::vector<Interval>& box() const { return box_; }
  const Interval& axis(std::size_t j) const { return box_[j]; }
  bool has_mask() const { return static_cast<bool>(mask_); }
  bool contains(std::span<const double> x) const;
  double box_volume() const;

  /// Fraction of a resolution^m midpoint grid passing the mask, times the box
  /// volume. Exact for unmasked boxes.
  double measure(std::size_t resolution) const;

  std::string to_string() const;

 private:
  std::vector<Interval> box_;
  MaskFn mask_;
};

/// Uniform midpoint-rule tensor grid over a Domain. Only unmasked cells carry
/// nodes; every node has the same weight (the cell volume).
class Grid {
 public:
  /// Throws kInvalidArgument for a zero node count, kInvalidDomain for masks
  /// that leave no cell.
  Grid(Domain domain, std::vector<std::size_t> nodes_per_axis);

  const Domain& domain() const { return domain_; }
  std::size_t dim() const { return domain_.dim(); }
  std::size_t size() const { return cell_index_.size() / std::max<std::size_t>(dim(), 1); }
  double weight() const { return weight_; }
  const std::vector<std::size_t>& nodes_per_axis() const { return nodes_per_axis_; }
  std::span<const double> node(std::size_t i) const { return {coords_.data() + i * dim(), dim()}; }
  /// Per-axis cell index of node i.
  std::span<const std::size_t> cell(std::size_t i) const {
    return {cell_index_.data() + i * dim(), dim()};
  }
  double cell_width(std::size_t axis) const {
    return domain_.axis(axis).length() / static_cast<double>(nodes_per_axis_[axis]);
  }
  /// Total quadrature mass Σ weight.
  double mass() const { return weight_ * static_cast<double>(size()); }
  /// Index of the node whose cell contains x (nearest node for points outside).
  std::size_t locate(std::span<const double> x) const;

  std::string describe() const;

 private:
  Domain domain_;
  std::vector<std::size_t> nodes_per_axis_;
  std::vector<double> coords_;
  std::vector<std::size_t> cell_index_;
  std::vector<std::ptrdiff_t> lookup_;  // full-box linear cell -> node, -1 if masked
  double weight_ = 0.0;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(const Domain& domain, std::vector<std::size_t> nodes_per_axis);

/// Sampled u: grid -> R^n with an attached exponent.
class GridFunction {
 public:
  /// values has grid->size()*n entries, node-major. Throws kInvalidArgument on
  /// a size mismatch or non-finite entries.
  GridFunction(GridPtr grid, std::size_t n, std::vector<double> values, Exponent p = Exponent(2.0));

  static GridFunction constant(GridPtr grid, std::span<const double> value, Exponent p = Exponent(2.0));
  static GridFunction from_fn(GridPtr grid, std::size_t n,
                              const std::function<void(std::span<const double>, std::span<double>)>& fn,
                              Exponent p = Exponent(2.0));

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return grid_->size(); }
  Exponent p() const { return p_; }
  std::span<const double> at(std::size_t i) const { return {values_.data() + i * n_, n_}; }
  std::span<const double> values() const { return values_; }

  GridFunction scaled(double c) const;
  GridFunction with_values(std::vector<double> values) const;

 private:
  GridPtr grid_;
  std::size_t n_;
  std::vector<double> values_;
  Exponent p_;
};

/// |w|^p for finite p; for p = ∞ the indicator 0 on |w| <= M, +∞ on |w| > M.
ExtReal p_function(std::span<const double> w, Exponent p, double M);

/// Discrete L^p norm: (Σ weight·|u_i|^p)^{1/p}, or max |u_i| for p = ∞.
ExtReal lp_norm(const GridFunction& u);

/// Σ weight·p_function(u_i, p, M), summed in the same order as lp_norm.
ExtReal integrated_p_function(const GridFunction& u, double M);

double euclidean_norm(std::span<const double> w);

/// CSV with header x1..xm,u1..un and one row per node.
std::string to_csv(const GridFunction& u);
/// Reads a CSV produced by to_csv; node coordinates must match the grid.
GridFunction grid_function_from_csv(GridPtr grid, const std::string& text, Exponent p);

}  // namespace nlf
