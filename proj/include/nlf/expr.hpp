#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nlf {

enum class VarKind : std::uint8_t { kX, kY, kW, kZ };

enum class Op : std::uint8_t {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,  // constant exponent stored in Node::value
  kNeg,
  kAbs,
  kExp,
  kLog,
  kSqrt,
  kMin,
  kMax,
  kStep,  // 1 if t >= 0 else 0
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::kConst;
  double value = 0.0;
  VarKind var = VarKind::kX;
  std::uint32_t index = 0;  // 0-based component
  std::array<NodePtr, 2> args{};
};

/// The four argument slots of an integrand f(x, y, w, z).
struct EvalArgs {
  std::span<const double> x;
  std::span<const double> y;
  std::span<const double> w;
  std::span<const double> z;
};

/// Immutable expression tree over the variables x1..xm, y1..ym, w1..wn, z1..zn.
class Expr {
 public:
  Expr() : root_(constant_node(0.0)) {}
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  const Node& root() const { return *root_; }
  const NodePtr& ptr() const { return root_; }

  static Expr constant(double v) { return Expr(constant_node(v)); }
  static Expr variable(VarKind kind, std::uint32_t index);

  bool depends_on(VarKind kind) const;
  bool is_constant() const { return root_->op == Op::kConst; }
  /// True if an abs/min/max/step node has an argument depending on `kind`.
  bool has_nonsmooth_in(VarKind kind) const;
  std::size_t node_count() const;

  /// Tree-walking evaluation; slow path used by tests and symbolic code.
  double eval(const EvalArgs& args) const;

  /// Re-parseable text with every binary operation parenthesised.
  std::string to_string() const;

 private:
  static NodePtr constant_node(double v);
  NodePtr root_;
};

// Simplifying constructors (constant folding, 0/1 identities).
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, double exponent);
Expr apply(Op unary, const Expr& a);
Expr apply(Op binary, const Expr& a, const Expr& b);

/// Parses the integrand grammar. Throws SyntaxError (with byte offset),
/// Error(kUnknownIdentifier) or Error(kArity).
Expr parse_expr(const std::string& text, std::size_t dim_m, std::size_t dim_n);

/// d/d(kind_index). Throws Error(kNonSmooth) when the derivative would pass
/// through abs/min/max/step of an argument that depends on the variable.
Expr differentiate(const Expr& e, VarKind kind, std::uint32_t index);

/// x <-> y and w <-> z.
Expr swap_pairs(const Expr& e);

/// Substitutes a constant for one variable component.
Expr substitute(const Expr& e, VarKind kind, std::uint32_t index, double value);

/// Whether a subtree acts as an indicator guard: a step node, or a product /
/// negation containing one. A guarded product or quotient whose left operand
/// evaluates to exactly 0 is 0 without evaluating the right operand, so
/// "step(z1 - x1) / z1" is 0 (not a pole) where the indicator vanishes.
bool is_guard(const Node& node);

/// Flat postfix program compiled from an Expr; reentrant and allocation-free
/// per call for expressions up to kMaxStack deep.
class Program {
 public:
  static constexpr std::size_t kMaxStack = 64;

  Program() = default;
  explicit Program(const Expr& e);

  double operator()(const EvalArgs& args) const;
  bool empty() const { return code_.empty(); }

 private:
  struct Instr {
    Op op;
    VarKind var;
    std::uint32_t index;
    std::uint32_t jump;  // for guarded ops: target if guard is zero
    double value;
    bool guard;
  };
  void emit(const Node& n);
  std::vector<Instr> code_;
};

}  // namespace nlf
