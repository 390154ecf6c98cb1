#include "nlf/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>

#include "nlf/error.hpp"

namespace nlf {

namespace {

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->args = {std::move(a), std::move(b)};
  return n;
}

bool is_const(const Expr& e, double v) { return e.root().op == Op::kConst && e.root().value == v; }

[[noreturn]] void pole(const char* what) { throw Error(ErrorCode::kPole, what); }
[[noreturn]] void domain_error(const char* what) { throw Error(ErrorCode::kEvalDomain, what); }

double apply_unary(Op op, double a, double value) {
  switch (op) {
    case Op::kNeg: return -a;
    case Op::kAbs: return std::abs(a);
    case Op::kExp: return std::exp(a);
    case Op::kLog:
      if (a == 0.0) pole("log of zero");
      if (a < 0.0) domain_error("log of a negative number");
      return std::log(a);
    case Op::kSqrt:
      if (a < 0.0) domain_error("sqrt of a negative number");
      return std::sqrt(a);
    case Op::kStep: return a >= 0.0 ? 1.0 : 0.0;
    case Op::kPow: {
      if (a == 0.0 && value < 0.0) pole("zero raised to a negative power");
      if (value == 2.0) return a * a;
      if (value == 1.0) return a;
      if (value == 3.0) return a * a * a;
      const double r = std::pow(a, value);
      if (std::isnan(r)) domain_error("negative base with non-integer exponent");
      return r;
    }
    default: break;
  }
  domain_error("bad unary op");
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::kAdd: return a + b;
    case Op::kSub: return a - b;
    case Op::kMul: return a * b;
    case Op::kDiv:
      if (b == 0.0) pole("division by zero");
      return a / b;
    case Op::kMin: return std::min(a, b);
    case Op::kMax: return std::max(a, b);
    default: break;
  }
  domain_error("bad binary op");
}

bool is_binary(Op op) {
  return op == Op::kAdd || op == Op::kSub || op == Op::kMul || op == Op::kDiv || op == Op::kMin ||
         op == Op::kMax;
}

double lookup(const EvalArgs& args, VarKind var, std::uint32_t index) {
  switch (var) {
    case VarKind::kX: return args.x[index];
    case VarKind::kY: return args.y[index];
    case VarKind::kW: return args.w[index];
    case VarKind::kZ: return args.z[index];
  }
  return 0.0;
}

double eval_node(const Node& n, const EvalArgs& args) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar: return lookup(args, n.var, n.index);
    default: break;
  }
  if (is_binary(n.op)) {
    const double a = eval_node(*n.args[0], args);
    if ((n.op == Op::kMul || n.op == Op::kDiv) && a == 0.0 && is_guard(*n.args[0])) return a;
    const double r = apply_binary(n.op, a, eval_node(*n.args[1], args));
    if (std::isnan(r)) domain_error("undefined arithmetic (NaN)");
    return r;
  }
  const double r = apply_unary(n.op, eval_node(*n.args[0], args), n.value);
  if (std::isnan(r)) domain_error("undefined arithmetic (NaN)");
  return r;
}

std::string fmt_const(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (v < 0) s = "(" + s + ")";
  return s;
}

const char* func_name(Op op) {
  switch (op) {
    case Op::kAbs: return "abs";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kMin: return "min";
    case Op::kMax: return "max";
    case Op::kStep: return "step";
    default: return "?";
  }
}

char var_letter(VarKind v) {
  switch (v) {
    case VarKind::kX: return 'x';
    case VarKind::kY: return 'y';
    case VarKind::kW: return 'w';
    case VarKind::kZ: return 'z';
  }
  return '?';
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::kConst: out += fmt_const(n.value); return;
    case Op::kVar:
      out += var_letter(n.var);
      out += std::to_string(n.index + 1);
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      const char* sym = n.op == Op::kAdd ? " + " : n.op == Op::kSub ? " - " : n.op == Op::kMul ? " * " : " / ";
      out += '(';
      print(*n.args[0], out);
      out += sym;
      print(*n.args[1], out);
      out += ')';
      return;
    }
    case Op::kPow:
      out += '(';
      print(*n.args[0], out);
      out += ")^";
      out += fmt_const(n.value);
      return;
    case Op::kNeg:
      out += "(-";
      print(*n.args[0], out);
      out += ')';
      return;
    case Op::kMin:
    case Op::kMax:
      out += func_name(n.op);
      out += '(';
      print(*n.args[0], out);
      out += ", ";
      print(*n.args[1], out);
      out += ')';
      return;
    default:
      out += func_name(n.op);
      out += '(';
      print(*n.args[0], out);
      out += ')';
      return;
  }
}

NodePtr transform_vars(const NodePtr& n, const std::function<NodePtr(const Node&)>& on_var) {
  if (n->op == Op::kConst) return n;
  if (n->op == Op::kVar) return on_var(*n);
  NodePtr a = n->args[0] ? transform_vars(n->args[0], on_var) : nullptr;
  NodePtr b = n->args[1] ? transform_vars(n->args[1], on_var) : nullptr;
  if (a == n->args[0] && b == n->args[1]) return n;
  auto copy = std::make_shared<Node>(*n);
  copy->args = {a, b};
  return copy;
}

// ---------------------------------------------------------------- parser

struct Token {
  enum Kind { kNumber, kIdent, kSymbol, kEnd } kind;
  std::string text;
  double number = 0.0;
  std::size_t offset = 0;
};

class Parser {
 public:
  Parser(const std::string& text, std::size_t m, std::size_t n) : text_(text), m_(m), n_(n) { tokenize(); }

  Expr parse() {
    Expr e = parse_sum();
    if (peek().kind != Token::kEnd) throw SyntaxError(peek().offset, "unexpected '" + peek().text + "'");
    return e;
  }

 private:
  void tokenize() {
    std::size_t i = 0;
    while (i < text_.size()) {
      const unsigned char c = static_cast<unsigned char>(text_[i]);
      if (std::isspace(c)) {
        ++i;
        continue;
      }
      Token t;
      t.offset = i;
      if (std::isdigit(c) || (c == '.' && i + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i + 1])))) {
        std::size_t used = 0;
        t.number = std::stod(text_.substr(i), &used);
        t.kind = Token::kNumber;
        t.text = text_.substr(i, used);
        i += used;
      } else if (std::isalpha(c) || c == '_') {
        std::size_t j = i;
        while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) ++j;
        t.kind = Token::kIdent;
        t.text = text_.substr(i, j - i);
        i = j;
      } else if (std::string("+-*/^(),").find(static_cast<char>(c)) != std::string::npos) {
        t.kind = Token::kSymbol;
        t.text = std::string(1, static_cast<char>(c));
        ++i;
      } else {
        throw SyntaxError(i, "unexpected character '" + std::string(1, static_cast<char>(c)) + "'");
      }
      tokens_.push_back(t);
    }
    Token end;
    end.kind = Token::kEnd;
    end.text = "end of input";
    end.offset = text_.size();
    tokens_.push_back(end);
  }

  const Token& peek() const { return tokens_[pos_]; }
  bool accept(const char* sym) {
    if (peek().kind == Token::kSymbol && peek().text == sym) {
      ++pos_;
      return true;
    }
    return false;
  }

  // Errors at end of input point at the dangling last token.
  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    if (t.kind == Token::kEnd) {
      const std::size_t off = pos_ > 0 ? tokens_[pos_ - 1].offset : 0;
      const std::string after = pos_ > 0 ? " after '" + tokens_[pos_ - 1].text + "'" : "";
      throw SyntaxError(off, "unexpected end of input" + after + ", expected " + expected);
    }
    throw SyntaxError(t.offset, "unexpected '" + t.text + "', expected " + expected);
  }

  void expect(const char* sym) {
    if (!accept(sym)) fail(std::string("'") + sym + "'");
  }

  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      if (accept("+")) {
        e = Expr(make_node(Op::kAdd, e.ptr(), parse_product().ptr()));
      } else if (accept("-")) {
        e = Expr(make_node(Op::kSub, e.ptr(), parse_product().ptr()));
      } else {
        return e;
      }
    }
  }

  Expr parse_product() {
    Expr e = parse_factor();
    for (;;) {
      if (accept("*")) {
        e = Expr(make_node(Op::kMul, e.ptr(), parse_factor().ptr()));
      } else if (accept("/")) {
        e = Expr(make_node(Op::kDiv, e.ptr(), parse_factor().ptr()));
      } else {
        return e;
      }
    }
  }

  Expr parse_factor() {
    if (accept("-")) {
      Expr inner = parse_factor();
      if (inner.is_constant()) return Expr::constant(-inner.root().value);
      return Expr(make_node(Op::kNeg, inner.ptr()));
    }
    Expr base = parse_atom();
    if (accept("^")) {
      double sign = 1.0;
      if (accept("-")) sign = -1.0;
      if (peek().kind != Token::kNumber) fail("a numeric exponent");
      const double exponent = sign * peek().number;
      ++pos_;
      return Expr(make_node(Op::kPow, base.ptr(), nullptr, exponent));
    }
    return base;
  }

  Expr parse_atom() {
    const Token t = peek();
    if (t.kind == Token::kNumber) {
      ++pos_;
      return Expr::constant(t.number);
    }
    if (accept("(")) {
      Expr e = parse_sum();
      expect(")");
      return e;
    }
    if (t.kind != Token::kIdent) fail("a number, variable, function or '('");
    ++pos_;
    static const std::pair<const char*, Op> kFuncs[] = {
        {"abs", Op::kAbs},   {"exp", Op::kExp}, {"log", Op::kLog}, {"sqrt", Op::kSqrt},
        {"min", Op::kMin},   {"max", Op::kMax}, {"step", Op::kStep}, {"neg", Op::kNeg},
    };
    for (const auto& [name, op] : kFuncs) {
      if (t.text != name) continue;
      if (!accept("(")) fail("'(' after function " + t.text);
      std::vector<Expr> args;
      if (!(peek().kind == Token::kSymbol && peek().text == ")")) {
        args.push_back(parse_sum());
        while (accept(",")) args.push_back(parse_sum());
      }
      expect(")");
      const std::size_t want = (op == Op::kMin || op == Op::kMax) ? 2 : 1;
      if (args.size() != want) {
        throw Error(ErrorCode::kArity, t.text + " takes " + std::to_string(want) + " argument(s), got " +
                                           std::to_string(args.size()) + " at offset " + std::to_string(t.offset));
      }
      if (want == 2) return Expr(make_node(op, args[0].ptr(), args[1].ptr()));
      return Expr(make_node(op, args[0].ptr()));
    }
    return resolve_variable(t);
  }

  Expr resolve_variable(const Token& t) const {
    const std::string& s = t.text;
    auto unknown = [&](const std::string& why) -> Error {
      return Error(ErrorCode::kUnknownIdentifier,
                   "unknown identifier '" + s + "' at offset " + std::to_string(t.offset) + why);
    };
    if (s.size() < 2) throw unknown("");
    VarKind kind;
    std::size_t limit;
    switch (s[0]) {
      case 'x': kind = VarKind::kX; limit = m_; break;
      case 'y': kind = VarKind::kY; limit = m_; break;
      case 'w': kind = VarKind::kW; limit = n_; break;
      case 'z': kind = VarKind::kZ; limit = n_; break;
      default: throw unknown("");
    }
    for (std::size_t k = 1; k < s.size(); ++k) {
      if (!std::isdigit(static_cast<unsigned char>(s[k]))) throw unknown("");
    }
    const unsigned long idx = std::stoul(s.substr(1));
    if (idx == 0 || idx > limit) {
      throw unknown(" (index out of range 1.." + std::to_string(limit) + ")");
    }
    return Expr::variable(kind, static_cast<std::uint32_t>(idx - 1));
  }

  const std::string& text_;
  std::size_t m_;
  std::size_t n_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

NodePtr Expr::constant_node(double v) { return make_node(Op::kConst, nullptr, nullptr, v); }

Expr Expr::variable(VarKind kind, std::uint32_t index) {
  auto n = std::make_shared<Node>();
  n->op = Op::kVar;
  n->var = kind;
  n->index = index;
  return Expr(n);
}

bool Expr::depends_on(VarKind kind) const {
  std::function<bool(const Node&)> rec = [&](const Node& n) {
    if (n.op == Op::kVar) return n.var == kind;
    for (const auto& a : n.args) {
      if (a && rec(*a)) return true;
    }
    return false;
  };
  return rec(*root_);
}

bool Expr::has_nonsmooth_in(VarKind kind) const {
  std::function<bool(const Node&)> rec = [&](const Node& n) {
    if (n.op == Op::kAbs || n.op == Op::kMin || n.op == Op::kMax || n.op == Op::kStep) {
      for (const auto& a : n.args) {
        if (a && Expr(a).depends_on(kind)) return true;
      }
    }
    for (const auto& a : n.args) {
      if (a && rec(*a)) return true;
    }
    return false;
  };
  return rec(*root_);
}

std::size_t Expr::node_count() const {
  std::function<std::size_t(const Node&)> rec = [&](const Node& n) {
    std::size_t c = 1;
    for (const auto& a : n.args) {
      if (a) c += rec(*a);
    }
    return c;
  };
  return rec(*root_);
}

double Expr::eval(const EvalArgs& args) const { return eval_node(*root_, args); }

std::string Expr::to_string() const {
  std::string s;
  print(*root_, s);
  return s;
}

bool is_guard(const Node& node) {
  switch (node.op) {
    case Op::kStep: return true;
    case Op::kNeg: return is_guard(*node.args[0]);
    case Op::kMul: return is_guard(*node.args[0]) || is_guard(*node.args[1]);
    default: return false;
  }
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.root().value + b.root().value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Expr(make_node(Op::kAdd, a.ptr(), b.ptr()));
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.root().value - b.root().value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return -b;
  return Expr(make_node(Op::kSub, a.ptr(), b.ptr()));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr::constant(a.root().value * b.root().value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return -b;
  if (is_const(b, -1.0)) return -a;
  return Expr(make_node(Op::kMul, a.ptr(), b.ptr()));
}

Expr operator/(const Expr& a, const Expr& b) {
  if (is_const(a, 0.0)) return Expr::constant(0.0);
  if (is_const(b, 1.0)) return a;
  if (a.is_constant() && b.is_constant() && b.root().value != 0.0) {
    return Expr::constant(a.root().value / b.root().value);
  }
  return Expr(make_node(Op::kDiv, a.ptr(), b.ptr()));
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr::constant(-a.root().value);
  if (a.root().op == Op::kNeg) return Expr(a.root().args[0]);
  return Expr(make_node(Op::kNeg, a.ptr()));
}

Expr pow(const Expr& a, double exponent) {
  if (exponent == 0.0) return Expr::constant(1.0);
  if (exponent == 1.0) return a;
  if (a.is_constant()) {
    const double v = std::pow(a.root().value, exponent);
    if (std::isfinite(v)) return Expr::constant(v);
  }
  return Expr(make_node(Op::kPow, a.ptr(), nullptr, exponent));
}

Expr apply(Op unary, const Expr& a) {
  if (unary == Op::kNeg) return -a;
  if (a.is_constant()) {
    try {
      return Expr::constant(apply_unary(unary, a.root().value, 0.0));
    } catch (const Error&) {
      // keep the node; the error resurfaces at evaluation time
    }
  }
  return Expr(make_node(unary, a.ptr()));
}

Expr apply(Op binary, const Expr& a, const Expr& b) {
  switch (binary) {
    case Op::kAdd: return a + b;
    case Op::kSub: return a - b;
    case Op::kMul: return a * b;
    case Op::kDiv: return a / b;
    default: break;
  }
  if (a.is_constant() && b.is_constant()) return Expr::constant(apply_binary(binary, a.root().value, b.root().value));
  return Expr(make_node(binary, a.ptr(), b.ptr()));
}

Expr parse_expr(const std::string& text, std::size_t dim_m, std::size_t dim_n) {
  Parser p(text, dim_m, dim_n);
  return p.parse();
}

Expr differentiate(const Expr& e, VarKind kind, std::uint32_t index) {
  const Node& n = e.root();
  auto d = [&](const NodePtr& child) { return differentiate(Expr(child), kind, index); };
  auto arg = [&](int i) { return Expr(n.args[static_cast<std::size_t>(i)]); };
  switch (n.op) {
    case Op::kConst: return Expr::constant(0.0);
    case Op::kVar: return Expr::constant(n.var == kind && n.index == index ? 1.0 : 0.0);
    case Op::kAdd: return d(n.args[0]) + d(n.args[1]);
    case Op::kSub: return d(n.args[0]) - d(n.args[1]);
    case Op::kMul: {
      // guard * g: the guard's own derivative is 0 almost everywhere
      return d(n.args[0]) * arg(1) + arg(0) * d(n.args[1]);
    }
    case Op::kDiv: {
      const Expr da = d(n.args[0]);
      const Expr db = d(n.args[1]);
      return da / arg(1) - (arg(0) * db) / pow(arg(1), 2.0);
    }
    case Op::kPow: {
      const Expr da = d(n.args[0]);
      if (is_const(da, 0.0)) return Expr::constant(0.0);
      return Expr::constant(n.value) * pow(arg(0), n.value - 1.0) * da;
    }
    case Op::kNeg: return -d(n.args[0]);
    case Op::kExp: return e * d(n.args[0]);
    case Op::kLog: return d(n.args[0]) / arg(0);
    case Op::kSqrt: return d(n.args[0]) / (Expr::constant(2.0) * e);
    case Op::kAbs:
    case Op::kMin:
    case Op::kMax:
    case Op::kStep: {
      const Expr var = Expr::variable(kind, index);
      const std::string name = var.to_string();
      for (const auto& a : n.args) {
        if (a && Expr(a).depends_on(kind)) {
          // step/abs/min/max of an argument in another component of the same
          // variable kind is still smooth in this component
          Expr da = differentiate(Expr(a), kind, index);
          if (!is_const(da, 0.0)) {
            throw Error(ErrorCode::kNonSmooth,
                        std::string(func_name(n.op)) + "(...) is not differentiable in " + name);
          }
        }
      }
      return Expr::constant(0.0);
    }
  }
  return Expr::constant(0.0);
}

Expr swap_pairs(const Expr& e) {
  return Expr(transform_vars(e.ptr(), [](const Node& v) {
    VarKind k = v.var;
    switch (k) {
      case VarKind::kX: k = VarKind::kY; break;
      case VarKind::kY: k = VarKind::kX; break;
      case VarKind::kW: k = VarKind::kZ; break;
      case VarKind::kZ: k = VarKind::kW; break;
    }
    return Expr::variable(k, v.index).ptr();
  }));
}

Expr substitute(const Expr& e, VarKind kind, std::uint32_t index, double value) {
  return Expr(transform_vars(e.ptr(), [&](const Node& v) -> NodePtr {
    if (v.var == kind && v.index == index) return Expr::constant(value).ptr();
    return Expr::variable(v.var, v.index).ptr();
  }));
}

// ---------------------------------------------------------------- program

Program::Program(const Expr& e) { emit(e.root()); }

void Program::emit(const Node& n) {
  switch (n.op) {
    case Op::kConst:
    case Op::kVar:
      code_.push_back({n.op, n.var, n.index, 0, n.value, false});
      return;
    default: break;
  }
  if (is_binary(n.op)) {
    emit(*n.args[0]);
    std::size_t guard_at = code_.size();
    const bool guarded = (n.op == Op::kMul || n.op == Op::kDiv) && is_guard(*n.args[0]);
    if (guarded) code_.push_back({n.op, VarKind::kX, 0, 0, 0.0, true});
    emit(*n.args[1]);
    code_.push_back({n.op, VarKind::kX, 0, 0, 0.0, false});
    if (guarded) code_[guard_at].jump = static_cast<std::uint32_t>(code_.size());
    return;
  }
  emit(*n.args[0]);
  code_.push_back({n.op, VarKind::kX, 0, 0, n.value, false});
}

double Program::operator()(const EvalArgs& args) const {
  double local[kMaxStack];
  std::vector<double> heap;
  double* stack = local;
  if (code_.size() > kMaxStack) {
    heap.resize(code_.size());
    stack = heap.data();
  }
  std::size_t sp = 0;
  const std::size_t end = code_.size();
  for (std::size_t pc = 0; pc < end; ++pc) {
    const Instr& in = code_[pc];
    if (in.guard) {
      if (stack[sp - 1] == 0.0) pc = in.jump - 1;
      continue;
    }
    switch (in.op) {
      case Op::kConst: stack[sp++] = in.value; break;
      case Op::kVar: stack[sp++] = lookup(args, in.var, in.index); break;
      case Op::kAdd: --sp; stack[sp - 1] += stack[sp]; break;
      case Op::kSub: --sp; stack[sp - 1] -= stack[sp]; break;
      case Op::kMul: --sp; stack[sp - 1] *= stack[sp]; break;
      case Op::kDiv:
      case Op::kMin:
      case Op::kMax:
        --sp;
        stack[sp - 1] = apply_binary(in.op, stack[sp - 1], stack[sp]);
        break;
      default: stack[sp - 1] = apply_unary(in.op, stack[sp - 1], in.value); break;
    }
  }
  const double r = stack[0];
  if (std::isnan(r)) domain_error("undefined arithmetic (NaN)");
  return r;
}

}  // namespace nlf
