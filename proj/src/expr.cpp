#include "hodohj/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <unordered_set>

namespace hodohj {

enum class Func { Sin, Cos, Exp, Log, Sqrt, Abs, Tanh };

struct Expression::Node {
  enum class Kind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::size_t var = 0;
  Func func = Func::Sin;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  bool has_vars = false;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

struct FuncName {
  const char* name;
  Func func;
};

constexpr std::array<FuncName, 7> kFunctions = {{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"exp", Func::Exp},
    {"log", Func::Log},
    {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
    {"tanh", Func::Tanh},
}};

std::optional<Func> lookup_function(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (name == f.name) return f.func;
  }
  return std::nullopt;
}

const char* function_name(Func f) {
  for (const auto& e : kFunctions) {
    if (e.func == f) return e.name;
  }
  return "?";
}

std::optional<double> lookup_constant(std::string_view name) {
  if (name == "pi") return std::numbers::pi;
  if (name == "e") return std::numbers::e;
  return std::nullopt;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

NodePtr make_number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Number;
  n->number = v;
  return n;
}

NodePtr make_binary(Node::Kind kind, NodePtr l, NodePtr r) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->has_vars = l->has_vars || r->has_vars;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError(pos_, "expected expression, found end of input");
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size()) {
      throw SyntaxError(pos_, std::string("expected operator or end of input, found '") +
                                  src_[pos_] + "'");
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Node::Kind::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(Node::Kind::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Node::Kind::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(Node::Kind::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      NodePtr operand = parse_unary();
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Neg;
      n->has_vars = operand->has_vars;
      n->lhs = std::move(operand);
      return n;
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_binary(Node::Kind::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError(pos_, "expected operand, found end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      return inner;
    }
    throw SyntaxError(pos_, std::string("expected operand, found '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t count = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++count;
      }
      return count;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) throw SyntaxError(start, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) {
        // "2e" followed by something else is not an exponent; treat as error
        throw SyntaxError(save, "malformed exponent");
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    const double v = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(v)) throw SyntaxError(start, "number out of range");
    return make_number(v);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(src_.substr(start, pos_ - start));

    if (auto f = lookup_function(name)) {
      if (!accept('(')) throw SyntaxError(pos_, "expected '(' after function " + name);
      NodePtr arg = parse_expr();
      if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Call;
      n->func = *f;
      n->has_vars = arg->has_vars;
      n->lhs = std::move(arg);
      return n;
    }
    if (auto c = lookup_constant(name)) return make_number(*c);
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Variable;
        n->var = i;
        n->has_vars = true;
        return n;
      }
    }
    throw UnknownIdentifierError(start, name);
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

std::string render(const Node& n, const std::vector<std::string>& vars) {
  switch (n.kind) {
    case Node::Kind::Number:
      return n.number < 0 ? "(" + format_number(n.number) + ")" : format_number(n.number);
    case Node::Kind::Variable:
      return vars[n.var];
    case Node::Kind::Neg:
      return "(-" + render(*n.lhs, vars) + ")";
    case Node::Kind::Call:
      return std::string(function_name(n.func)) + "(" + render(*n.lhs, vars) + ")";
    default:
      break;
  }
  const char* op = "";
  switch (n.kind) {
    case Node::Kind::Add: op = " + "; break;
    case Node::Kind::Sub: op = " - "; break;
    case Node::Kind::Mul: op = " * "; break;
    case Node::Kind::Div: op = " / "; break;
    case Node::Kind::Pow: op = "^"; break;
    default: break;
  }
  return "(" + render(*n.lhs, vars) + op + render(*n.rhs, vars) + ")";
}

/// f, f', f'' of a unary function at a.
struct Derivs {
  double f, d1, d2;
};

[[noreturn]] void domain_fail(const std::string& what, const Node& n,
                              const std::vector<std::string>& vars) {
  throw DomainError(what + " in '" + render(n, vars) + "'");
}

Derivs unary_derivs(Func f, double a, const Node& n, const std::vector<std::string>& vars) {
  switch (f) {
    case Func::Sin: return {std::sin(a), std::cos(a), -std::sin(a)};
    case Func::Cos: return {std::cos(a), -std::sin(a), -std::cos(a)};
    case Func::Exp: {
      const double e = std::exp(a);
      return {e, e, e};
    }
    case Func::Log:
      if (!(a > 0.0)) domain_fail("log of non-positive value " + format_number(a), n, vars);
      return {std::log(a), 1.0 / a, -1.0 / (a * a)};
    case Func::Sqrt: {
      if (a < 0.0) domain_fail("sqrt of negative value " + format_number(a), n, vars);
      const double s = std::sqrt(a);
      return {s, 0.5 / s, -0.25 / (s * a)};
    }
    case Func::Abs:
      return {std::abs(a), a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0), 0.0};
    case Func::Tanh: {
      const double th = std::tanh(a);
      const double sech2 = 1.0 - th * th;
      return {th, sech2, -2.0 * th * sech2};
    }
  }
  return {0.0, 0.0, 0.0};
}

/// Integer value of a variable-free exponent, if it is one.
std::optional<int> integer_exponent(double p) {
  if (std::floor(p) == p && std::abs(p) <= 1 << 30) return static_cast<int>(p);
  return std::nullopt;
}

Derivs power_derivs(double a, double p, const Node& n, const std::vector<std::string>& vars) {
  if (auto k = integer_exponent(p)) {
    const int m = *k;
    if (a == 0.0 && m < 0) domain_fail("division by zero", n, vars);
    const double f = std::pow(a, m);
    const double d1 = m == 0 ? 0.0 : m * std::pow(a, m - 1);
    const double d2 = (m == 0 || m == 1) ? 0.0 : static_cast<double>(m) * (m - 1) * std::pow(a, m - 2);
    return {f, d1, d2};
  }
  if (a < 0.0) domain_fail("non-integer power of negative base " + format_number(a), n, vars);
  return {std::pow(a, p), p * std::pow(a, p - 1.0), p * (p - 1.0) * std::pow(a, p - 2.0)};
}

double eval_value(const Node& n, const Vec& x, const std::vector<std::string>& vars) {
  switch (n.kind) {
    case Node::Kind::Number: return n.number;
    case Node::Kind::Variable: return x[static_cast<Eigen::Index>(n.var)];
    case Node::Kind::Neg: return -eval_value(*n.lhs, x, vars);
    case Node::Kind::Add: return eval_value(*n.lhs, x, vars) + eval_value(*n.rhs, x, vars);
    case Node::Kind::Sub: return eval_value(*n.lhs, x, vars) - eval_value(*n.rhs, x, vars);
    case Node::Kind::Mul: return eval_value(*n.lhs, x, vars) * eval_value(*n.rhs, x, vars);
    case Node::Kind::Div: {
      const double den = eval_value(*n.rhs, x, vars);
      if (den == 0.0) domain_fail("division by zero", n, vars);
      return eval_value(*n.lhs, x, vars) / den;
    }
    case Node::Kind::Pow: {
      const double a = eval_value(*n.lhs, x, vars);
      const double p = eval_value(*n.rhs, x, vars);
      if (n.rhs->has_vars) {
        if (!(a > 0.0)) domain_fail("variable exponent requires positive base", n, vars);
        return std::pow(a, p);
      }
      if (auto k = integer_exponent(p)) {
        if (a == 0.0 && *k < 0) domain_fail("division by zero", n, vars);
        return std::pow(a, *k);
      }
      if (a < 0.0) domain_fail("non-integer power of negative base " + format_number(a), n, vars);
      return std::pow(a, p);
    }
    case Node::Kind::Call:
      return unary_derivs(n.func, eval_value(*n.lhs, x, vars), n, vars).f;
  }
  return 0.0;
}

/// u v^T + v u^T, filled entry by entry so the result is exactly symmetric.
Mat symmetric_outer(const Vec& u, const Vec& v) {
  const Eigen::Index n = u.size();
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double e = u[i] * v[j] + u[j] * v[i];
      m(i, j) = e;
      m(j, i) = e;
    }
  }
  return m;
}

Jet chain(const Jet& a, const Derivs& d) {
  Jet r;
  r.value = d.f;
  r.gradient = d.d1 * a.gradient;
  r.hessian = d.d1 * a.hessian + (0.5 * d.d2) * symmetric_outer(a.gradient, a.gradient);
  return r;
}

Jet multiply(const Jet& a, const Jet& b) {
  Jet r;
  r.value = a.value * b.value;
  r.gradient = b.value * a.gradient + a.value * b.gradient;
  r.hessian = b.value * a.hessian + a.value * b.hessian + symmetric_outer(a.gradient, b.gradient);
  return r;
}

Jet eval_jet_node(const Node& n, const Vec& x, const std::vector<std::string>& vars) {
  const std::size_t dim = vars.size();
  switch (n.kind) {
    case Node::Kind::Number: return Jet::constant(n.number, dim);
    case Node::Kind::Variable:
      return Jet::variable(x[static_cast<Eigen::Index>(n.var)], n.var, dim);
    case Node::Kind::Neg: {
      Jet a = eval_jet_node(*n.lhs, x, vars);
      a.value = -a.value;
      a.gradient = -a.gradient;
      a.hessian = -a.hessian;
      return a;
    }
    case Node::Kind::Add:
    case Node::Kind::Sub: {
      Jet a = eval_jet_node(*n.lhs, x, vars);
      const Jet b = eval_jet_node(*n.rhs, x, vars);
      const double s = n.kind == Node::Kind::Add ? 1.0 : -1.0;
      a.value += s * b.value;
      a.gradient += s * b.gradient;
      a.hessian += s * b.hessian;
      return a;
    }
    case Node::Kind::Mul:
      return multiply(eval_jet_node(*n.lhs, x, vars), eval_jet_node(*n.rhs, x, vars));
    case Node::Kind::Div: {
      const Jet b = eval_jet_node(*n.rhs, x, vars);
      if (b.value == 0.0) domain_fail("division by zero", n, vars);
      const double v = b.value;
      const Jet recip = chain(b, {1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)});
      return multiply(eval_jet_node(*n.lhs, x, vars), recip);
    }
    case Node::Kind::Pow: {
      const Jet a = eval_jet_node(*n.lhs, x, vars);
      if (!n.rhs->has_vars) {
        const double p = eval_value(*n.rhs, x, vars);
        return chain(a, power_derivs(a.value, p, n, vars));
      }
      // a^b = exp(b log a)
      if (!(a.value > 0.0)) domain_fail("variable exponent requires positive base", n, vars);
      const Jet log_a = chain(a, {std::log(a.value), 1.0 / a.value, -1.0 / (a.value * a.value)});
      const Jet prod = multiply(eval_jet_node(*n.rhs, x, vars), log_a);
      const double e = std::exp(prod.value);
      return chain(prod, {e, e, e});
    }
    case Node::Kind::Call: {
      const Jet a = eval_jet_node(*n.lhs, x, vars);
      return chain(a, unary_derivs(n.func, a.value, n, vars));
    }
  }
  return Jet::constant(0.0, dim);
}

void check_point(const Vec& point, std::size_t dim) {
  if (static_cast<std::size_t>(point.size()) != dim) {
    throw ValidationError("point has " + std::to_string(point.size()) + " components, expected " +
                          std::to_string(dim));
  }
}

}  // namespace

Jet Jet::constant(double v, std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  return {v, Vec::Zero(m), Mat::Zero(m, m)};
}

Jet Jet::variable(double v, std::size_t index, std::size_t n) {
  Jet j = constant(v, n);
  j.gradient[static_cast<Eigen::Index>(index)] = 1.0;
  return j;
}

Expression::Expression(std::shared_ptr<const Node> root, std::vector<std::string> variables,
                       std::string source)
    : root_(std::move(root)), variables_(std::move(variables)), source_(std::move(source)) {}

Expression Expression::parse(std::string_view source, std::vector<std::string> variables) {
  std::unordered_set<std::string> seen;
  for (const auto& v : variables) {
    if (v.empty() || !(std::isalpha(static_cast<unsigned char>(v[0])) || v[0] == '_')) {
      throw ValidationError("invalid variable name \"" + v + "\"");
    }
    for (char c : v) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
        throw ValidationError("invalid variable name \"" + v + "\"");
      }
    }
    if (lookup_function(v) || lookup_constant(v)) {
      throw ValidationError("variable name \"" + v + "\" collides with a function or constant");
    }
    if (!seen.insert(v).second) throw ValidationError("duplicate variable name \"" + v + "\"");
  }
  Parser p(source, variables);
  NodePtr root = p.parse();
  return Expression(std::move(root), std::move(variables), std::string(source));
}

double Expression::evaluate(const Vec& point) const {
  check_point(point, dim());
  const double v = eval_value(*root_, point, variables_);
  if (!std::isfinite(v)) throw NonFiniteError("non-finite value of '" + source_ + "'");
  return v;
}

Jet Expression::eval_jet(const Vec& point) const {
  check_point(point, dim());
  Jet j = eval_jet_node(*root_, point, variables_);
  if (!std::isfinite(j.value) || !j.gradient.allFinite() || !j.hessian.allFinite()) {
    throw NonFiniteError("non-finite derivatives of '" + source_ + "'");
  }
  return j;
}

std::string Expression::to_string() const { return render(*root_, variables_); }

std::vector<std::string> indexed_names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

}  // namespace hodohj
