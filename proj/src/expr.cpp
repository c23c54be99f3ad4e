#include "adiabatic/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace adiabatic {

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

constexpr std::array<std::pair<std::string_view, Func>, 8> kFunctions{{
    {"sin", Func::Sin},
    {"cos", Func::Cos},
    {"tan", Func::Tan},
    {"tanh", Func::Tanh},
    {"exp", Func::Exp},
    {"sqrt", Func::Sqrt},
    {"abs", Func::Abs},
    {"jb", Func::Jb},
}};

std::string_view func_name(Func f) {
  for (const auto& [name, fn] : kFunctions) {
    if (fn == f) return name;
  }
  return "?";
}

NodePtr make(Expr::Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_number(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::Number;
  n->value = v;
  return n;
}

NodePtr make_call(Func f, NodePtr arg) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::Call;
  n->func = f;
  n->lhs = std::move(arg);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail({"operator", "end of input"});
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::ostringstream msg;
    msg << "syntax error at offset " << pos_ << ": expected " << join(expected);
    throw ParseError(pos_, std::move(expected), msg.str());
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Expr::Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Expr::Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = make(Expr::Kind::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = make(Expr::Kind::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    NodePtr b = base();
    if (accept('^')) return make(Expr::Kind::Pow, b, factor());
    return b;
  }

  NodePtr base() {
    skip_ws();
    static const std::vector<std::string> kBaseTokens{"number", "'x'", "'pi'", "'e'", "function",
                                                       "'('", "'-'"};
    if (pos_ >= text_.size()) fail(kBaseTokens);
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return make(Expr::Kind::Negate, base());
    }
    if (c == '(') {
      ++pos_;
      NodePtr inner = expr();
      if (!accept(')')) fail({"')'"});
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view ident = text_.substr(start, pos_ - start);
      if (ident == "x") return make(Expr::Kind::Variable);
      if (ident == "pi") return make_number(std::numbers::pi);
      if (ident == "e") return make_number(std::numbers::e);
      for (const auto& [name, f] : kFunctions) {
        if (ident == name) {
          if (!accept('(')) fail({"'('"});
          NodePtr arg = expr();
          if (!accept(')')) fail({"')'"});
          return make_call(f, arg);
        }
      }
      pos_ = start;
      fail(kBaseTokens);
    }
    fail(kBaseTokens);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t count = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++count;
      }
      return count;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = start;
      fail({"number"});
    }
    // Exponent only when followed by digits, so "2e" stays 2 followed by e.
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        digits();
      }
    }
    double v = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      pos_ = start;
      fail({"number"});
    }
    return make_number(v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double apply(Func f, double a) {
  switch (f) {
    case Func::Sin: return std::sin(a);
    case Func::Cos: return std::cos(a);
    case Func::Tan: return std::tan(a);
    case Func::Tanh: return std::tanh(a);
    case Func::Exp: return std::exp(a);
    case Func::Sqrt:
      if (a < 0.0) throw DomainError("sqrt of negative argument");
      return std::sqrt(a);
    case Func::Abs: return std::abs(a);
    case Func::Jb: return std::sqrt(1.0 + a * a);
  }
  return 0.0;
}

double eval(const Expr::Node& n, double x) {
  switch (n.kind) {
    case Expr::Kind::Number: return n.value;
    case Expr::Kind::Variable: return x;
    case Expr::Kind::Negate: return -eval(*n.lhs, x);
    case Expr::Kind::Add: return eval(*n.lhs, x) + eval(*n.rhs, x);
    case Expr::Kind::Sub: return eval(*n.lhs, x) - eval(*n.rhs, x);
    case Expr::Kind::Mul: return eval(*n.lhs, x) * eval(*n.rhs, x);
    case Expr::Kind::Div: {
      const double d = eval(*n.rhs, x);
      if (d == 0.0) throw DomainError("division by zero");
      return eval(*n.lhs, x) / d;
    }
    case Expr::Kind::Pow: return std::pow(eval(*n.lhs, x), eval(*n.rhs, x));
    case Expr::Kind::Call: return apply(n.func, eval(*n.lhs, x));
  }
  return 0.0;
}

void print(const Expr::Node& n, std::string& out) {
  switch (n.kind) {
    case Expr::Kind::Number: {
      std::array<char, 32> buf{};
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), n.value);
      // Negative literals only arise from folding; parenthesize so they re-parse.
      if (n.value < 0) out += '(';
      out.append(buf.data(), ptr);
      if (n.value < 0) out += ')';
      return;
    }
    case Expr::Kind::Variable: out += 'x'; return;
    case Expr::Kind::Negate:
      out += "(-";
      print(*n.lhs, out);
      out += ')';
      return;
    case Expr::Kind::Call:
      out += func_name(n.func);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    default: break;
  }
  char op = '+';
  switch (n.kind) {
    case Expr::Kind::Sub: op = '-'; break;
    case Expr::Kind::Mul: op = '*'; break;
    case Expr::Kind::Div: op = '/'; break;
    case Expr::Kind::Pow: op = '^'; break;
    default: break;
  }
  out += '(';
  print(*n.lhs, out);
  out += op;
  print(*n.rhs, out);
  out += ')';
}

bool depends(const Expr::Node& n) {
  if (n.kind == Expr::Kind::Variable) return true;
  if (n.kind == Expr::Kind::Number) return false;
  return (n.lhs && depends(*n.lhs)) || (n.rhs && depends(*n.rhs));
}

bool is_number(const NodePtr& n, double v) {
  return n->kind == Expr::Kind::Number && n->value == v;
}

// Light folding so derivative trees stay small.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  return make(Expr::Kind::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_number(b, 0.0)) return a;
  if (is_number(a, 0.0)) return make(Expr::Kind::Negate, std::move(b));
  return make(Expr::Kind::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return make_number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  return make(Expr::Kind::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0)) return make_number(0.0);
  if (is_number(b, 1.0)) return a;
  return make(Expr::Kind::Div, std::move(a), std::move(b));
}

NodePtr differentiate(const NodePtr& n) {
  switch (n->kind) {
    case Expr::Kind::Number: return make_number(0.0);
    case Expr::Kind::Variable: return make_number(1.0);
    case Expr::Kind::Negate: {
      NodePtr d = differentiate(n->lhs);
      if (is_number(d, 0.0)) return d;
      return make(Expr::Kind::Negate, d);
    }
    case Expr::Kind::Add: return add(differentiate(n->lhs), differentiate(n->rhs));
    case Expr::Kind::Sub: return sub(differentiate(n->lhs), differentiate(n->rhs));
    case Expr::Kind::Mul:
      return add(mul(differentiate(n->lhs), n->rhs), mul(n->lhs, differentiate(n->rhs)));
    case Expr::Kind::Div: {
      // (u/v)' = u'/v - u v' / v^2
      NodePtr first = div(differentiate(n->lhs), n->rhs);
      NodePtr dv = differentiate(n->rhs);
      if (is_number(dv, 0.0)) return first;
      return sub(first, div(mul(n->lhs, dv), mul(n->rhs, n->rhs)));
    }
    case Expr::Kind::Pow: {
      if (depends(*n->rhs)) {
        throw ConfigError("cannot differentiate an x-dependent exponent");
      }
      // (u^c)' = c u^(c-1) u'
      NodePtr du = differentiate(n->lhs);
      NodePtr lowered = make(Expr::Kind::Pow, n->lhs, sub(n->rhs, make_number(1.0)));
      return mul(mul(n->rhs, lowered), du);
    }
    case Expr::Kind::Call: {
      NodePtr u = n->lhs;
      NodePtr du = differentiate(u);
      if (is_number(du, 0.0)) return du;
      NodePtr outer;
      switch (n->func) {
        case Func::Sin: outer = make_call(Func::Cos, u); break;
        case Func::Cos: outer = make(Expr::Kind::Negate, make_call(Func::Sin, u)); break;
        case Func::Tan: {
          NodePtr t = make_call(Func::Tan, u);
          outer = add(make_number(1.0), mul(t, t));
          break;
        }
        case Func::Tanh: {
          NodePtr t = make_call(Func::Tanh, u);
          outer = sub(make_number(1.0), mul(t, t));
          break;
        }
        case Func::Exp: outer = n; break;
        case Func::Sqrt: outer = div(make_number(0.5), n); break;
        case Func::Abs: outer = div(u, n); break;
        case Func::Jb: outer = div(u, n); break;
      }
      return mul(outer, du);
    }
  }
  return make_number(0.0);
}

bool equal(const Expr::Node& a, const Expr::Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Number: return a.value == b.value;
    case Expr::Kind::Variable: return true;
    case Expr::Kind::Call: return a.func == b.func && equal(*a.lhs, *b.lhs);
    case Expr::Kind::Negate: return equal(*a.lhs, *b.lhs);
    default: return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
}

}  // namespace

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected,
                       const std::string& detail)
    : ConfigError(detail), offset_(offset), expected_(std::move(expected)) {}

Expr::Expr() : root_(make_number(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

Expr Expr::number(double v) { return Expr(make_number(v)); }

Expr Expr::variable() { return Expr(make(Kind::Variable)); }

double Expr::operator()(double x) const {
  const double v = eval(*root_, x);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite value of " << to_string() << " at x = " << x;
    throw DomainError(msg.str());
  }
  return v;
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

Expr Expr::derivative() const { return Expr(differentiate(root_)); }

bool Expr::depends_on_x() const { return depends(*root_); }

bool Expr::operator==(const Expr& other) const { return equal(*root_, *other.root_); }

Expr parse_expr(std::string_view text) { return Expr(Parser(text).parse()); }

Expr operator+(const Expr& a, const Expr& b) {
  return Expr(add(std::make_shared<const Expr::Node>(a.root()), std::make_shared<const Expr::Node>(b.root())));
}

}  // namespace adiabatic
