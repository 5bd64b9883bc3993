#include "nnde/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

namespace nnde {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// x^k for integer k by repeated squaring; k < 0 goes through the reciprocal.
double powi(double x, int k) {
  if (k == 0) return 1.0;
  bool inv = k < 0;
  unsigned long long n = inv ? -static_cast<long long>(k) : k;
  double acc = 1.0, base = x;
  while (n > 0) {
    if (n & 1ull) acc *= base;
    base *= base;
    n >>= 1;
  }
  return inv ? 1.0 / acc : acc;
}

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } kind;
  std::string_view text;
  double number = 0.0;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    std::size_t start = pos_;
    if (pos_ >= text_.size()) return {Token::End, {}, 0.0, start};
    char c = text_[pos_];
    switch (c) {
      case '+': ++pos_; return {Token::Plus, text_.substr(start, 1), 0.0, start};
      case '-': ++pos_; return {Token::Minus, text_.substr(start, 1), 0.0, start};
      case '*': ++pos_; return {Token::Star, text_.substr(start, 1), 0.0, start};
      case '/': ++pos_; return {Token::Slash, text_.substr(start, 1), 0.0, start};
      case '^': ++pos_; return {Token::Caret, text_.substr(start, 1), 0.0, start};
      case '(': ++pos_; return {Token::LParen, text_.substr(start, 1), 0.0, start};
      case ')': ++pos_; return {Token::RParen, text_.substr(start, 1), 0.0, start};
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      double value = 0.0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
      if (res.ec != std::errc()) throw ParseError("malformed number", start);
      std::size_t len = static_cast<std::size_t>(res.ptr - (text_.data() + pos_));
      pos_ += len;
      return {Token::Number, text_.substr(start, len), value, start};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
        ++end;
      std::size_t len = end - pos_;
      pos_ = end;
      return {Token::Ident, text_.substr(start, len), 0.0, start};
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

class Parser {
 public:
  Parser(std::string_view text, int dim) : lexer_(text), dim_(dim) { advance(); }

  Expr run() {
    Expr e;
    e.dim_ = dim_;
    nodes_ = &e.nodes_;
    std::int32_t root = parse_sum();
    if (cur_.kind != Token::End) throw ParseError("unexpected trailing input", cur_.offset);
    (void)root;  // root is always the last node pushed
    return e;
  }

 private:
  Lexer lexer_;
  Token cur_;
  int dim_;
  std::vector<Expr::Node>* nodes_ = nullptr;

  void advance() { cur_ = lexer_.next(); }

  std::int32_t push(Expr::Node n) {
    nodes_->push_back(n);
    return static_cast<std::int32_t>(nodes_->size() - 1);
  }

  std::int32_t make_binary(ExprKind k, std::int32_t a, std::int32_t b, std::size_t off) {
    Expr::Node n;
    n.kind = k;
    n.a = a;
    n.b = b;
    n.offset = static_cast<std::uint32_t>(off);
    return push(n);
  }

  std::int32_t parse_sum() {
    std::int32_t lhs = parse_term();
    for (;;) {
      if (cur_.kind == Token::Plus || cur_.kind == Token::Minus) {
        ExprKind k = cur_.kind == Token::Plus ? ExprKind::Add : ExprKind::Sub;
        std::size_t off = cur_.offset;
        advance();
        std::int32_t rhs = parse_term();
        lhs = make_binary(k, lhs, rhs, off);
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_term() {
    std::int32_t lhs = parse_unary();
    for (;;) {
      if (cur_.kind == Token::Star || cur_.kind == Token::Slash) {
        ExprKind k = cur_.kind == Token::Star ? ExprKind::Mul : ExprKind::Div;
        std::size_t off = cur_.offset;
        advance();
        std::int32_t rhs = parse_unary();
        lhs = make_binary(k, lhs, rhs, off);
      } else {
        return lhs;
      }
    }
  }

  std::int32_t parse_unary() {
    if (cur_.kind == Token::Minus) {
      std::size_t off = cur_.offset;
      advance();
      // A minus sign directly on a number literal folds into the constant,
      // so printed negative constants re-parse to the identical tree.
      if (cur_.kind == Token::Number) {
        Expr::Node n;
        n.kind = ExprKind::Const;
        n.value = -cur_.number;
        n.offset = static_cast<std::uint32_t>(off);
        advance();
        return parse_power_suffix(push(n));
      }
      std::int32_t inner = parse_unary();
      Expr::Node n;
      n.kind = ExprKind::Neg;
      n.a = inner;
      n.offset = static_cast<std::uint32_t>(off);
      return push(n);
    }
    if (cur_.kind == Token::Plus) {
      advance();
      return parse_unary();
    }
    return parse_power_suffix(parse_primary());
  }

  std::int32_t parse_power_suffix(std::int32_t base) {
    if (cur_.kind != Token::Caret) return base;
    std::size_t off = cur_.offset;
    advance();
    bool negative = false;
    if (cur_.kind == Token::Minus) {
      negative = true;
      advance();
    }
    if (cur_.kind != Token::Number) throw ParseError("exponent must be a constant integer", cur_.offset);
    double v = cur_.number;
    if (v != std::floor(v) || std::abs(v) > 64.0)
      throw ParseError("exponent must be a constant integer with |k| <= 64", cur_.offset);
    advance();
    Expr::Node n;
    n.kind = ExprKind::Pow;
    n.a = base;
    n.aux = static_cast<std::int32_t>(negative ? -v : v);
    n.offset = static_cast<std::uint32_t>(off);
    return push(n);
  }

  std::int32_t parse_primary() {
    switch (cur_.kind) {
      case Token::Number: {
        Expr::Node n;
        n.kind = ExprKind::Const;
        n.value = cur_.number;
        n.offset = static_cast<std::uint32_t>(cur_.offset);
        advance();
        return push(n);
      }
      case Token::LParen: {
        advance();
        std::int32_t inner = parse_sum();
        if (cur_.kind != Token::RParen) throw ParseError("expected ')'", cur_.offset);
        advance();
        return inner;
      }
      case Token::Ident:
        return parse_ident();
      case Token::End:
        throw ParseError("unexpected end of input", cur_.offset);
      default:
        throw ParseError("unexpected token '" + std::string(cur_.text) + "'", cur_.offset);
    }
  }

  std::int32_t parse_ident() {
    std::string_view name = cur_.text;
    std::size_t off = cur_.offset;

    static constexpr std::pair<std::string_view, ExprKind> kFunctions[] = {
        {"sin", ExprKind::Sin},   {"cos", ExprKind::Cos},   {"tanh", ExprKind::Tanh},
        {"sinh", ExprKind::Sinh}, {"cosh", ExprKind::Cosh}, {"exp", ExprKind::Exp},
        {"log", ExprKind::Log},   {"sqrt", ExprKind::Sqrt},
    };
    for (auto [fname, kind] : kFunctions) {
      if (name == fname) {
        advance();
        if (cur_.kind != Token::LParen)
          throw ParseError("expected '(' after function name '" + std::string(fname) + "'", cur_.offset);
        advance();
        std::int32_t arg = parse_sum();
        if (cur_.kind != Token::RParen) throw ParseError("expected ')'", cur_.offset);
        advance();
        Expr::Node n;
        n.kind = kind;
        n.a = arg;
        n.offset = static_cast<std::uint32_t>(off);
        return push(n);
      }
    }

    if (name == "pi") {
      advance();
      Expr::Node n;
      n.kind = ExprKind::Const;
      n.value = std::numbers::pi;
      n.offset = static_cast<std::uint32_t>(off);
      return push(n);
    }

    int index = -1;
    if (name.size() >= 2 && name[0] == 'x' &&
        std::isdigit(static_cast<unsigned char>(name[1]))) {
      int v = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), v);
      if (res.ec == std::errc() && res.ptr == name.data() + name.size()) index = v;
    } else if (dim_ <= 3) {
      if (name == "x") index = 0;
      else if (name == "y") index = 1;
      else if (name == "z") index = 2;
    }
    if (index < 0) throw ParseError("unknown identifier '" + std::string(name) + "'", off);
    if (index >= dim_)
      throw ParseError("variable index " + std::to_string(index) + " out of range for dimension " +
                           std::to_string(dim_),
                       off);
    advance();
    Expr::Node n;
    n.kind = ExprKind::Var;
    n.aux = index;
    n.offset = static_cast<std::uint32_t>(off);
    return push(n);
  }
};

Expr Expr::parse(std::string_view text, int dim) {
  if (dim < 1) throw ConfigError("expression dimension must be >= 1");
  bool blank = true;
  for (char c : text)
    if (c != ' ' && c != '\t') blank = false;
  if (blank) throw ParseError("empty expression", 0);
  return Parser(text, dim).run();
}

Expr Expr::constant(double c, int dim) {
  Expr e;
  e.dim_ = dim;
  Node n;
  n.kind = ExprKind::Const;
  n.value = c;
  e.nodes_.push_back(n);
  return e;
}

Expr Expr::variable(int index, int dim) {
  if (index < 0 || index >= dim) throw ConfigError("variable index out of range");
  Expr e;
  e.dim_ = dim;
  Node n;
  n.kind = ExprKind::Var;
  n.aux = index;
  e.nodes_.push_back(n);
  return e;
}

namespace {

[[noreturn]] void domain_error(const char* what, const Expr::Node& n) {
  throw EvalError(std::string(what) + " (expression byte " + std::to_string(n.offset) + ")");
}

}  // namespace

double Expr::eval(std::span<const double> x, ExprScratch& s) const {
  const std::size_t n = nodes_.size();
  if (s.val.size() < n) s.val.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = nodes_[i];
    double* v = s.val.data();
    switch (nd.kind) {
      case ExprKind::Const: v[i] = nd.value; break;
      case ExprKind::Var: v[i] = x[static_cast<std::size_t>(nd.aux)]; break;
      case ExprKind::Add: v[i] = v[nd.a] + v[nd.b]; break;
      case ExprKind::Sub: v[i] = v[nd.a] - v[nd.b]; break;
      case ExprKind::Mul: v[i] = v[nd.a] * v[nd.b]; break;
      case ExprKind::Div:
        if (v[nd.b] == 0.0) domain_error("division by zero", nd);
        v[i] = v[nd.a] / v[nd.b];
        break;
      case ExprKind::Pow:
        if (v[nd.a] == 0.0 && nd.aux < 0) domain_error("zero base with negative exponent", nd);
        v[i] = powi(v[nd.a], nd.aux);
        break;
      case ExprKind::Neg: v[i] = -v[nd.a]; break;
      case ExprKind::Sin: v[i] = std::sin(v[nd.a]); break;
      case ExprKind::Cos: v[i] = std::cos(v[nd.a]); break;
      case ExprKind::Tanh: v[i] = std::tanh(v[nd.a]); break;
      case ExprKind::Sinh: v[i] = std::sinh(v[nd.a]); break;
      case ExprKind::Cosh: v[i] = std::cosh(v[nd.a]); break;
      case ExprKind::Exp: v[i] = std::exp(v[nd.a]); break;
      case ExprKind::Log:
        if (v[nd.a] <= 0.0) domain_error("log of non-positive value", nd);
        v[i] = std::log(v[nd.a]);
        break;
      case ExprKind::Sqrt:
        if (v[nd.a] < 0.0) domain_error("sqrt of negative value", nd);
        v[i] = std::sqrt(v[nd.a]);
        break;
    }
  }
  return s.val[n - 1];
}

double Expr::eval(std::span<const double> x) const {
  ExprScratch s;
  return eval(x, s);
}

void Expr::eval_jet(std::span<const double> x, ExprScratch& s, Jet& out) const {
  const std::size_t n = nodes_.size();
  const std::size_t d = static_cast<std::size_t>(dim_);
  if (s.val.size() < n) s.val.resize(n);
  if (s.lap.size() < n) s.lap.resize(n);
  if (s.grad.size() < n * d) s.grad.resize(n * d);

  double* v = s.val.data();
  double* l = s.lap.data();
  double* g = s.grad.data();

  auto grad_of = [&](std::int32_t i) { return g + static_cast<std::size_t>(i) * d; };

  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = nodes_[i];
    double* gi = grad_of(static_cast<std::int32_t>(i));

    // h(u) composition: value h0, first/second derivatives h1, h2 at u.
    auto compose = [&](double h0, double h1, double h2) {
      const double* ga = grad_of(nd.a);
      double gg = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        gi[t] = h1 * ga[t];
        gg += ga[t] * ga[t];
      }
      v[i] = h0;
      l[i] = h2 * gg + h1 * l[nd.a];
    };

    switch (nd.kind) {
      case ExprKind::Const:
        v[i] = nd.value;
        l[i] = 0.0;
        for (std::size_t t = 0; t < d; ++t) gi[t] = 0.0;
        break;
      case ExprKind::Var: {
        std::size_t k = static_cast<std::size_t>(nd.aux);
        v[i] = x[k];
        l[i] = 0.0;
        for (std::size_t t = 0; t < d; ++t) gi[t] = (t == k) ? 1.0 : 0.0;
        break;
      }
      case ExprKind::Add: {
        const double* ga = grad_of(nd.a);
        const double* gb = grad_of(nd.b);
        v[i] = v[nd.a] + v[nd.b];
        l[i] = l[nd.a] + l[nd.b];
        for (std::size_t t = 0; t < d; ++t) gi[t] = ga[t] + gb[t];
        break;
      }
      case ExprKind::Sub: {
        const double* ga = grad_of(nd.a);
        const double* gb = grad_of(nd.b);
        v[i] = v[nd.a] - v[nd.b];
        l[i] = l[nd.a] - l[nd.b];
        for (std::size_t t = 0; t < d; ++t) gi[t] = ga[t] - gb[t];
        break;
      }
      case ExprKind::Mul: {
        const double* ga = grad_of(nd.a);
        const double* gb = grad_of(nd.b);
        double va = v[nd.a], vb = v[nd.b];
        double cross = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
          cross += ga[t] * gb[t];
          gi[t] = va * gb[t] + vb * ga[t];
        }
        v[i] = va * vb;
        l[i] = va * l[nd.b] + vb * l[nd.a] + 2.0 * cross;
        break;
      }
      case ExprKind::Div: {
        double vb = v[nd.b];
        if (vb == 0.0) domain_error("division by zero", nd);
        const double* ga = grad_of(nd.a);
        const double* gb = grad_of(nd.b);
        double va = v[nd.a];
        double q = va / vb;
        // q = a/b: grad q = (grad a - q grad b)/b,
        // lap q = (lap a - q lap b - 2 grad q . grad b)/b
        double cross = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
          gi[t] = (ga[t] - q * gb[t]) / vb;
          cross += gi[t] * gb[t];
        }
        v[i] = q;
        l[i] = (l[nd.a] - q * l[nd.b] - 2.0 * cross) / vb;
        break;
      }
      case ExprKind::Pow: {
        double u = v[nd.a];
        int k = nd.aux;
        if (u == 0.0 && k < 0) domain_error("zero base with negative exponent", nd);
        double h0 = powi(u, k);
        double h1 = (k == 0) ? 0.0 : k * powi(u, k - 1);
        double h2 = (k == 0 || k == 1) ? 0.0 : static_cast<double>(k) * (k - 1) * powi(u, k - 2);
        compose(h0, h1, h2);
        break;
      }
      case ExprKind::Neg: compose(-v[nd.a], -1.0, 0.0); break;
      case ExprKind::Sin: {
        double sv = std::sin(v[nd.a]);
        compose(sv, std::cos(v[nd.a]), -sv);
        break;
      }
      case ExprKind::Cos: {
        double cv = std::cos(v[nd.a]);
        compose(cv, -std::sin(v[nd.a]), -cv);
        break;
      }
      case ExprKind::Tanh: {
        double t = std::tanh(v[nd.a]);
        double u = 1.0 - t * t;
        compose(t, u, -2.0 * t * u);
        break;
      }
      case ExprKind::Sinh: {
        double sv = std::sinh(v[nd.a]);
        compose(sv, std::cosh(v[nd.a]), sv);
        break;
      }
      case ExprKind::Cosh: {
        double cv = std::cosh(v[nd.a]);
        compose(cv, std::sinh(v[nd.a]), cv);
        break;
      }
      case ExprKind::Exp: {
        double e = std::exp(v[nd.a]);
        compose(e, e, e);
        break;
      }
      case ExprKind::Log: {
        double u = v[nd.a];
        if (u <= 0.0) domain_error("log of non-positive value", nd);
        compose(std::log(u), 1.0 / u, -1.0 / (u * u));
        break;
      }
      case ExprKind::Sqrt: {
        double u = v[nd.a];
        if (u <= 0.0) domain_error("sqrt domain error (argument must be positive)", nd);
        double r = std::sqrt(u);
        double h1 = 0.5 / r;
        compose(r, h1, -0.5 * h1 / u);
        break;
      }
    }
  }

  const std::size_t root = n - 1;
  out.value = v[root];
  out.lap = l[root];
  out.grad.assign(grad_of(static_cast<std::int32_t>(root)),
                  grad_of(static_cast<std::int32_t>(root)) + d);
}

Jet Expr::eval_jet(std::span<const double> x) const {
  ExprScratch s;
  Jet out(static_cast<std::size_t>(dim_));
  eval_jet(x, s, out);
  return out;
}

void Expr::print_node(std::int32_t idx, std::string& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  auto binary = [&](const char* op) {
    out += '(';
    print_node(n.a, out);
    out += ' ';
    out += op;
    out += ' ';
    print_node(n.b, out);
    out += ')';
  };
  auto func = [&](const char* name) {
    out += name;
    out += '(';
    print_node(n.a, out);
    out += ')';
  };
  switch (n.kind) {
    case ExprKind::Const: out += format_number(n.value); break;
    case ExprKind::Var: out += "x" + std::to_string(n.aux); break;
    case ExprKind::Add: binary("+"); break;
    case ExprKind::Sub: binary("-"); break;
    case ExprKind::Mul: binary("*"); break;
    case ExprKind::Div: binary("/"); break;
    case ExprKind::Pow:
      out += '(';
      print_node(n.a, out);
      out += " ^ " + std::to_string(n.aux) + ")";
      break;
    case ExprKind::Neg:
      out += "(-(";
      print_node(n.a, out);
      out += "))";
      break;
    case ExprKind::Sin: func("sin"); break;
    case ExprKind::Cos: func("cos"); break;
    case ExprKind::Tanh: func("tanh"); break;
    case ExprKind::Sinh: func("sinh"); break;
    case ExprKind::Cosh: func("cosh"); break;
    case ExprKind::Exp: func("exp"); break;
    case ExprKind::Log: func("log"); break;
    case ExprKind::Sqrt: func("sqrt"); break;
  }
}

std::string Expr::to_string() const {
  std::string out;
  if (!nodes_.empty()) print_node(static_cast<std::int32_t>(nodes_.size() - 1), out);
  return out;
}

namespace {

bool bits_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace

bool Expr::same_tree(const Expr& other) const {
  if (dim_ != other.dim_ || nodes_.size() != other.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& a = nodes_[i];
    const Node& b = other.nodes_[i];
    if (a.kind != b.kind || a.a != b.a || a.b != b.b || a.aux != b.aux) return false;
    if (a.kind == ExprKind::Const && !bits_equal(a.value, b.value)) return false;
  }
  return true;
}

bool Expr::uses_variable(int index) const {
  for (const Node& n : nodes_)
    if (n.kind == ExprKind::Var && n.aux == index) return true;
  return false;
}

}  // namespace nnde
