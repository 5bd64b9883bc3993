#include "nnde/problem.hpp"

#include <cmath>

namespace nnde {

double NonlinearitySpec::b(double u) const {
  switch (kind) {
    case NonlinKind::Zero: return 0.0;
    case NonlinKind::Quadratic: return a * u * u;
    case NonlinKind::Polynomial: {
      // Horner over u^k, k = 2..K
      double acc = 0.0;
      for (std::size_t i = poly.size(); i-- > 0;) acc = acc * u + poly[i];
      return acc * u * u;
    }
    case NonlinKind::Sinh: return a * std::sinh(u);
    case NonlinKind::Exp: return a * std::exp(u);
  }
  return 0.0;
}

double NonlinearitySpec::b_deriv(double u, int order) const {
  switch (kind) {
    case NonlinKind::Zero: return 0.0;
    case NonlinKind::Quadratic:
      if (order == 1) return 2.0 * a * u;
      if (order == 2) return 2.0 * a;
      return 0.0;
    case NonlinKind::Polynomial: {
      double acc = 0.0;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const int k = static_cast<int>(i) + 2;
        if (k < order) continue;
        double fall = 1.0;
        for (int j = 0; j < order; ++j) fall *= k - j;
        double up = 1.0;
        for (int j = 0; j < k - order; ++j) up *= u;
        acc += poly[i] * fall * up;
      }
      return acc;
    }
    case NonlinKind::Sinh: return a * (order % 2 == 0 ? std::sinh(u) : std::cosh(u));
    case NonlinKind::Exp: return a * std::exp(u);
  }
  return 0.0;
}

void eval_coeffs(const LinearOpSpec& A, std::span<const double> x, ExprScratch& scratch,
                 CoeffValues& out) {
  out.c0 = A.c0.eval(x, scratch);
  out.c1.resize(A.c1.size());
  for (std::size_t i = 0; i < A.c1.size(); ++i) out.c1[i] = A.c1[i].eval(x, scratch);
  out.c2 = A.c2.eval(x, scratch);
}

double apply_linear(const CoeffValues& c, const Jet& j) {
  double acc = c.c0 * j.value + c.c2 * j.lap;
  for (std::size_t i = 0; i < c.c1.size(); ++i) acc += c.c1[i] * j.grad[i];
  return acc;
}

double apply_linear(const LinearOpSpec& A, const Jet& j, std::span<const double> x) {
  ExprScratch scratch;
  CoeffValues c;
  eval_coeffs(A, x, scratch, c);
  return apply_linear(c, j);
}

void ProblemSpec::check() const {
  domain.check();
  const int d = domain.dim();
  if (output_dim < 1) throw ConfigError("output dimension must be >= 1");
  auto check_expr = [&](const Expr& e, const char* what) {
    if (e.empty()) throw ConfigError(std::string("missing expression: ") + what);
    if (e.dim() != d) throw ConfigError(std::string(what) + ": wrong dimension");
  };
  check_expr(linear.c0, "A coefficient c0");
  if (static_cast<int>(linear.c1.size()) != d)
    throw ConfigError("A coefficient c1 must have one expression per dimension");
  for (const Expr& e : linear.c1) check_expr(e, "A coefficient c1");
  check_expr(linear.c2, "A coefficient c2");
  if (source_kind == SourceKind::Explicit) {
    if (static_cast<int>(source.size()) != output_dim)
      throw ConfigError("explicit source needs one expression per output component");
    for (const Expr& e : source) check_expr(e, "source");
  } else if (!phi.has_value()) {
    throw ConfigError("manufactured source requires a solution oracle");
  }
  if (static_cast<int>(boundary.size()) != output_dim)
    throw ConfigError("boundary data needs one expression per output component");
  for (const Expr& e : boundary) check_expr(e, "boundary data");
  if (phi.has_value()) {
    if (static_cast<int>(phi->size()) != output_dim)
      throw ConfigError("solution oracle needs one expression per output component");
    for (const Expr& e : *phi) check_expr(e, "solution oracle");
  }
  if (mode == ConstraintMode::Hard) {
    for (const Expr& e : boundary)
      if (e.uses_variable(d - 1))
        throw ConfigError(
            "hard-constraint mode requires boundary data independent of the "
            "time-like coordinate x" + std::to_string(d - 1));
  }
}

double ProblemSpec::source_value(int comp, std::span<const double> x,
                                 ExprScratch& scratch) const {
  if (source_kind == SourceKind::Explicit)
    return source[static_cast<std::size_t>(comp)].eval(x, scratch);
  CoeffValues c;
  eval_coeffs(linear, x, scratch, c);
  return source_value(comp, x, scratch, c);
}

double ProblemSpec::source_value(int comp, std::span<const double> x, ExprScratch& scratch,
                                 const CoeffValues& coeffs) const {
  if (source_kind == SourceKind::Explicit)
    return source[static_cast<std::size_t>(comp)].eval(x, scratch);
  Jet pj;
  (*phi)[static_cast<std::size_t>(comp)].eval_jet(x, scratch, pj);
  return -apply_linear(coeffs, pj) - nonlin.b(pj.value);
}

double ProblemSpec::residual(const Jet& j, int comp, std::span<const double> x,
                             ExprScratch& scratch) const {
  CoeffValues c;
  eval_coeffs(linear, x, scratch, c);
  return apply_linear(c, j) + nonlin.b(j.value) + source_value(comp, x, scratch, c);
}

std::vector<double> residual_F(const ProblemSpec& p, const std::vector<Jet>& jets,
                               std::span<const double> x) {
  ExprScratch scratch;
  std::vector<double> out(jets.size());
  for (std::size_t c = 0; c < jets.size(); ++c)
    out[c] = p.residual(jets[c], static_cast<int>(c), x, scratch);
  return out;
}

ProblemSpec manufacture(std::vector<Expr> phi, LinearOpSpec A, NonlinearitySpec B,
                        DomainSpec dom, ConstraintMode mode) {
  ProblemSpec p;
  p.domain = std::move(dom);
  p.linear = std::move(A);
  p.nonlin = std::move(B);
  p.source_kind = SourceKind::Manufactured;
  p.boundary = phi;
  p.phi = std::move(phi);
  p.output_dim = static_cast<int>(p.boundary.size());
  p.mode = mode;
  p.check();
  return p;
}

namespace {

LinearOpSpec laplacian_op(int d) {
  LinearOpSpec A;
  A.c0 = Expr::constant(0.0, d);
  for (int i = 0; i < d; ++i) A.c1.push_back(Expr::constant(0.0, d));
  A.c2 = Expr::constant(1.0, d);
  return A;
}

DomainSpec unit_box(int d) {
  DomainSpec dom;
  dom.lo.assign(static_cast<std::size_t>(d), 0.0);
  dom.hi.assign(static_cast<std::size_t>(d), 1.0);
  return dom;
}

}  // namespace

ProblemSpec zoo_problem(std::string_view name) {
  if (name == "z1") {
    // u'' + sinh(u) + g = 0 on [0,1], phi = sin(pi x)
    return manufacture({Expr::parse("sin(pi*x)", 1)}, laplacian_op(1),
                       NonlinearitySpec::sinh(1.0), unit_box(1));
  }
  if (name == "z2") {
    // u' - u + u^2 + g = 0 on [0,1], phi = 1/(1+exp(-4(x-0.5)))
    LinearOpSpec A;
    A.c0 = Expr::parse("-1", 1);
    A.c1.push_back(Expr::constant(1.0, 1));
    A.c2 = Expr::constant(0.0, 1);
    return manufacture({Expr::parse("1/(1+exp(-4*(x-0.5)))", 1)}, std::move(A),
                       NonlinearitySpec::quadratic(1.0), unit_box(1));
  }
  if (name == "z3") {
    // lap u + sinh(u) + g = 0 on [0,1]^3, phi = sin(pi x) sin(pi y) sin(pi z)
    return manufacture({Expr::parse("sin(pi*x)*sin(pi*y)*sin(pi*z)", 3)}, laplacian_op(3),
                       NonlinearitySpec::sinh(1.0), unit_box(3));
  }
  if (name == "z4") {
    // lap u + exp(u) + g = 0 on [0,1]^2, phi = x y (1-x) (1-y)
    return manufacture({Expr::parse("x*y*(1-x)*(1-y)", 2)}, laplacian_op(2),
                       NonlinearitySpec::exp(1.0), unit_box(2));
  }
  throw ConfigError("unknown zoo problem '" + std::string(name) + "'");
}

std::vector<std::string> zoo_names() { return {"z1", "z2", "z3", "z4"}; }

}  // namespace nnde
