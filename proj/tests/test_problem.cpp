#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nnde/net.hpp"
#include "nnde/problem.hpp"
#include "test_util.hpp"

using namespace nnde;

namespace {
constexpr double kPi = std::numbers::pi;

LinearOpSpec lap_op(int d) {
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

Jet jet1(double v, std::vector<double> g, double l) {
  Jet j(g.size());
  j.value = v;
  j.grad = std::move(g);
  j.lap = l;
  return j;
}

}  // namespace

TEST_CASE("nonlinearity variants: values and derivatives") {
  auto q = NonlinearitySpec::quadratic(1.5);
  CHECK(q.b(2.0) == 6.0);
  CHECK(q.b_deriv(2.0, 1) == 6.0);
  CHECK(q.b_deriv(2.0, 2) == 3.0);
  CHECK(q.b_deriv(2.0, 3) == 0.0);

  auto poly = NonlinearitySpec::polynomial({2.0, -1.0});  // 2u^2 - u^3
  CHECK(poly.b(3.0) == 2 * 9.0 - 27.0);
  CHECK(poly.b_deriv(3.0, 1) == 4 * 3.0 - 3 * 9.0);
  CHECK(poly.b_deriv(3.0, 2) == 4.0 - 6 * 3.0);
  CHECK(poly.b_deriv(3.0, 3) == -6.0);
  CHECK(poly.b_deriv(3.0, 4) == 0.0);

  auto sh = NonlinearitySpec::sinh(2.0);
  CHECK(sh.b(0.5) == 2 * std::sinh(0.5));
  CHECK(sh.b_deriv(0.5, 1) == 2 * std::cosh(0.5));
  CHECK(sh.b_deriv(0.5, 2) == 2 * std::sinh(0.5));
  CHECK(sh.b_deriv(0.5, 3) == 2 * std::cosh(0.5));

  auto ex = NonlinearitySpec::exp(0.5);
  for (int i = 1; i <= 4; ++i) CHECK(ex.b_deriv(0.3, i) == 0.5 * std::exp(0.3));
  CHECK(NonlinearitySpec::zero().b(1.7) == 0.0);

  // first derivative against finite differences
  for (const auto& B : {q, poly, sh, ex}) {
    auto f = [&](double u) { return B.b(u); };
    double fd = testutil::fd_scalar(f, 0.4, 1e-6);
    CHECK(testutil::close(B.b_deriv(0.4, 1), fd, 1e-8, 1e-10, 1e-6));
  }
}

TEST_CASE("apply_linear: coefficient selection and linearity") {
  Jet j = jet1(2.0, {3.0}, 5.0);
  CHECK(apply_linear(lap_op(1), j, std::vector<double>{0.3}) == 5.0);

  Jet zero = jet1(0.0, {0.0}, 0.0);
  LinearOpSpec A;
  A.c0 = Expr::parse("x", 1);
  A.c1.push_back(Expr::parse("1", 1));
  A.c2 = Expr::parse("0", 1);
  CHECK(apply_linear(A, zero, std::vector<double>{0.7}) == 0.0);

  // u(x) = x^2 at x=3: jet (9, [6], 2); x*9 + 1*6 = 33
  Jet u = jet1(9.0, {6.0}, 2.0);
  CHECK(apply_linear(A, u, std::vector<double>{3.0}) == 33.0);
}

TEST_CASE("apply_linear is linear in the jet at random points") {
  LinearOpSpec A;
  A.c0 = Expr::parse("sin(x)", 1);
  A.c1.push_back(Expr::parse("x^2", 1));
  A.c2 = Expr::parse("exp(-x)", 1);
  testutil::ExprSource gen(51, 1);
  ExprScratch scratch;
  CoeffValues c;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x{gen.point(-1, 1)};
    eval_coeffs(A, x, scratch, c);
    Jet u = jet1(gen.unit(), {gen.unit()}, gen.unit());
    Jet v = jet1(gen.unit(), {gen.unit()}, gen.unit());
    double alpha = 2 * gen.unit() - 1, beta = 2 * gen.unit() - 1;
    Jet w = jet1(alpha * u.value + beta * v.value, {alpha * u.grad[0] + beta * v.grad[0]},
                 alpha * u.lap + beta * v.lap);
    double lhs = apply_linear(c, w);
    double rhs = alpha * apply_linear(c, u) + beta * apply_linear(c, v);
    CHECK(testutil::close(lhs, rhs, 1e-12, 1e-14, 1e-6));
  }
}

TEST_CASE("manufacture: zero solution, explicit g formulas") {
  // phi = 0 with a c0 term and sinh nonlinearity: g identically 0
  LinearOpSpec A;
  A.c0 = Expr::parse("x", 1);
  A.c1.push_back(Expr::parse("0", 1));
  A.c2 = Expr::parse("1", 1);
  ProblemSpec p0 = manufacture({Expr::parse("0", 1)}, std::move(A), NonlinearitySpec::sinh(1.0),
                               unit_box(1));
  ExprScratch scratch;
  for (double x : {0.1, 0.35, 0.81})
    CHECK(p0.source_value(0, std::vector<double>{x}, scratch) == 0.0);

  // phi = sin(pi x), A = laplacian, B = 0: g = pi^2 sin(pi x)
  ProblemSpec p1 = manufacture({Expr::parse("sin(pi*x)", 1)}, lap_op(1),
                               NonlinearitySpec::zero(), unit_box(1));
  for (double x : {0.12, 0.5, 0.93}) {
    double g = p1.source_value(0, std::vector<double>{x}, scratch);
    CHECK(g == doctest::Approx(kPi * kPi * std::sin(kPi * x)).epsilon(1e-13));
  }

  // z3 source at the center: 3 pi^2 - sinh(1)
  ProblemSpec z3 = zoo_problem("z3");
  double g = z3.source_value(0, std::vector<double>{0.5, 0.5, 0.5}, scratch);
  CHECK(g == doctest::Approx(3 * kPi * kPi - std::sinh(1.0)).epsilon(1e-13));
}

TEST_CASE("residual_F: manufactured oracle jets give zero residual") {
  for (const auto& name : zoo_names()) {
    ProblemSpec p = zoo_problem(name);
    testutil::ExprSource gen(7, p.domain.dim());
    ExprScratch scratch;
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x = gen.point(0.01, 0.99);
      Jet pj = (*p.phi)[0].eval_jet(x);
      CHECK(std::abs(p.residual(pj, 0, x, scratch)) <= 1e-10);
    }
  }
}

TEST_CASE("residual_F: zero net on a linear problem, zero net on z1") {
  // B = 0, A = laplacian, g = 0 explicit: tiny tanh net at x=0 has zero
  // laplacian, so the residual vanishes.
  ProblemSpec lin;
  lin.domain = unit_box(1);
  lin.linear = lap_op(1);
  lin.nonlin = NonlinearitySpec::zero();
  lin.source_kind = SourceKind::Explicit;
  lin.source = {Expr::parse("0", 1)};
  lin.boundary = {Expr::parse("0", 1)};
  lin.check();

  NetworkConfig cfg;
  cfg.input_dim = 1;
  cfg.output_dim = 1;
  cfg.width = 1;
  cfg.depth = 1;
  ParameterVector params{1.0, 0.0, 1.0, 0.0};
  NetJet jets = forward_jet(cfg, params, std::vector<double>{0.0});
  auto r = residual_F(lin, jets, std::vector<double>{0.0});
  CHECK(r.size() == 1);
  CHECK(r[0] == 0.0);

  // z1 with N == 0: sinh(0) = 0, so residual is exactly g
  ProblemSpec z1 = zoo_problem("z1");
  ExprScratch scratch;
  Jet zero = jet1(0.0, {0.0}, 0.0);
  for (double x : {0.2, 0.6}) {
    std::vector<double> pt{x};
    CHECK(z1.residual(zero, 0, pt, scratch) == z1.source_value(0, pt, scratch));
  }
}

TEST_CASE("zoo problems: manufactured residual below 1e-10 at 1e4 points") {
  for (const auto& name : zoo_names()) {
    ProblemSpec p = zoo_problem(name);
    CAPTURE(name);
    Rng rng(99);
    Points pts = sample_interior(p.domain, 10000, rng);
    ExprScratch scratch;
    Jet pj;
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.count(); ++i) {
      auto x = pts.at(i);
      (*p.phi)[0].eval_jet(x, scratch, pj);
      worst = std::max(worst, std::abs(p.residual(pj, 0, x, scratch)));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("zoo problems: boundary data agrees with the oracle on faces") {
  for (const auto& name : zoo_names()) {
    ProblemSpec p = zoo_problem(name);
    CAPTURE(name);
    Rng rng(12);
    Points pts = sample_boundary(p.domain, 1000, rng);
    ExprScratch scratch;
    for (std::size_t i = 0; i < pts.count(); ++i) {
      auto x = pts.at(i);
      double bd = p.boundary[0].eval(x, scratch);
      double phi = (*p.phi)[0].eval(x, scratch);
      CHECK(std::abs(bd - phi) <= 1e-12);
    }
  }
}

TEST_CASE("problem validation errors") {
  ProblemSpec p = zoo_problem("z1");
  p.boundary.clear();
  CHECK_THROWS_AS(p.check(), nnde::ConfigError);

  ProblemSpec bad = zoo_problem("z1");
  bad.linear.c1.clear();
  CHECK_THROWS_AS(bad.check(), nnde::ConfigError);

  CHECK_THROWS_AS(zoo_problem("z9"), nnde::ConfigError);

  // hard mode rejects boundary data that references the time coordinate
  ProblemSpec hard = zoo_problem("z2");
  hard.mode = ConstraintMode::Hard;
  CHECK_THROWS_AS(hard.check(), nnde::ConfigError);
  hard.boundary = {Expr::parse("1/(1+exp(2))", 1)};
  CHECK_NOTHROW(hard.check());
}
