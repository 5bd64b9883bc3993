#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnde/expr.hpp"
#include "nnde/jet.hpp"
#include "nnde/sampling.hpp"

namespace nnde {

enum class NonlinKind : std::uint8_t { Zero, Quadratic, Polynomial, Sinh, Exp };

/// Pointwise nonlinearity b(u) with derivatives of any order.
struct NonlinearitySpec {
  NonlinKind kind = NonlinKind::Zero;
  double a = 0.0;            // scale for Quadratic/Sinh/Exp
  std::vector<double> poly;  // Polynomial: poly[k-2] multiplies u^k, k = 2..

  double b(double u) const;
  /// i-th derivative of b, i >= 1.
  double b_deriv(double u, int order) const;

  static NonlinearitySpec zero() { return {}; }
  static NonlinearitySpec quadratic(double a) { return {NonlinKind::Quadratic, a, {}}; }
  static NonlinearitySpec polynomial(std::vector<double> coeffs) {
    return {NonlinKind::Polynomial, 0.0, std::move(coeffs)};
  }
  static NonlinearitySpec sinh(double a) { return {NonlinKind::Sinh, a, {}}; }
  static NonlinearitySpec exp(double a) { return {NonlinKind::Exp, a, {}}; }
};

/// A[u](x) = c0(x) u(x) + sum_i c1_i(x) d_i u(x) + c2(x) lap u(x),
/// applied per output component.
struct LinearOpSpec {
  Expr c0;
  std::vector<Expr> c1;
  Expr c2;
};

/// Coefficient values of A at one point.
struct CoeffValues {
  double c0 = 0.0;
  std::vector<double> c1;
  double c2 = 0.0;
};

void eval_coeffs(const LinearOpSpec& A, std::span<const double> x, ExprScratch& scratch,
                 CoeffValues& out);
double apply_linear(const CoeffValues& c, const Jet& j);
double apply_linear(const LinearOpSpec& A, const Jet& j, std::span<const double> x);

enum class SourceKind : std::uint8_t { Explicit, Manufactured };
enum class ConstraintMode : std::uint8_t { Soft, Hard };

/// F[u] = A[u] + b(u) + g on a box domain with Dirichlet constraint data.
/// In Hard mode the constrained set is the slice x_{d-1} = lower bound and
/// boundary data must not reference that coordinate.
struct ProblemSpec {
  DomainSpec domain;
  LinearOpSpec linear;
  NonlinearitySpec nonlin;
  SourceKind source_kind = SourceKind::Explicit;
  std::vector<Expr> source;              // Explicit only, one per component
  std::vector<Expr> boundary;            // Dirichlet data, one per component
  std::optional<std::vector<Expr>> phi;  // solution oracle
  int output_dim = 1;
  ConstraintMode mode = ConstraintMode::Soft;

  void check() const;
  bool has_oracle() const { return phi.has_value(); }

  /// g(x) for one component: the explicit expression, or -A[phi] - b(phi)
  /// when manufactured.
  double source_value(int comp, std::span<const double> x, ExprScratch& scratch) const;
  double source_value(int comp, std::span<const double> x, ExprScratch& scratch,
                      const CoeffValues& coeffs) const;

  /// F[u](x) for one component given u's jet at x.
  double residual(const Jet& j, int comp, std::span<const double> x, ExprScratch& scratch) const;
};

/// F[u](x) for all components.
std::vector<double> residual_F(const ProblemSpec& p, const std::vector<Jet>& jets,
                               std::span<const double> x);

/// Problem with known solution: source g := -A[phi] - b(phi), boundary data
/// phi, oracle phi; F[phi] vanishes identically.
ProblemSpec manufacture(std::vector<Expr> phi, LinearOpSpec A, NonlinearitySpec B,
                        DomainSpec dom, ConstraintMode mode = ConstraintMode::Soft);

/// Built-in manufactured problems: z1, z2, z3, z4.
ProblemSpec zoo_problem(std::string_view name);
std::vector<std::string> zoo_names();

}  // namespace nnde
