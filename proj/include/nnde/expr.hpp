#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnde/error.hpp"
#include "nnde/jet.hpp"

namespace nnde {

enum class ExprKind : std::uint8_t {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent in `aux`
  Neg,
  Sin,
  Cos,
  Tanh,
  Sinh,
  Cosh,
  Exp,
  Log,
  Sqrt,
};

/// Reusable evaluation buffers; one per thread when evaluating concurrently.
struct ExprScratch {
  std::vector<double> val;
  std::vector<double> lap;
  std::vector<double> grad;  // node-major, dim-minor
};

/// Immutable closed-form scalar expression over x0..x(d-1).
///
/// Nodes live in a flat arena in evaluation order (children precede parents),
/// so both value and jet evaluation are a single forward sweep. Instances are
/// immutable after construction and safe to evaluate from many threads at
/// once as long as each thread uses its own ExprScratch.
class Expr {
 public:
  Expr() = default;

  /// Grammar: usual precedence, parentheses, `+ - * /`, `^` with a constant
  /// integer exponent, functions sin cos tanh sinh cosh exp log sqrt,
  /// variables x0..x(d-1) (aliases x,y,z when d <= 3), constant `pi`,
  /// decimal/scientific number literals.
  static Expr parse(std::string_view text, int dim);

  static Expr constant(double c, int dim);
  static Expr variable(int index, int dim);

  int dim() const { return dim_; }
  bool empty() const { return nodes_.empty(); }
  std::size_t node_count() const { return nodes_.size(); }

  double eval(std::span<const double> x) const;
  double eval(std::span<const double> x, ExprScratch& scratch) const;

  Jet eval_jet(std::span<const double> x) const;
  void eval_jet(std::span<const double> x, ExprScratch& scratch, Jet& out) const;

  /// Fully parenthesized form; parsing it back yields an identical tree.
  std::string to_string() const;

  bool same_tree(const Expr& other) const;
  bool uses_variable(int index) const;

  struct Node {
    ExprKind kind;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int32_t aux = 0;  // Var: variable index; Pow: exponent
    double value = 0.0;    // Const only
    std::uint32_t offset = 0;
  };

 private:
  friend class Parser;
  std::vector<Node> nodes_;
  int dim_ = 0;

  void print_node(std::int32_t idx, std::string& out) const;
};

}  // namespace nnde
