#pragma once

#include <cstddef>
#include <vector>

namespace nnde {

/// Value, gradient and Laplacian of a scalar field at one point.
/// Propagation rules close over sums, products, quotients and analytic
/// compositions: for a product, lap(fg) = f lap(g) + g lap(f) + 2 grad(f).grad(g);
/// for a composition h(f), lap(h(f)) = h''(f) |grad f|^2 + h'(f) lap(f).
struct Jet {
  double value = 0.0;
  std::vector<double> grad;
  double lap = 0.0;

  Jet() = default;
  explicit Jet(std::size_t dim) : grad(dim, 0.0) {}

  std::size_t dim() const { return grad.size(); }

  void set_zero() {
    value = 0.0;
    lap = 0.0;
    for (double& g : grad) g = 0.0;
  }
};

/// Sensitivity of a scalar objective to one Jet: pairs with (value, grad, lap).
struct JetAdjoint {
  double d_value = 0.0;
  std::vector<double> d_grad;
  double d_lap = 0.0;

  JetAdjoint() = default;
  explicit JetAdjoint(std::size_t dim) : d_grad(dim, 0.0) {}

  void set_zero() {
    d_value = 0.0;
    d_lap = 0.0;
    for (double& g : d_grad) g = 0.0;
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace nnde
