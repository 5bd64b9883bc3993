#pragma once

// Finite-difference oracles and generators shared by the test suites. These
// must stay independent of the jet propagation paths they check: they only
// call scalar evaluation entry points.

#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace testutil {

// Relative closeness with an absolute fallback below `mag`: the reference
// magnitude decides which criterion applies.
inline bool close(double got, double want, double rel, double abs, double mag) {
  const double diff = std::abs(got - want);
  if (std::abs(want) < mag) return diff <= abs;
  return diff <= rel * std::abs(want);
}

// Fourth-order central difference of a scalar function along one coordinate.
inline double fd_partial(const std::function<double(std::span<const double>)>& f,
                         std::vector<double> x, std::size_t i, double h) {
  auto at = [&](double dx) {
    x[i] += dx;
    double v = f(x);
    x[i] -= dx;
    return v;
  };
  return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

// Central difference of a scalar function of one scalar argument.
inline double fd_scalar(const std::function<double(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2 * h);
}

// Fourth-order variant; much lower roundoff floor for smooth functions.
inline double fd_scalar4(const std::function<double(double)>& f, double t, double h) {
  return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
}

// Two-step agreement filter: true when the h and h/2 estimates agree well
// enough that the difference quotient itself is trustworthy at `tol`.
inline bool fd_reliable(double est_h, double est_h2, double tol) {
  const double diff = std::abs(est_h - est_h2);
  return diff <= std::max(tol * 0.1, 0.1 * tol * std::max(std::abs(est_h), std::abs(est_h2)));
}

// Random closed-form expression source text of bounded depth. log and sqrt
// arguments are kept positive by construction.
class ExprSource {
 public:
  ExprSource(std::uint64_t seed, int dim) : eng_(seed), dim_(dim) {}

  std::string gen(int depth) {
    if (depth <= 0) return leaf();
    switch (pick(9)) {
      case 0: return leaf();
      case 1: return "(" + gen(depth - 1) + " + " + gen(depth - 1) + ")";
      case 2: return "(" + gen(depth - 1) + " - " + gen(depth - 1) + ")";
      case 3: return "(" + gen(depth - 1) + " * " + gen(depth - 1) + ")";
      case 4: return "((" + gen(depth - 1) + ") / (2.5 + (" + gen(depth - 1) + ")^2))";
      case 5: return "(" + gen(depth - 1) + ")^" + std::to_string(2 + static_cast<int>(pick(2)));
      case 6: {
        static const char* fns[] = {"sin", "cos", "tanh", "sinh"};
        return std::string(fns[pick(4)]) + "(" + gen(depth - 1) + ")";
      }
      case 7: return "exp(tanh(" + gen(depth - 1) + "))";
      default: {
        const char* fn = pick(2) == 0 ? "log" : "sqrt";
        return std::string(fn) + "(0.5 + (" + gen(depth - 1) + ")^2)";
      }
    }
  }

  std::vector<double> point(double lo, double hi) {
    std::vector<double> x(static_cast<std::size_t>(dim_));
    for (double& v : x) v = lo + (hi - lo) * unit();
    return x;
  }

  double unit() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
  int dim_;

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

  std::string leaf() {
    if (pick(2) == 0 && dim_ > 0) {
      return "x" + std::to_string(pick(static_cast<std::size_t>(dim_)));
    }
    const double c = -2.0 + 4.0 * unit();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", c);
    return buf;
  }
};

}  // namespace testutil
