#include "nnde/correction.hpp"

#include <charconv>
#include <cmath>

namespace nnde {

BPrimeForm BPrimeForm::parse(std::string_view text) {
  if (text == "exact") return {true, 3};
  if (text.rfind("taylor:", 0) == 0) {
    int k = 0;
    auto res = std::from_chars(text.data() + 7, text.data() + text.size(), k);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || k < 1)
      throw ConfigError("bprime form: expected taylor:K with K >= 1");
    return {false, k};
  }
  throw ConfigError("bprime form must be 'exact' or 'taylor:K'");
}

std::string BPrimeForm::to_string() const {
  return exact ? "exact" : "taylor:" + std::to_string(taylor_order);
}

namespace {

double binomial(int k, int j) {
  double acc = 1.0;
  for (int i = 1; i <= j; ++i) acc = acc * (k - (j - i)) / i;
  return acc;
}

double bprime_taylor(const NonlinearitySpec& B, int order, double n, double e) {
  double acc = 0.0, epow = 1.0, fact = 1.0;
  for (int i = 1; i <= order; ++i) {
    epow *= e;
    fact *= i;
    acc += B.b_deriv(n, i) * epow / fact;
  }
  return acc;
}

double bprime_taylor_de(const NonlinearitySpec& B, int order, double n, double e) {
  double acc = 0.0, epow = 1.0, fact = 1.0;
  for (int i = 1; i <= order; ++i) {
    if (i >= 2) {
      epow *= e;
      fact *= i - 1;
    }
    acc += B.b_deriv(n, i) * epow / fact;
  }
  return acc;
}

}  // namespace

double bprime(const NonlinearitySpec& B, const BPrimeForm& form, double n, double e) {
  if (!form.exact) return bprime_taylor(B, form.taylor_order, n, e);
  switch (B.kind) {
    case NonlinKind::Zero:
      return 0.0;
    case NonlinKind::Quadratic:
      return B.a * (e * e + 2.0 * n * e);
    case NonlinKind::Polynomial: {
      // sum_k a_k [(n+e)^k - n^k] expanded binomially: every term carries a
      // power of e, so there is no cancellation for |e| << |n|.
      double acc = 0.0;
      for (std::size_t i = 0; i < B.poly.size(); ++i) {
        const int k = static_cast<int>(i) + 2;
        double term = 0.0;
        double epow = 1.0;
        for (int j = 1; j <= k; ++j) {
          epow *= e;
          double npow = 1.0;
          for (int t = 0; t < k - j; ++t) npow *= n;
          term += binomial(k, j) * npow * epow;
        }
        acc += B.poly[i] * term;
      }
      return acc;
    }
    case NonlinKind::Sinh: {
      // cosh(e) - 1 = 2 sinh^2(e/2)
      const double she2 = std::sinh(0.5 * e);
      return B.a * (std::cosh(n) * std::sinh(e) + std::sinh(n) * 2.0 * she2 * she2);
    }
    case NonlinKind::Exp:
      return B.a * std::exp(n) * std::expm1(e);
  }
  return 0.0;
}

double bprime_de(const NonlinearitySpec& B, const BPrimeForm& form, double n, double e) {
  if (!form.exact) return bprime_taylor_de(B, form.taylor_order, n, e);
  return B.b_deriv(n + e, 1);
}

double error_residual(const ProblemSpec& p, const Jet& frozen, const Jet& cand,
                      const BPrimeForm& form, int comp, std::span<const double> x,
                      ExprScratch& scratch) {
  CoeffValues c;
  eval_coeffs(p.linear, x, scratch, c);
  const double f_of_n =
      apply_linear(c, frozen) + p.nonlin.b(frozen.value) + p.source_value(comp, x, scratch, c);
  return apply_linear(c, cand) + bprime(p.nonlin, form, frozen.value, cand.value) + f_of_n;
}

}  // namespace nnde
