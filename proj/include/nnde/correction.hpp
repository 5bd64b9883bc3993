#pragma once

#include <span>
#include <string>
#include <string_view>

#include "nnde/problem.hpp"

namespace nnde {

/// How B'(n, e) = b(n+e) - b(n) is generated: closed-form addition formulas
/// or a Taylor expansion around n truncated at `taylor_order`.
struct BPrimeForm {
  bool exact = true;
  int taylor_order = 3;

  static BPrimeForm parse(std::string_view text);  // "exact" | "taylor:K"
  std::string to_string() const;
};

/// B'(n, e). Exact forms avoid the cancellation of a literal
/// b(n+e) - b(n) subtraction.
double bprime(const NonlinearitySpec& B, const BPrimeForm& form, double n, double e);

/// dB'/de; for exact forms this is b'(n+e).
double bprime_de(const NonlinearitySpec& B, const BPrimeForm& form, double n, double e);

/// Residual of the error equation A[e] + B'(N, e) + F[N] at x, one component.
/// `frozen` is the jet of the frozen solution estimate, `cand` the jet of the
/// error-network candidate.
double error_residual(const ProblemSpec& p, const Jet& frozen, const Jet& cand,
                      const BPrimeForm& form, int comp, std::span<const double> x,
                      ExprScratch& scratch);

}  // namespace nnde
