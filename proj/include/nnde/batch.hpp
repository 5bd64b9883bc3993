#pragma once

#include <span>

#include "nnde/model.hpp"
#include "nnde/sampling.hpp"

namespace nnde {

/// How batch reductions run.
///  - Serial: reference implementation, one thread, contributions summed in
///    point order.
///  - Parallel: OpenMP point loop with the same fixed-order reduction;
///    bit-identical to Serial for any thread count.
///  - ParallelFast: OpenMP point loop with per-thread accumulators merged in
///    thread order; cheaper, not bit-stable across thread counts.
enum class ExecPolicy { Serial, Parallel, ParallelFast };

struct LossParts {
  double interior = 0.0;
  double boundary = 0.0;
};

/// Reusable buffers for batched loss/gradient assembly.
struct BatchWorkspace {
  std::vector<Workspace> per_thread;
  std::vector<double> row_loss;
  std::vector<double> row_grad;  // rows x M, Parallel/Serial policies
  std::vector<std::vector<double>> thread_grad;
  std::vector<NetAdjoint> adj;  // one per thread
};

/// Collocation loss of the primary network:
///   interior = mean over x1 of |F[N](x1)|^2   (summed over components)
///   boundary = mean over x2 of |N(x2) - data(x2)|^2
/// `grad` (length M, overwritten) receives d(interior + lambda*boundary)/dw.
/// In Hard mode the network is wrapped with the slice data and the boundary
/// term is dropped.
LossParts primary_loss_grad(const ProblemSpec& p, const NetworkConfig& cfg,
                            std::span<const double> params, const Points& interior,
                            const Points& boundary, double lambda, std::span<double> grad,
                            ExecPolicy policy, BatchWorkspace& bw);

/// Collocation loss of a correction network against the error equation:
///   interior = mean |A[e] + B'(N, e) + F[N]|^2 with N the frozen aggregate
///   boundary = mean |e(x2) - (data(x2) - N(x2))|^2
/// Gradient is with respect to the correction parameters only.
LossParts correction_loss_grad(const ProblemSpec& p, const CorrectedModel& frozen,
                               const NetworkConfig& ecfg, std::span<const double> eparams,
                               const BPrimeForm& form, const Points& interior,
                               const Points& boundary, double lambda, std::span<double> grad,
                               ExecPolicy policy, BatchWorkspace& bw);

/// Loss values only, for any jet model (no parameter gradient).
LossParts primary_loss_value(const ProblemSpec& p, const JetModel& model,
                             const Points& interior, const Points& boundary, Workspace& ws);
LossParts correction_loss_value(const ProblemSpec& p, const JetModel& frozen,
                                const JetModel& cand, const BPrimeForm& form,
                                const Points& interior, const Points& boundary, Workspace& ws);

}  // namespace nnde
