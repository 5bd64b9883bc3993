#include "nnde/batch.hpp"

#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nnde {

namespace {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

void ensure_workspace(BatchWorkspace& bw, int threads, std::size_t rows, std::size_t m,
                      bool rowwise, int output_dim, int input_dim) {
  if (bw.per_thread.size() < static_cast<std::size_t>(threads))
    bw.per_thread.resize(static_cast<std::size_t>(threads));
  if (bw.adj.size() < static_cast<std::size_t>(threads))
    bw.adj.resize(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    auto& adj = bw.adj[static_cast<std::size_t>(t)];
    adj.resize(static_cast<std::size_t>(output_dim));
    for (auto& a : adj) a.d_grad.resize(static_cast<std::size_t>(input_dim));
  }
  bw.row_loss.assign(rows, 0.0);
  if (rowwise) {
    bw.row_grad.assign(rows * m, 0.0);
  } else {
    bw.thread_grad.resize(static_cast<std::size_t>(threads));
    for (auto& g : bw.thread_grad) g.assign(m, 0.0);
  }
}

/// Runs `body(row, thread_ctx)` over rows under the chosen policy, then
/// reduces row/thread contributions in a fixed order. `body` writes the
/// squared-residual sum of its row into row_loss and its gradient
/// contribution into the provided span.
template <typename Body>
void run_rows(BatchWorkspace& bw, std::size_t rows, std::size_t m, ExecPolicy policy,
              std::span<double> grad, const Body& body) {
  bool failed = false;
  std::string first_error;

  auto guarded = [&](std::size_t i, int tid, std::span<double> gslice) {
    try {
      body(i, bw.per_thread[static_cast<std::size_t>(tid)], bw.adj[static_cast<std::size_t>(tid)],
           gslice);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical(nnde_batch_error)
#endif
      {
        if (!failed) {
          failed = true;
          first_error = e.what();
        }
      }
    }
  };

  if (policy == ExecPolicy::Serial) {
    for (std::size_t i = 0; i < rows; ++i)
      guarded(i, 0, std::span<double>(bw.row_grad.data() + i * m, m));
  } else if (policy == ExecPolicy::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      guarded(si, thread_id(), std::span<double>(bw.row_grad.data() + si * m, m));
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows); ++i) {
      const int tid = thread_id();
      guarded(static_cast<std::size_t>(i), tid,
              std::span<double>(bw.thread_grad[static_cast<std::size_t>(tid)]));
    }
  }

  if (failed) throw EvalError(first_error);

  std::fill(grad.begin(), grad.end(), 0.0);
  if (policy == ExecPolicy::ParallelFast) {
    for (const auto& tg : bw.thread_grad)
      for (std::size_t k = 0; k < m; ++k) grad[k] += tg[k];
  } else {
    for (std::size_t i = 0; i < rows; ++i) {
      const double* row = bw.row_grad.data() + i * m;
      for (std::size_t k = 0; k < m; ++k) grad[k] += row[k];
    }
  }
}

LossParts reduce_losses(const BatchWorkspace& bw, std::size_t n_int, std::size_t n_bd) {
  LossParts parts;
  for (std::size_t i = 0; i < n_int; ++i) parts.interior += bw.row_loss[i];
  for (std::size_t i = 0; i < n_bd; ++i) parts.boundary += bw.row_loss[n_int + i];
  if (n_int > 0) parts.interior /= static_cast<double>(n_int);
  if (n_bd > 0) parts.boundary /= static_cast<double>(n_bd);
  return parts;
}

}  // namespace

LossParts primary_loss_grad(const ProblemSpec& p, const NetworkConfig& cfg,
                            std::span<const double> params, const Points& interior,
                            const Points& boundary, double lambda, std::span<double> grad,
                            ExecPolicy policy, BatchWorkspace& bw) {
  const bool hard = p.mode == ConstraintMode::Hard;
  const std::size_t n_int = interior.count();
  const std::size_t n_bd = hard ? 0 : boundary.count();
  if (n_int == 0) throw Error("primary loss requires interior points");
  if (!hard && n_bd == 0) throw Error("primary loss requires boundary points in soft mode");
  const std::size_t m = param_count(cfg);
  if (grad.size() != m) throw Error("gradient buffer length mismatch");
  const std::size_t rows = n_int + n_bd;
  const bool rowwise = policy != ExecPolicy::ParallelFast;
  ensure_workspace(bw, max_threads(), rows, m, rowwise, cfg.output_dim, cfg.input_dim);

  const int D = cfg.output_dim;
  const HardWrap wrap{&p, true};

  run_rows(bw, rows, m, policy, grad,
           [&](std::size_t row, Workspace& ws, NetAdjoint& adj, std::span<double> gslice) {
             const bool is_interior = row < n_int;
             auto x = is_interior ? interior.at(row) : boundary.at(row - n_int);
             forward_jet(cfg, params, x, ws.net, ws.jets_a);
             if (hard) wrap.forward(x, ws.expr, ws.jets_a, ws.jet_tmp);

             double loss = 0.0;
             if (is_interior) {
               eval_coeffs(p.linear, x, ws.expr, ws.coeffs);
               for (int c = 0; c < D; ++c) {
                 const Jet& j = ws.jets_a[static_cast<std::size_t>(c)];
                 const double r = apply_linear(ws.coeffs, j) + p.nonlin.b(j.value) +
                                  p.source_value(c, x, ws.expr, ws.coeffs);
                 loss += r * r;
                 const double scale = 2.0 * r / static_cast<double>(n_int);
                 auto& a = adj[static_cast<std::size_t>(c)];
                 a.d_value = scale * (ws.coeffs.c0 + p.nonlin.b_deriv(j.value, 1));
                 a.d_lap = scale * ws.coeffs.c2;
                 for (std::size_t t = 0; t < a.d_grad.size(); ++t)
                   a.d_grad[t] = scale * ws.coeffs.c1[t];
               }
             } else {
               for (int c = 0; c < D; ++c) {
                 const Jet& j = ws.jets_a[static_cast<std::size_t>(c)];
                 const double diff =
                     j.value - p.boundary[static_cast<std::size_t>(c)].eval(x, ws.expr);
                 loss += diff * diff;
                 auto& a = adj[static_cast<std::size_t>(c)];
                 a.set_zero();
                 a.d_value = lambda * 2.0 * diff / static_cast<double>(n_bd);
               }
             }
             if (hard) wrap.pull(x, adj);
             bw.row_loss[row] = loss;
             backward_params(cfg, params, ws.net, adj, gslice);
           });

  return reduce_losses(bw, n_int, n_bd);
}

LossParts correction_loss_grad(const ProblemSpec& p, const CorrectedModel& frozen,
                               const NetworkConfig& ecfg, std::span<const double> eparams,
                               const BPrimeForm& form, const Points& interior,
                               const Points& boundary, double lambda, std::span<double> grad,
                               ExecPolicy policy, BatchWorkspace& bw) {
  const bool hard = p.mode == ConstraintMode::Hard;
  const std::size_t n_int = interior.count();
  const std::size_t n_bd = hard ? 0 : boundary.count();
  if (n_int == 0) throw Error("correction loss requires interior points");
  if (!hard && n_bd == 0) throw Error("correction loss requires boundary points in soft mode");
  const std::size_t m = param_count(ecfg);
  if (grad.size() != m) throw Error("gradient buffer length mismatch");
  const std::size_t rows = n_int + n_bd;
  const bool rowwise = policy != ExecPolicy::ParallelFast;
  ensure_workspace(bw, max_threads(), rows, m, rowwise, ecfg.output_dim, ecfg.input_dim);

  const int D = ecfg.output_dim;
  const HardWrap ewrap{&p, false};

  run_rows(bw, rows, m, policy, grad,
           [&](std::size_t row, Workspace& ws, NetAdjoint& adj, std::span<double> gslice) {
             const bool is_interior = row < n_int;
             auto x = is_interior ? interior.at(row) : boundary.at(row - n_int);
             frozen.aggregate_jets(x, ws, ws.jets_b);
             forward_jet(ecfg, eparams, x, ws.net, ws.jets_a);
             if (hard) ewrap.forward(x, ws.expr, ws.jets_a, ws.jet_tmp);

             double loss = 0.0;
             if (is_interior) {
               eval_coeffs(p.linear, x, ws.expr, ws.coeffs);
               for (int c = 0; c < D; ++c) {
                 const Jet& nj = ws.jets_b[static_cast<std::size_t>(c)];
                 const Jet& ej = ws.jets_a[static_cast<std::size_t>(c)];
                 const double f_n = apply_linear(ws.coeffs, nj) + p.nonlin.b(nj.value) +
                                    p.source_value(c, x, ws.expr, ws.coeffs);
                 const double r = apply_linear(ws.coeffs, ej) +
                                  bprime(p.nonlin, form, nj.value, ej.value) + f_n;
                 loss += r * r;
                 const double scale = 2.0 * r / static_cast<double>(n_int);
                 auto& a = adj[static_cast<std::size_t>(c)];
                 a.d_value =
                     scale * (ws.coeffs.c0 + bprime_de(p.nonlin, form, nj.value, ej.value));
                 a.d_lap = scale * ws.coeffs.c2;
                 for (std::size_t t = 0; t < a.d_grad.size(); ++t)
                   a.d_grad[t] = scale * ws.coeffs.c1[t];
               }
             } else {
               for (int c = 0; c < D; ++c) {
                 const Jet& nj = ws.jets_b[static_cast<std::size_t>(c)];
                 const Jet& ej = ws.jets_a[static_cast<std::size_t>(c)];
                 const double target =
                     p.boundary[static_cast<std::size_t>(c)].eval(x, ws.expr) - nj.value;
                 const double diff = ej.value - target;
                 loss += diff * diff;
                 auto& a = adj[static_cast<std::size_t>(c)];
                 a.set_zero();
                 a.d_value = lambda * 2.0 * diff / static_cast<double>(n_bd);
               }
             }
             if (hard) ewrap.pull(x, adj);
             bw.row_loss[row] = loss;
             backward_params(ecfg, eparams, ws.net, adj, gslice);
           });

  return reduce_losses(bw, n_int, n_bd);
}

LossParts primary_loss_value(const ProblemSpec& p, const JetModel& model,
                             const Points& interior, const Points& boundary, Workspace& ws) {
  const bool hard = p.mode == ConstraintMode::Hard;
  LossParts parts;
  const std::size_t n_int = interior.count();
  if (n_int == 0) throw Error("primary loss requires interior points");
  for (std::size_t i = 0; i < n_int; ++i) {
    auto x = interior.at(i);
    model.eval(x, ws, ws.jets_a);
    for (std::size_t c = 0; c < ws.jets_a.size(); ++c) {
      const double r = p.residual(ws.jets_a[c], static_cast<int>(c), x, ws.expr);
      parts.interior += r * r;
    }
  }
  parts.interior /= static_cast<double>(n_int);
  const std::size_t n_bd = hard ? 0 : boundary.count();
  for (std::size_t i = 0; i < n_bd; ++i) {
    auto x = boundary.at(i);
    model.eval(x, ws, ws.jets_a);
    for (std::size_t c = 0; c < ws.jets_a.size(); ++c) {
      const double diff = ws.jets_a[c].value - p.boundary[c].eval(x, ws.expr);
      parts.boundary += diff * diff;
    }
  }
  if (n_bd > 0) parts.boundary /= static_cast<double>(n_bd);
  return parts;
}

LossParts correction_loss_value(const ProblemSpec& p, const JetModel& frozen,
                                const JetModel& cand, const BPrimeForm& form,
                                const Points& interior, const Points& boundary, Workspace& ws) {
  const bool hard = p.mode == ConstraintMode::Hard;
  LossParts parts;
  const std::size_t n_int = interior.count();
  if (n_int == 0) throw Error("correction loss requires interior points");
  for (std::size_t i = 0; i < n_int; ++i) {
    auto x = interior.at(i);
    frozen.eval(x, ws, ws.jets_b);
    cand.eval(x, ws, ws.jets_a);
    for (std::size_t c = 0; c < ws.jets_a.size(); ++c) {
      const double r = error_residual(p, ws.jets_b[c], ws.jets_a[c], form, static_cast<int>(c),
                                      x, ws.expr);
      parts.interior += r * r;
    }
  }
  parts.interior /= static_cast<double>(n_int);
  const std::size_t n_bd = hard ? 0 : boundary.count();
  for (std::size_t i = 0; i < n_bd; ++i) {
    auto x = boundary.at(i);
    frozen.eval(x, ws, ws.jets_b);
    cand.eval(x, ws, ws.jets_a);
    for (std::size_t c = 0; c < ws.jets_a.size(); ++c) {
      const double target = p.boundary[c].eval(x, ws.expr) - ws.jets_b[c].value;
      const double diff = ws.jets_a[c].value - target;
      parts.boundary += diff * diff;
    }
  }
  if (n_bd > 0) parts.boundary /= static_cast<double>(n_bd);
  return parts;
}

}  // namespace nnde
