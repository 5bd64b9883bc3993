#pragma once

#include <functional>
#include <limits>
#include <utility>

#include "nnde/batch.hpp"

namespace nnde {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int n_interior = 128;
  int n_boundary = 16;
  int max_iters = 5000;
  int stop_window = 500;    // iterations per comparison window
  double stop_ratio = 1e-3; // minimum relative improvement per window
  int resample_every = 1;   // steps between fresh collocation draws
  std::uint64_t seed = 0;
  double boundary_weight = 1.0;

  void check() const;
};

struct IterRecord {
  int iter = 0;
  double loss_interior = 0.0;
  double loss_boundary = 0.0;
  double loss_total = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

enum class StopReason { Converged, MaxIters, Aborted };

std::string to_string(StopReason r);

struct TrainReport {
  std::vector<IterRecord> records;
  StopReason stop = StopReason::MaxIters;
  std::string diagnostic;  // set when aborted
  double best_loss = std::numeric_limits<double>::infinity();
  int best_iter = -1;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
};

/// Evaluates (interior, boundary) loss parts at `params` on the given
/// collocation points and writes d(interior + lambda*boundary)/dparams.
using LossAssembly =
    std::function<LossParts(std::span<const double> params, const Points& interior,
                            const Points& boundary, double lambda, std::span<double> grad)>;

/// Adam loop over freshly sampled collocation batches. Stops when the mean
/// total loss over the last stop_window iterations exceeds (1 - stop_ratio)
/// times the mean over the window before, or at max_iters. Returns the
/// best-loss parameters seen. A non-finite loss aborts with a diagnostic.
std::pair<ParameterVector, TrainReport> train(const DomainSpec& dom,
                                              const LossAssembly& assemble,
                                              ParameterVector initial,
                                              const OptimizerConfig& opt, bool use_boundary);

/// Trains the primary stage of `model` in place.
TrainReport train_primary_stage(CorrectedModel& model, const NetworkConfig& cfg,
                                const OptimizerConfig& opt, ExecPolicy policy);

/// Trains and appends the next correction stage. Init and sampling seeds are
/// offset by the stage index so repeated corrections differ deterministically.
TrainReport train_correction_stage(CorrectedModel& model, const NetworkConfig& ecfg,
                                   const OptimizerConfig& eopt, ExecPolicy policy);

/// Full pipeline: train the primary, then n_corr corrections, each against
/// the error equation of the frozen sum of all earlier stages. A stage that
/// aborts keeps its best parameters and stops the pipeline; earlier stages
/// are untouched.
CorrectedModel algorithm1(std::shared_ptr<const ProblemSpec> p, const NetworkConfig& primary_cfg,
                          const NetworkConfig& corr_cfg, const OptimizerConfig& primary_opt,
                          const OptimizerConfig& corr_opt, int n_corr, const BPrimeForm& form,
                          ExecPolicy policy, std::vector<TrainReport>* reports = nullptr);

}  // namespace nnde
