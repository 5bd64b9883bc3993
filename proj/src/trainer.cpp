#include "nnde/trainer.hpp"

#include <chrono>
#include <cmath>

namespace nnde {

void OptimizerConfig::check() const {
  if (learning_rate <= 0 || beta1 <= 0 || beta2 <= 0 || epsilon <= 0)
    throw ConfigError("optimizer rates must be positive");
  if (beta1 >= 1 || beta2 >= 1) throw ConfigError("adam betas must be in (0,1)");
  if (n_interior < 1 || n_boundary < 1) throw ConfigError("point counts must be >= 1");
  if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
  if (stop_window < 1 || resample_every < 1)
    throw ConfigError("stop_window and resample_every must be >= 1");
  if (!(stop_ratio > 0.0 && stop_ratio < 1.0)) throw ConfigError("stop_ratio must be in (0,1)");
  if (boundary_weight <= 0) throw ConfigError("boundary_weight must be positive");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIters: return "max_iters";
    case StopReason::Aborted: return "aborted";
  }
  return "unknown";
}

std::pair<ParameterVector, TrainReport> train(const DomainSpec& dom,
                                              const LossAssembly& assemble,
                                              ParameterVector initial,
                                              const OptimizerConfig& opt, bool use_boundary) {
  opt.check();
  TrainReport report;
  if (opt.max_iters == 0) return {std::move(initial), report};

  ParameterVector params = std::move(initial);
  ParameterVector best = params;
  const std::size_t m = params.size();
  std::vector<double> grad(m, 0.0), adam_m(m, 0.0), adam_v(m, 0.0);

  Rng rng(opt.seed);
  Points interior, boundary;
  boundary.dim = dom.dim();

  // Prefix sums of total losses for O(1) window means.
  std::vector<double> cumsum;
  cumsum.reserve(static_cast<std::size_t>(opt.max_iters) + 1);
  cumsum.push_back(0.0);

  report.records.reserve(static_cast<std::size_t>(opt.max_iters));
  const double lambda = opt.boundary_weight;

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    if (iter % opt.resample_every == 0) {
      interior = sample_interior(dom, static_cast<std::size_t>(opt.n_interior), rng);
      if (use_boundary)
        boundary = sample_boundary(dom, static_cast<std::size_t>(opt.n_boundary), rng);
    }

    LossParts parts;
    try {
      parts = assemble(params, interior, boundary, lambda, grad);
    } catch (const std::exception& e) {
      report.stop = StopReason::Aborted;
      report.diagnostic = std::string("loss evaluation failed at iteration ") +
                          std::to_string(iter) + ": " + e.what();
      return {std::move(best), std::move(report)};
    }
    const double total = parts.interior + lambda * parts.boundary;

    double gnorm2 = 0.0;
    for (double g : grad) gnorm2 += g * g;
    const double gnorm = std::sqrt(gnorm2);

    if (!std::isfinite(total) || !std::isfinite(gnorm)) {
      report.stop = StopReason::Aborted;
      report.diagnostic =
          "non-finite loss or gradient at iteration " + std::to_string(iter);
      return {std::move(best), std::move(report)};
    }

    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    report.records.push_back({iter, parts.interior, parts.boundary, total, gnorm, wall_ms});
    cumsum.push_back(cumsum.back() + total);

    if (total < report.best_loss) {
      report.best_loss = total;
      report.best_iter = iter;
      best = params;
    }

    // Adam with bias correction.
    const double t = static_cast<double>(iter + 1);
    const double bc1 = 1.0 - std::pow(opt.beta1, t);
    const double bc2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t k = 0; k < m; ++k) {
      adam_m[k] = opt.beta1 * adam_m[k] + (1.0 - opt.beta1) * grad[k];
      adam_v[k] = opt.beta2 * adam_v[k] + (1.0 - opt.beta2) * grad[k] * grad[k];
      const double mh = adam_m[k] / bc1;
      const double vh = adam_v[k] / bc2;
      params[k] -= opt.learning_rate * mh / (std::sqrt(vh) + opt.epsilon);
    }

    const std::size_t count = report.records.size();
    const std::size_t w = static_cast<std::size_t>(opt.stop_window);
    if (count >= 2 * w) {
      const double mean_last = (cumsum[count] - cumsum[count - w]) / static_cast<double>(w);
      const double mean_prev =
          (cumsum[count - w] - cumsum[count - 2 * w]) / static_cast<double>(w);
      if (mean_last > (1.0 - opt.stop_ratio) * mean_prev) {
        report.stop = StopReason::Converged;
        break;
      }
    }
  }

  report.final_loss = report.records.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : report.records.back().loss_total;
  return {std::move(best), std::move(report)};
}

TrainReport train_primary_stage(CorrectedModel& model, const NetworkConfig& cfg,
                                const OptimizerConfig& opt, ExecPolicy policy) {
  const ProblemSpec& p = *model.problem;
  BatchWorkspace bw;
  LossAssembly assemble = [&](std::span<const double> params, const Points& interior,
                              const Points& boundary, double lambda, std::span<double> grad) {
    return primary_loss_grad(p, cfg, params, interior, boundary, lambda, grad, policy, bw);
  };
  auto [params, report] =
      train(p.domain, assemble, init_params(cfg), opt, p.mode == ConstraintMode::Soft);
  model.primary = {cfg, std::move(params)};
  return report;
}

TrainReport train_correction_stage(CorrectedModel& model, const NetworkConfig& ecfg,
                                   const OptimizerConfig& eopt, ExecPolicy policy) {
  const ProblemSpec& p = *model.problem;
  const std::uint64_t stage_offset = static_cast<std::uint64_t>(model.n_corrections());
  NetworkConfig cfg = ecfg;
  cfg.init_seed = ecfg.init_seed + stage_offset;
  OptimizerConfig opt = eopt;
  opt.seed = eopt.seed + stage_offset;

  BatchWorkspace bw;
  LossAssembly assemble = [&](std::span<const double> params, const Points& interior,
                              const Points& boundary, double lambda, std::span<double> grad) {
    return correction_loss_grad(p, model, cfg, params, model.form, interior, boundary, lambda,
                                grad, policy, bw);
  };
  auto [params, report] =
      train(p.domain, assemble, init_params(cfg), opt, p.mode == ConstraintMode::Soft);
  model.corrections.push_back({cfg, std::move(params)});
  return report;
}

CorrectedModel algorithm1(std::shared_ptr<const ProblemSpec> p, const NetworkConfig& primary_cfg,
                          const NetworkConfig& corr_cfg, const OptimizerConfig& primary_opt,
                          const OptimizerConfig& corr_opt, int n_corr, const BPrimeForm& form,
                          ExecPolicy policy, std::vector<TrainReport>* reports) {
  if (n_corr < 0) throw ConfigError("number of corrections must be >= 0");
  p->check();
  CorrectedModel model;
  model.problem = std::move(p);
  model.form = form;

  TrainReport rep = train_primary_stage(model, primary_cfg, primary_opt, policy);
  const bool aborted = rep.stop == StopReason::Aborted;
  if (reports) reports->push_back(std::move(rep));
  if (aborted) return model;

  for (int j = 0; j < n_corr; ++j) {
    TrainReport erep = train_correction_stage(model, corr_cfg, corr_opt, policy);
    const bool stage_aborted = erep.stop == StopReason::Aborted;
    if (reports) reports->push_back(std::move(erep));
    if (stage_aborted) break;
  }
  return model;
}

}  // namespace nnde
