#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nnde/trainer.hpp"
#include "test_util.hpp"

using namespace nnde;

namespace {

OptimizerConfig tiny_opt(int iters, std::uint64_t seed = 1) {
  OptimizerConfig opt;
  opt.n_interior = 16;
  opt.n_boundary = 4;
  opt.max_iters = iters;
  opt.seed = seed;
  return opt;
}

NetworkConfig tiny_net(int d, std::uint64_t seed = 1) {
  NetworkConfig cfg;
  cfg.input_dim = d;
  cfg.width = 4;
  cfg.depth = 1;
  cfg.init_seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("train: max_iters = 0 is a no-op") {
  DomainSpec dom{{0.0}, {1.0}};
  ParameterVector initial{1.0, 2.0, 3.0};
  LossAssembly noop = [](std::span<const double>, const Points&, const Points&, double,
                         std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return LossParts{1.0, 0.0};
  };
  auto [params, report] = train(dom, noop, initial, tiny_opt(0), true);
  CHECK(params == initial);
  CHECK(report.records.empty());
  CHECK(report.stop == StopReason::MaxIters);
}

TEST_CASE("train: report invariants and best-loss tracking") {
  ProblemSpec p = zoo_problem("z1");
  auto sp = std::make_shared<ProblemSpec>(p);
  CorrectedModel model;
  model.problem = sp;
  OptimizerConfig opt = tiny_opt(120);
  opt.boundary_weight = 2.5;
  TrainReport rep = train_primary_stage(model, tiny_net(1), opt, ExecPolicy::Parallel);

  REQUIRE(rep.records.size() == 120);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const IterRecord& r = rep.records[i];
    CHECK(r.iter == static_cast<int>(i));
    CHECK(r.loss_total == r.loss_interior + opt.boundary_weight * r.loss_boundary);
    CHECK(r.grad_norm >= 0.0);
    best = std::min(best, r.loss_total);
  }
  CHECK(rep.best_loss == best);
  CHECK(rep.final_loss == rep.records.back().loss_total);
  // the running-best envelope is non-increasing by construction
  double env = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.records) {
    env = std::min(env, r.loss_total);
    CHECK(env <= r.loss_total);
  }
}

TEST_CASE("train: identical seeds give bit-identical loss sequences") {
  auto run = [&](ExecPolicy policy) {
    auto sp = std::make_shared<ProblemSpec>(zoo_problem("z1"));
    CorrectedModel model;
    model.problem = sp;
    return train_primary_stage(model, tiny_net(1, 3), tiny_opt(60, 9), policy);
  };
  TrainReport a = run(ExecPolicy::Parallel);
  TrainReport b = run(ExecPolicy::Parallel);
  TrainReport c = run(ExecPolicy::Serial);
  REQUIRE(a.records.size() == b.records.size());
  REQUIRE(a.records.size() == c.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].loss_total == b.records[i].loss_total);
    CHECK(a.records[i].loss_total == c.records[i].loss_total);
    CHECK(a.records[i].grad_norm == c.records[i].grad_norm);
  }
}

TEST_CASE("train: windowed stop fires on a flat loss") {
  DomainSpec dom{{0.0}, {1.0}};
  LossAssembly flat = [](std::span<const double>, const Points&, const Points&, double,
                         std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return LossParts{1.0, 0.0};
  };
  OptimizerConfig opt = tiny_opt(500);
  opt.stop_window = 20;
  auto [params, report] = train(dom, flat, ParameterVector{0.0}, opt, true);
  CHECK(report.stop == StopReason::Converged);
  CHECK(report.records.size() == 40);  // exactly two windows
}

TEST_CASE("train: steady improvement runs to max_iters") {
  DomainSpec dom{{0.0}, {1.0}};
  int counter = 0;
  LossAssembly improving = [&counter](std::span<const double>, const Points&, const Points&,
                                      double, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return LossParts{std::pow(0.99, ++counter), 0.0};
  };
  OptimizerConfig opt = tiny_opt(150);
  opt.stop_window = 20;
  opt.stop_ratio = 1e-3;  // 0.99^20 improvement per window clears this easily
  auto [params, report] = train(dom, improving, ParameterVector{0.0}, opt, true);
  CHECK(report.stop == StopReason::MaxIters);
  CHECK(report.records.size() == 150);
}

TEST_CASE("train: aborts on non-finite loss and on assembly failure") {
  DomainSpec dom{{0.0}, {1.0}};
  int counter = 0;
  LossAssembly blows_up = [&counter](std::span<const double>, const Points&, const Points&,
                                     double, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    if (++counter > 3) return LossParts{std::numeric_limits<double>::infinity(), 0.0};
    return LossParts{1.0, 0.0};
  };
  auto [params, report] = train(dom, blows_up, ParameterVector{0.0}, tiny_opt(50), true);
  CHECK(report.stop == StopReason::Aborted);
  CHECK(report.records.size() == 3);
  CHECK(report.diagnostic.find("iteration 3") != std::string::npos);

  LossAssembly throws = [](std::span<const double>, const Points&, const Points&, double,
                           std::span<double>) -> LossParts {
    throw nnde::EvalError("synthetic failure");
  };
  auto [params2, report2] = train(dom, throws, ParameterVector{0.5}, tiny_opt(50), true);
  CHECK(report2.stop == StopReason::Aborted);
  CHECK(report2.diagnostic.find("synthetic failure") != std::string::npos);
  CHECK(params2 == ParameterVector{0.5});  // best-so-far is the initial vector
}

TEST_CASE("algorithm1: stage counts and freeze invariant") {
  auto sp = std::make_shared<ProblemSpec>(zoo_problem("z1"));

  CorrectedModel plain = algorithm1(sp, tiny_net(1), tiny_net(1, 2), tiny_opt(10), tiny_opt(10),
                                    0, BPrimeForm{true, 3}, ExecPolicy::Parallel);
  CHECK(plain.stage_count() == 1);
  CHECK(plain.n_corrections() == 0);

  // stage-by-stage: earlier parameters must be bit-identical after later training
  CorrectedModel model;
  model.problem = sp;
  model.form = BPrimeForm{true, 3};
  train_primary_stage(model, tiny_net(1), tiny_opt(30), ExecPolicy::Parallel);
  ParameterVector primary_snapshot = model.primary.params;

  train_correction_stage(model, tiny_net(1, 2), tiny_opt(30, 5), ExecPolicy::Parallel);
  CHECK(model.primary.params == primary_snapshot);
  ParameterVector corr1_snapshot = model.corrections[0].params;

  train_correction_stage(model, tiny_net(1, 2), tiny_opt(30, 5), ExecPolicy::Parallel);
  CHECK(model.primary.params == primary_snapshot);
  CHECK(model.corrections[0].params == corr1_snapshot);
  CHECK(model.n_corrections() == 2);

  // correction stages must differ (seed offsets)
  CHECK(model.corrections[0].params != model.corrections[1].params);

  std::vector<TrainReport> reports;
  CorrectedModel full = algorithm1(sp, tiny_net(1), tiny_net(1, 2), tiny_opt(30),
                                   tiny_opt(30, 5), 2, BPrimeForm{true, 3},
                                   ExecPolicy::Parallel, &reports);
  CHECK(full.stage_count() == 3);
  CHECK(reports.size() == 3);
  CHECK(full.primary.params == primary_snapshot);
  CHECK(full.corrections[0].params == corr1_snapshot);
}

TEST_CASE("training reduces the loss on z1") {
  auto sp = std::make_shared<ProblemSpec>(zoo_problem("z1"));
  CorrectedModel model;
  model.problem = sp;
  NetworkConfig cfg = tiny_net(1, 8);
  cfg.width = 8;
  OptimizerConfig opt = tiny_opt(400, 21);
  opt.n_interior = 32;
  opt.n_boundary = 8;
  TrainReport rep = train_primary_stage(model, cfg, opt, ExecPolicy::Parallel);
  REQUIRE(!rep.records.empty());
  CHECK(rep.best_loss < 0.2 * rep.records.front().loss_total);
}

TEST_CASE("hard constraint wrap: slice exactness, dist limit, jets vs finite differences") {
  // z2-style problem on [0, 40] so the exponential factor saturates.
  LinearOpSpec A;
  A.c0 = Expr::parse("-1", 1);
  A.c1.push_back(Expr::parse("1", 1));
  A.c2 = Expr::parse("0", 1);
  ProblemSpec p = manufacture({Expr::parse("1/(1+exp(-(x-0.5)))", 1)}, std::move(A),
                              NonlinearitySpec::quadratic(1.0),
                              DomainSpec{{0.0}, {40.0}}, ConstraintMode::Hard);
  p.boundary = {Expr::parse("1/(1+exp(0.5))", 1)};
  p.check();

  NetworkConfig cfg = tiny_net(1, 77);
  ParameterVector params = init_params(cfg);
  NetModel inner(cfg, params);
  HardWrappedModel wrapped(inner, p, true);
  Workspace ws;
  std::vector<Jet> jets;

  // at t = t0 the wrap reproduces the data exactly, for any parameters
  ExprScratch scratch;
  const double data0 = p.boundary[0].eval(std::vector<double>{0.0}, scratch);
  wrapped.eval(std::vector<double>{0.0}, ws, jets);
  CHECK(jets[0].value == data0);

  // dist -> 1 far from the slice: wrapped ~= data + inner
  inner.eval(std::vector<double>{39.0}, ws, jets);
  const double inner_far = jets[0].value;
  wrapped.eval(std::vector<double>{39.0}, ws, jets);
  CHECK(jets[0].value == doctest::Approx(data0 + inner_far).epsilon(1e-12));

  // jets against finite differences
  for (double t : {0.3, 1.7, 6.0}) {
    std::vector<double> x{t};
    wrapped.eval(x, ws, jets);
    auto value_at = [&](std::span<const double> q) {
      Workspace w2;
      std::vector<Jet> j2;
      wrapped.eval(q, w2, j2);
      return j2[0].value;
    };
    double fd = testutil::fd_partial(value_at, x, 0, 1e-3);
    CHECK(testutil::close(jets[0].grad[0], fd, 1e-5, 1e-8, 1e-3));
    auto grad_at = [&](double tt) {
      Workspace w2;
      std::vector<Jet> j2;
      std::vector<double> q{tt};
      wrapped.eval(q, w2, j2);
      return j2[0].grad[0];
    };
    double fd_lap = testutil::fd_scalar(grad_at, t, 1e-5);
    CHECK(testutil::close(jets[0].lap, fd_lap, 1e-5, 1e-8, 1e-3));
  }
}

TEST_CASE("hard mode: a short training run stays exact on the slice") {
  ProblemSpec base = zoo_problem("z2");
  auto p = std::make_shared<ProblemSpec>(std::move(base));
  auto mutable_p = std::const_pointer_cast<ProblemSpec>(std::shared_ptr<const ProblemSpec>(p));
  p->mode = ConstraintMode::Hard;
  p->boundary = {Expr::parse("1/(1+exp(2))", 1)};
  p->check();

  CorrectedModel model;
  model.problem = p;
  model.form = BPrimeForm{true, 3};
  OptimizerConfig opt = tiny_opt(60, 4);
  TrainReport rep = train_primary_stage(model, tiny_net(1, 5), opt, ExecPolicy::Parallel);
  CHECK(rep.records.size() == 60);
  for (const auto& r : rep.records) CHECK(r.loss_boundary == 0.0);

  Workspace ws;
  std::vector<Jet> jets;
  model.aggregate_jets(std::vector<double>{0.0}, ws, jets);
  ExprScratch scratch;
  CHECK(jets[0].value == p->boundary[0].eval(std::vector<double>{0.0}, scratch));
}
