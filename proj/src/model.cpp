#include "nnde/model.hpp"

#include <cmath>

namespace nnde {

void ExprModel::eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const {
  out.resize(comps_.size());
  for (std::size_t c = 0; c < comps_.size(); ++c) comps_[c].eval_jet(x, ws.expr, out[c]);
}

void NetModel::eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const {
  forward_jet(*cfg_, *params_, x, ws.net, out);
}

void HardWrap::forward(std::span<const double> x, ExprScratch& scratch, std::vector<Jet>& jets,
                       Jet& data_tmp) const {
  const int d = p->domain.dim();
  const std::size_t t = static_cast<std::size_t>(d - 1);
  const double t0 = p->domain.lo[t];
  const double u = x[t] - t0;
  const double s = -std::expm1(-u);  // 1 - e^{-u}
  const double s1 = std::exp(-u);
  const double s2 = -s1;

  // Projection onto the slice; boundary data there is independent of t by
  // the Hard-mode invariant, so its jet already has zero t-gradient and a
  // purely spatial Laplacian.
  std::vector<double> x2(x.begin(), x.end());
  x2[t] = t0;

  for (std::size_t c = 0; c < jets.size(); ++c) {
    Jet& j = jets[c];
    const double nv = j.value, nl = j.lap;
    double bv = 0.0, bl = 0.0;
    const double* bg = nullptr;
    if (with_data) {
      p->boundary[c].eval_jet(x2, scratch, data_tmp);
      bv = data_tmp.value;
      bl = data_tmp.lap;
      bg = data_tmp.grad.data();
    }
    j.value = bv + s * nv;
    j.lap = bl + s * nl + 2.0 * s1 * j.grad[t] + s2 * nv;
    for (std::size_t i = 0; i < j.grad.size(); ++i)
      j.grad[i] = (bg ? bg[i] : 0.0) + s * j.grad[i] + (i == t ? s1 * nv : 0.0);
  }
}

void HardWrap::pull(std::span<const double> x, NetAdjoint& adj) const {
  const int d = p->domain.dim();
  const std::size_t t = static_cast<std::size_t>(d - 1);
  const double u = x[t] - p->domain.lo[t];
  const double s = -std::expm1(-u);
  const double s1 = std::exp(-u);
  const double s2 = -s1;

  for (JetAdjoint& a : adj) {
    const double dv = a.d_value, dl = a.d_lap;
    a.d_value = s * dv + s1 * a.d_grad[t] + s2 * dl;
    for (std::size_t i = 0; i < a.d_grad.size(); ++i)
      a.d_grad[i] = s * a.d_grad[i] + (i == t ? 2.0 * s1 * dl : 0.0);
    a.d_lap = s * dl;
  }
}

void HardWrappedModel::eval(std::span<const double> x, Workspace& ws,
                            std::vector<Jet>& out) const {
  inner_->eval(x, ws, out);
  wrap_.forward(x, ws.expr, out, ws.jet_tmp);
}

void CorrectedModel::stage_jets(int i, std::span<const double> x, Workspace& ws,
                                std::vector<Jet>& out) const {
  const Stage& st = stage(i);
  forward_jet(st.cfg, st.params, x, ws.net, out);
  if (problem->mode == ConstraintMode::Hard) {
    HardWrap wrap{problem.get(), i == 0};
    wrap.forward(x, ws.expr, out, ws.jet_tmp);
  }
}

void CorrectedModel::aggregate_jets(std::span<const double> x, Workspace& ws,
                                    std::vector<Jet>& out, int upto) const {
  const int n = upto < 0 ? stage_count() : upto;
  const std::size_t D = static_cast<std::size_t>(primary.cfg.output_dim);
  const std::size_t d = static_cast<std::size_t>(primary.cfg.input_dim);
  out.resize(D);
  for (Jet& j : out) {
    j.grad.resize(d);
    j.set_zero();
  }
  for (int i = 0; i < n; ++i) {
    stage_jets(i, x, ws, ws.stage_tmp);
    for (std::size_t c = 0; c < D; ++c) {
      out[c].value += ws.stage_tmp[c].value;
      out[c].lap += ws.stage_tmp[c].lap;
      for (std::size_t k = 0; k < d; ++k) out[c].grad[k] += ws.stage_tmp[c].grad[k];
    }
  }
}

std::vector<double> CorrectedModel::predict(std::span<const double> x, Workspace& ws) const {
  aggregate_jets(x, ws, ws.jets_a);
  std::vector<double> out(ws.jets_a.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = ws.jets_a[c].value;
  return out;
}

double linear_indicator(const ProblemSpec& p, const JetModel& model, const Points& sample,
                        Workspace& ws) {
  const std::size_t n = sample.count();
  if (n == 0) throw Error("linear_indicator requires a nonempty sample");
  const int D = model.output_dim();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = sample.at(i);
    model.eval(x, ws, ws.jets_a);
    double per_point = 0.0;
    for (int c = 0; c < D; ++c)
      per_point += std::abs(p.residual(ws.jets_a[static_cast<std::size_t>(c)], c, x, ws.expr));
    acc += per_point / D;
  }
  return acc / static_cast<double>(n);
}

}  // namespace nnde
