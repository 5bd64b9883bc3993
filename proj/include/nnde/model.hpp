#pragma once

#include <memory>
#include <span>
#include <vector>

#include "nnde/correction.hpp"
#include "nnde/net.hpp"
#include "nnde/problem.hpp"

namespace nnde {

/// Per-thread evaluation buffers shared by expression and network code.
struct Workspace {
  ExprScratch expr;
  NetWorkspace net;
  CoeffValues coeffs;
  std::vector<Jet> jets_a, jets_b, stage_tmp;
  Jet jet_tmp;
};

/// Anything that yields (value, gradient, Laplacian) jets per output
/// component at a point.
class JetModel {
 public:
  virtual ~JetModel() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual void eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const = 0;
};

/// Closed-form model backed by one expression per output component.
class ExprModel : public JetModel {
 public:
  explicit ExprModel(std::vector<Expr> components) : comps_(std::move(components)) {}
  int input_dim() const override { return comps_.empty() ? 0 : comps_[0].dim(); }
  int output_dim() const override { return static_cast<int>(comps_.size()); }
  void eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const override;

 private:
  std::vector<Expr> comps_;
};

/// Network-backed model; holds references, both must outlive the view.
class NetModel : public JetModel {
 public:
  NetModel(const NetworkConfig& cfg, const ParameterVector& params) : cfg_(&cfg), params_(&params) {}
  int input_dim() const override { return cfg_->input_dim; }
  int output_dim() const override { return cfg_->output_dim; }
  void eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const override;

 private:
  const NetworkConfig* cfg_;
  const ParameterVector* params_;
};

/// Initial-slice hard constraint: wrapped(x) = data(x2) + s(t) inner(x) with
/// x2 the projection onto the slice t = t0 (t the last coordinate) and
/// s(t) = 1 - exp(-(t - t0)). With `with_data` false the data term is zero,
/// which is the wrap used for correction stages (the frozen estimate is
/// already exact on the slice).
struct HardWrap {
  const ProblemSpec* p = nullptr;
  bool with_data = true;

  /// Transforms inner jets in place into wrapped jets.
  void forward(std::span<const double> x, ExprScratch& scratch, std::vector<Jet>& jets,
               Jet& data_tmp) const;
  /// Pulls an adjoint on the wrapped jets back to the inner jets, in place.
  /// The wrap is affine in the inner network, so this needs only x.
  void pull(std::span<const double> x, NetAdjoint& adj) const;
};

/// A model wrapped by the hard constraint (Eq.-style N = data + dist * N0).
class HardWrappedModel : public JetModel {
 public:
  HardWrappedModel(const JetModel& inner, const ProblemSpec& p, bool with_data)
      : inner_(&inner), wrap_{&p, with_data} {}
  int input_dim() const override { return inner_->input_dim(); }
  int output_dim() const override { return inner_->output_dim(); }
  void eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const override;

 private:
  const JetModel* inner_;
  HardWrap wrap_;
};

/// One trained network stage: shape plus frozen parameters.
struct Stage {
  NetworkConfig cfg;
  ParameterVector params;
};

/// Frozen primary network plus an ordered list of frozen corrections;
/// the model prediction is their sum. In hard mode every stage is wrapped
/// (the primary with the boundary data, corrections with zero data).
class CorrectedModel {
 public:
  std::shared_ptr<const ProblemSpec> problem;
  Stage primary;
  std::vector<Stage> corrections;
  BPrimeForm form;

  int n_corrections() const { return static_cast<int>(corrections.size()); }
  int stage_count() const { return 1 + n_corrections(); }
  const Stage& stage(int i) const { return i == 0 ? primary : corrections[static_cast<std::size_t>(i - 1)]; }

  /// Jets of stage i at x, wrapped in hard mode.
  void stage_jets(int i, std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const;

  /// Sum of the jets of stages [0, upto); upto < 0 means all stages.
  void aggregate_jets(std::span<const double> x, Workspace& ws, std::vector<Jet>& out,
                      int upto = -1) const;

  std::vector<double> predict(std::span<const double> x, Workspace& ws) const;
};

/// JetModel view of the sum of the first `upto` stages (all if < 0).
class AggregateView : public JetModel {
 public:
  explicit AggregateView(const CorrectedModel& m, int upto = -1) : m_(&m), upto_(upto) {}
  int input_dim() const override { return m_->primary.cfg.input_dim; }
  int output_dim() const override { return m_->primary.cfg.output_dim; }
  void eval(std::span<const double> x, Workspace& ws, std::vector<Jet>& out) const override {
    m_->aggregate_jets(x, ws, out, upto_);
  }

 private:
  const CorrectedModel* m_;
  int upto_;
};

/// Mean over the sample of the component-averaged |F[model](x)|: the crude
/// linearized error indicator.
double linear_indicator(const ProblemSpec& p, const JetModel& model, const Points& sample,
                        Workspace& ws);

}  // namespace nnde
