#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nnde/error.hpp"
#include "nnde/jet.hpp"

namespace nnde {

enum class Activation : std::uint8_t { Tanh, Sin };

/// Feed-forward network shape: `depth` hidden layers of `width` neurons with
/// an analytic activation, affine output layer.
struct NetworkConfig {
  int input_dim = 1;
  int output_dim = 1;
  int width = 16;
  int depth = 2;
  Activation activation = Activation::Tanh;
  std::uint64_t init_seed = 0;

  void check() const;
  int affine_layers() const { return depth + 1; }
  int layer_in(int l) const { return l == 0 ? input_dim : width; }
  int layer_out(int l) const { return l == depth ? output_dim : width; }
};

/// Flat parameter vector; layout is, per affine layer in order, the weight
/// matrix in row-major order followed by the bias vector. This layout is part
/// of the checkpoint format.
using ParameterVector = std::vector<double>;

using NetJet = std::vector<Jet>;             // one Jet per output component
using NetAdjoint = std::vector<JetAdjoint>;  // one adjoint per output component

std::size_t param_count(const NetworkConfig& cfg);

/// Glorot-uniform weights, zero biases; deterministic in `seed`.
ParameterVector init_params(const NetworkConfig& cfg, std::uint64_t seed);
inline ParameterVector init_params(const NetworkConfig& cfg) { return init_params(cfg, cfg.init_seed); }

/// Per-evaluation buffers: forward caches consumed by the backward pass plus
/// backward scratch. Use one instance per thread.
struct NetWorkspace {
  struct LayerCache {
    std::vector<double> zv, zg, zl;  // pre-activation value/gradient/laplacian
    std::vector<double> av, ag, al;  // post-activation (hidden layers only)
  };
  std::vector<double> x;
  std::vector<LayerCache> layers;
  std::vector<double> adj_v[2], adj_g[2], adj_l[2];

  void ensure(const NetworkConfig& cfg);
};

/// Value, input-gradient and input-Laplacian of every output component at x.
/// The forward caches left in `ws` feed backward_params.
void forward_jet(const NetworkConfig& cfg, std::span<const double> params,
                 std::span<const double> x, NetWorkspace& ws, NetJet& out);
NetJet forward_jet(const NetworkConfig& cfg, std::span<const double> params,
                   std::span<const double> x);

/// Accumulates d<adj, forward_jet(x)>/dparams into grad (+=). `ws` must hold
/// the forward caches of the matching forward_jet call.
void backward_params(const NetworkConfig& cfg, std::span<const double> params,
                     NetWorkspace& ws, const NetAdjoint& adj, std::span<double> grad);

/// Sum over the batch of parameter gradients of <adjoint, forward_jet(x)>,
/// accumulated in batch order.
std::vector<double> param_gradient(
    const NetworkConfig& cfg, std::span<const double> params,
    std::span<const std::pair<std::vector<double>, NetAdjoint>> batch);

}  // namespace nnde
