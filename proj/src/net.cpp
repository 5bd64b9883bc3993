#include "nnde/net.hpp"

#include <cmath>
#include <string>

#include "nnde/sampling.hpp"

namespace nnde {

void NetworkConfig::check() const {
  if (input_dim < 1 || output_dim < 1 || width < 1 || depth < 1)
    throw ConfigError("network dimensions must all be >= 1");
}

std::size_t param_count(const NetworkConfig& cfg) {
  cfg.check();
  std::size_t m = 0;
  for (int l = 0; l < cfg.affine_layers(); ++l)
    m += static_cast<std::size_t>(cfg.layer_out(l)) * cfg.layer_in(l) + cfg.layer_out(l);
  return m;
}

ParameterVector init_params(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.check();
  ParameterVector params(param_count(cfg), 0.0);
  Rng rng(seed);
  std::size_t off = 0;
  for (int l = 0; l < cfg.affine_layers(); ++l) {
    const int nin = cfg.layer_in(l), nout = cfg.layer_out(l);
    const double bound = std::sqrt(6.0 / (nin + nout));
    for (int i = 0; i < nout * nin; ++i) params[off++] = rng.uniform(-bound, bound);
    off += static_cast<std::size_t>(nout);  // biases stay zero
  }
  return params;
}

namespace {

struct Act {
  double s0, s1, s2, s3;  // value and first three derivatives
};

inline Act activation_jets(Activation a, double z) {
  if (a == Activation::Tanh) {
    const double t = std::tanh(z);
    const double u = 1.0 - t * t;
    return {t, u, -2.0 * t * u, u * (6.0 * t * t - 2.0)};
  }
  const double s = std::sin(z), c = std::cos(z);
  return {s, c, -s, -c};
}

void check_shapes(const NetworkConfig& cfg, std::span<const double> params,
                  std::span<const double> x) {
  cfg.check();
  if (params.size() != param_count(cfg))
    throw Error("parameter vector length " + std::to_string(params.size()) +
                " does not match configuration (expected " + std::to_string(param_count(cfg)) + ")");
  if (x.size() != static_cast<std::size_t>(cfg.input_dim))
    throw Error("input point has wrong dimension");
}

void check_finite_layer(std::span<const double> v, std::span<const double> g,
                        std::span<const double> l, int layer) {
  auto bad = [layer] {
    throw EvalError("non-finite value in layer " + std::to_string(layer));
  };
  for (double t : v)
    if (!std::isfinite(t)) bad();
  for (double t : g)
    if (!std::isfinite(t)) bad();
  for (double t : l)
    if (!std::isfinite(t)) bad();
}

}  // namespace

void NetWorkspace::ensure(const NetworkConfig& cfg) {
  const std::size_t d = static_cast<std::size_t>(cfg.input_dim);
  const std::size_t L = static_cast<std::size_t>(cfg.affine_layers());
  x.resize(d);
  if (layers.size() < L) layers.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t n = static_cast<std::size_t>(cfg.layer_out(static_cast<int>(l)));
    layers[l].zv.resize(n);
    layers[l].zg.resize(n * d);
    layers[l].zl.resize(n);
    const bool hidden = static_cast<int>(l) < cfg.depth;
    layers[l].av.resize(hidden ? n : 0);
    layers[l].ag.resize(hidden ? n * d : 0);
    layers[l].al.resize(hidden ? n : 0);
  }
  const std::size_t wmax =
      static_cast<std::size_t>(std::max({cfg.width, cfg.output_dim, cfg.input_dim}));
  for (int i = 0; i < 2; ++i) {
    adj_v[i].resize(wmax);
    adj_g[i].resize(wmax * d);
    adj_l[i].resize(wmax);
  }
}

void forward_jet(const NetworkConfig& cfg, std::span<const double> params,
                 std::span<const double> x, NetWorkspace& ws, NetJet& out) {
  check_shapes(cfg, params, x);
  ws.ensure(cfg);
  const std::size_t d = static_cast<std::size_t>(cfg.input_dim);
  std::copy(x.begin(), x.end(), ws.x.begin());

  std::size_t off = 0;
  const double* prev_v = nullptr;
  const double* prev_g = nullptr;
  const double* prev_l = nullptr;

  for (int l = 0; l < cfg.affine_layers(); ++l) {
    const int nin = cfg.layer_in(l), nout = cfg.layer_out(l);
    auto& cache = ws.layers[static_cast<std::size_t>(l)];
    const double* W = params.data() + off;
    const double* b = W + static_cast<std::size_t>(nout) * nin;
    off += static_cast<std::size_t>(nout) * nin + nout;

    for (int j = 0; j < nout; ++j) {
      const double* wrow = W + static_cast<std::size_t>(j) * nin;
      double zv = b[j], zl = 0.0;
      double* zg = cache.zg.data() + static_cast<std::size_t>(j) * d;
      for (std::size_t t = 0; t < d; ++t) zg[t] = 0.0;
      if (l == 0) {
        // input jets: value x_k, gradient e_k, laplacian 0
        for (int k = 0; k < nin; ++k) {
          zv += wrow[k] * x[static_cast<std::size_t>(k)];
          zg[static_cast<std::size_t>(k)] = wrow[k];
        }
      } else {
        for (int k = 0; k < nin; ++k) {
          const double w = wrow[k];
          zv += w * prev_v[k];
          zl += w * prev_l[k];
          const double* pg = prev_g + static_cast<std::size_t>(k) * d;
          for (std::size_t t = 0; t < d; ++t) zg[t] += w * pg[t];
        }
      }
      cache.zv[static_cast<std::size_t>(j)] = zv;
      cache.zl[static_cast<std::size_t>(j)] = zl;
    }
    check_finite_layer(cache.zv, cache.zg, cache.zl, l);

    if (l < cfg.depth) {
      for (int j = 0; j < nout; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        const Act a = activation_jets(cfg.activation, cache.zv[sj]);
        const double* zg = cache.zg.data() + sj * d;
        double* ag = cache.ag.data() + sj * d;
        double gg = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
          ag[t] = a.s1 * zg[t];
          gg += zg[t] * zg[t];
        }
        cache.av[sj] = a.s0;
        cache.al[sj] = a.s2 * gg + a.s1 * cache.zl[sj];
      }
      prev_v = cache.av.data();
      prev_g = cache.ag.data();
      prev_l = cache.al.data();
    } else {
      prev_v = cache.zv.data();
      prev_g = cache.zg.data();
      prev_l = cache.zl.data();
    }
  }

  const std::size_t D = static_cast<std::size_t>(cfg.output_dim);
  out.resize(D);
  const auto& last = ws.layers[static_cast<std::size_t>(cfg.depth)];
  for (std::size_t j = 0; j < D; ++j) {
    out[j].value = last.zv[j];
    out[j].lap = last.zl[j];
    out[j].grad.assign(last.zg.data() + j * d, last.zg.data() + (j + 1) * d);
  }
}

NetJet forward_jet(const NetworkConfig& cfg, std::span<const double> params,
                   std::span<const double> x) {
  NetWorkspace ws;
  NetJet out;
  forward_jet(cfg, params, x, ws, out);
  return out;
}

void backward_params(const NetworkConfig& cfg, std::span<const double> params,
                     NetWorkspace& ws, const NetAdjoint& adj, std::span<double> grad) {
  if (adj.size() != static_cast<std::size_t>(cfg.output_dim))
    throw Error("adjoint count does not match output dimension");
  if (grad.size() != param_count(cfg)) throw Error("gradient buffer length mismatch");
  const std::size_t d = static_cast<std::size_t>(cfg.input_dim);

  // Adjoint of the current affine layer's pre-activation jets.
  int cur = 0;
  double* vz = ws.adj_v[cur].data();
  double* gz = ws.adj_g[cur].data();
  double* lz = ws.adj_l[cur].data();
  for (int j = 0; j < cfg.output_dim; ++j) {
    const std::size_t sj = static_cast<std::size_t>(j);
    vz[sj] = adj[sj].d_value;
    lz[sj] = adj[sj].d_lap;
    if (adj[sj].d_grad.size() != d) throw Error("adjoint gradient dimension mismatch");
    for (std::size_t t = 0; t < d; ++t) gz[sj * d + t] = adj[sj].d_grad[t];
  }

  // Parameter block offsets per affine layer.
  std::vector<std::size_t> offs(static_cast<std::size_t>(cfg.affine_layers()));
  std::size_t off = 0;
  for (int l = 0; l < cfg.affine_layers(); ++l) {
    offs[static_cast<std::size_t>(l)] = off;
    off += static_cast<std::size_t>(cfg.layer_out(l)) * cfg.layer_in(l) + cfg.layer_out(l);
  }

  for (int l = cfg.affine_layers() - 1; l >= 0; --l) {
    const int nin = cfg.layer_in(l), nout = cfg.layer_out(l);
    const double* W = params.data() + offs[static_cast<std::size_t>(l)];
    double* dW = grad.data() + offs[static_cast<std::size_t>(l)];
    double* db = dW + static_cast<std::size_t>(nout) * nin;

    if (l == 0) {
      // prev jets are the input: value x_k, gradient e_k, laplacian 0
      for (int j = 0; j < nout; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        double* dWrow = dW + sj * static_cast<std::size_t>(nin);
        for (int k = 0; k < nin; ++k)
          dWrow[k] += vz[sj] * ws.x[static_cast<std::size_t>(k)] + gz[sj * d + static_cast<std::size_t>(k)];
        db[j] += vz[sj];
      }
      break;
    }

    const auto& prev = ws.layers[static_cast<std::size_t>(l - 1)];
    const int next = 1 - cur;
    double* va = ws.adj_v[next].data();
    double* ga = ws.adj_g[next].data();
    double* la = ws.adj_l[next].data();
    for (int k = 0; k < nin; ++k) {
      const std::size_t sk = static_cast<std::size_t>(k);
      va[sk] = 0.0;
      la[sk] = 0.0;
      for (std::size_t t = 0; t < d; ++t) ga[sk * d + t] = 0.0;
    }

    for (int j = 0; j < nout; ++j) {
      const std::size_t sj = static_cast<std::size_t>(j);
      const double* wrow = W + sj * static_cast<std::size_t>(nin);
      double* dWrow = dW + sj * static_cast<std::size_t>(nin);
      const double vzj = vz[sj], lzj = lz[sj];
      const double* gzj = gz + sj * d;
      for (int k = 0; k < nin; ++k) {
        const std::size_t sk = static_cast<std::size_t>(k);
        const double* pag = prev.ag.data() + sk * d;
        double gdot = 0.0;
        for (std::size_t t = 0; t < d; ++t) gdot += gzj[t] * pag[t];
        dWrow[k] += vzj * prev.av[sk] + gdot + lzj * prev.al[sk];

        const double w = wrow[k];
        va[sk] += w * vzj;
        la[sk] += w * lzj;
        double* gak = ga + sk * d;
        for (std::size_t t = 0; t < d; ++t) gak[t] += w * gzj[t];
      }
      db[j] += vzj;
    }

    // Pull the post-activation adjoint back through the activation of
    // layer l-1:
    //   a  = s(z),  Ga = s1 Gz,  La = s3-free:  La = s2 |Gz|^2 + s1 Lz
    //   vz = va s1 + (ga . Gz) s2 + la (s3 |Gz|^2 + s2 Lz)
    //   gz = s1 ga + 2 s2 la Gz
    //   lz = s1 la
    for (int k = 0; k < nin; ++k) {
      const std::size_t sk = static_cast<std::size_t>(k);
      const Act a = activation_jets(cfg.activation, prev.zv[sk]);
      const double* Gz = prev.zg.data() + sk * d;
      const double Lz = prev.zl[sk];
      double gg = 0.0, gdot = 0.0;
      double* gak = ga + sk * d;
      for (std::size_t t = 0; t < d; ++t) {
        gg += Gz[t] * Gz[t];
        gdot += gak[t] * Gz[t];
      }
      const double vak = va[sk], lak = la[sk];
      va[sk] = vak * a.s1 + gdot * a.s2 + lak * (a.s3 * gg + a.s2 * Lz);
      for (std::size_t t = 0; t < d; ++t) gak[t] = a.s1 * gak[t] + 2.0 * a.s2 * lak * Gz[t];
      la[sk] = a.s1 * lak;
    }

    cur = next;
    vz = ws.adj_v[cur].data();
    gz = ws.adj_g[cur].data();
    lz = ws.adj_l[cur].data();
  }
}

std::vector<double> param_gradient(
    const NetworkConfig& cfg, std::span<const double> params,
    std::span<const std::pair<std::vector<double>, NetAdjoint>> batch) {
  std::vector<double> grad(param_count(cfg), 0.0);
  NetWorkspace ws;
  NetJet out;
  for (const auto& [x, adj] : batch) {
    forward_jet(cfg, params, x, ws, out);
    backward_params(cfg, params, ws, adj, grad);
  }
  return grad;
}

}  // namespace nnde
