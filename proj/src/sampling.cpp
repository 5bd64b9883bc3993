#include "nnde/sampling.hpp"

namespace nnde {

void DomainSpec::check() const {
  if (lo.empty() || lo.size() != hi.size()) throw ConfigError("domain bounds malformed");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i])) throw ConfigError("domain requires lower < upper in every dimension");
}

Points sample_interior(const DomainSpec& dom, std::size_t n, Rng& rng) {
  dom.check();
  const int d = dom.dim();
  Points pts(d, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = pts.at(i);
    for (int k = 0; k < d; ++k) row[static_cast<std::size_t>(k)] = rng.uniform(dom.lo[k], dom.hi[k]);
  }
  return pts;
}

Points sample_boundary(const DomainSpec& dom, std::size_t n, Rng& rng) {
  dom.check();
  const int d = dom.dim();
  // 2d faces; face (k, side) has measure prod_{j != k} (hi_j - lo_j).
  std::vector<double> cum(static_cast<std::size_t>(2 * d), 0.0);
  double total = 0.0;
  for (int k = 0; k < d; ++k) {
    double m = 1.0;
    for (int j = 0; j < d; ++j)
      if (j != k) m *= dom.hi[j] - dom.lo[j];
    total += m;
    cum[static_cast<std::size_t>(2 * k)] = total;
    total += m;
    cum[static_cast<std::size_t>(2 * k + 1)] = total;
  }

  Points pts(d, n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.next_unit() * total;
    std::size_t f = 0;
    while (f + 1 < cum.size() && u > cum[f]) ++f;
    int k = static_cast<int>(f / 2);
    bool upper = (f % 2) == 1;
    auto row = pts.at(i);
    for (int j = 0; j < d; ++j) {
      if (j == k)
        row[static_cast<std::size_t>(j)] = upper ? dom.hi[j] : dom.lo[j];
      else
        row[static_cast<std::size_t>(j)] = rng.uniform(dom.lo[j], dom.hi[j]);
    }
  }
  return pts;
}

Points grid_points(const DomainSpec& dom, int res) {
  dom.check();
  if (res < 2) throw ConfigError("grid resolution must be >= 2");
  const int d = dom.dim();
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(res);
  Points pts(d, total);
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t i = 0; i < total; ++i) {
    auto row = pts.at(i);
    for (int k = 0; k < d; ++k) {
      double t = static_cast<double>(idx[static_cast<std::size_t>(k)]) / (res - 1);
      row[static_cast<std::size_t>(k)] = dom.lo[k] + t * (dom.hi[k] - dom.lo[k]);
    }
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < static_cast<std::size_t>(res)) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return pts;
}

}  // namespace nnde
