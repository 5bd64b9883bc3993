#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nnde/error.hpp"

namespace nnde {

/// Deterministic uniform source. Draws are derived from the raw mt19937_64
/// bit stream (not std::uniform_real_distribution), so sequences are
/// reproducible bit-for-bit across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in the open interval (0, 1).
  double next_unit() {
    for (;;) {
      double t = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
      if (t != 0.0) return t;
    }
  }

  /// Uniform in the open interval (lo, hi).
  double uniform(double lo, double hi) {
    double r = lo + (hi - lo) * next_unit();
    if (r <= lo) r = std::nextafter(lo, hi);
    if (r >= hi) r = std::nextafter(hi, lo);
    return r;
  }

 private:
  std::mt19937_64 eng_;
};

/// n points of dimension `dim`, row-major.
struct Points {
  int dim = 0;
  std::vector<double> xs;

  Points() = default;
  Points(int dim, std::size_t n) : dim(dim), xs(static_cast<std::size_t>(dim) * n, 0.0) {}

  std::size_t count() const { return dim == 0 ? 0 : xs.size() / static_cast<std::size_t>(dim); }
  std::span<const double> at(std::size_t i) const {
    return {xs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::span<double> at(std::size_t i) {
    return {xs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

struct DomainSpec {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void check() const;
};

/// n i.i.d. uniform points strictly inside the box.
Points sample_interior(const DomainSpec& dom, std::size_t n, Rng& rng);

/// Faces chosen with probability proportional to face measure, then uniform
/// on the face. For dim = 1 the faces are the two endpoints.
Points sample_boundary(const DomainSpec& dom, std::size_t n, Rng& rng);

/// Regular grid with `res` points per dimension, endpoints included.
Points grid_points(const DomainSpec& dom, int res);

}  // namespace nnde
