#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "hyperlie/su2.hpp"

namespace hyperlie {

using Rng = std::mt19937_64;

/// Independent stream for (seed, index); used to keep parallel sampling reproducible.
inline Rng make_rng(std::uint64_t seed, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double gaussian(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline Vec3 random_vec3(Rng& rng) { return {gaussian(rng), gaussian(rng), gaussian(rng)}; }

/// Haar-distributed element of O(3) with the requested determinant sign.
inline Mat3 random_orthogonal(Rng& rng, int det_sign = 1) {
  Mat3 g;
  for (int i = 0; i < 3; ++i) g.col(i) = random_vec3(rng);
  Eigen::HouseholderQR<Mat3> qr(g);
  Mat3 q = qr.householderQ();
  const Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  if (q.determinant() * det_sign < 0.0) q.col(0) *= -1.0;
  return q;
}

inline Mat3 random_rotation(Rng& rng) { return random_orthogonal(rng, 1); }

/// Gaussian triple with |Phi| >= min_abs_phi and, if region != 0, sign(Phi) = region.
inline Triple random_triple(Rng& rng, double min_abs_phi = 0.1, int region = 0) {
  for (;;) {
    Triple t(random_vec3(rng), random_vec3(rng), random_vec3(rng));
    const double p = phi(t);
    if (std::abs(p) < min_abs_phi) continue;
    if (region != 0 && p * region < 0.0) t = -t;
    return t;
  }
}

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

}  // namespace hyperlie
