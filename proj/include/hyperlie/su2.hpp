#pragma once

// Coordinate model of su(2) as R^3.
//
// Elements are written in a fixed positively-oriented orthonormal basis
// {e1, e2, e3}, so the Lie bracket is the cross product and the invariant
// pairing <x, y> is the Euclidean dot product. The Killing form of su(2) is
// a negative multiple of this pairing; every formula in the library uses the
// positive-definite normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hyperlie/error.hpp"

namespace hyperlie {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

inline Vec3 basis(int i) { return Vec3::Unit(i); }

inline Vec3 bracket(const Vec3& x, const Vec3& y) { return x.cross(y); }

inline double inner(const Vec3& x, const Vec3& y) { return x.dot(y); }

/// A point (a1, a2, a3) of su(2)^3. Coordinates are ordered (a1x, a1y, a1z, a2x, ...).
struct Triple {
  std::array<Vec3, 3> a{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};

  Triple() = default;
  Triple(const Vec3& a1, const Vec3& a2, const Vec3& a3) : a{a1, a2, a3} {}

  static Triple from_vector(const Vec9& v) {
    return {v.segment<3>(0), v.segment<3>(3), v.segment<3>(6)};
  }

  Vec9 to_vector() const {
    Vec9 v;
    v << a[0], a[1], a[2];
    return v;
  }

  const Vec3& operator[](int i) const { return a[static_cast<std::size_t>(i)]; }
  Vec3& operator[](int i) { return a[static_cast<std::size_t>(i)]; }

  /// Largest component norm; the length unit used by all scale-aware tolerances.
  double scale() const { return std::max({a[0].norm(), a[1].norm(), a[2].norm()}); }
};

inline Triple operator*(double s, const Triple& t) { return {s * t[0], s * t[1], s * t[2]}; }

inline Triple operator-(const Triple& t) { return (-1.0) * t; }

/// Phi(a1, a2, a3) = <a1, [a2, a3]>, the scalar triple product.
inline double phi(const Triple& t) { return inner(t[0], bracket(t[1], t[2])); }

/// Dead-band for Phi. Phi is cubic in the triple, so the band scales cubically.
inline double phi_tolerance(const Triple& t, double rel = 1e-12) {
  const double s = t.scale();
  return rel * s * s * s;
}

/// The tensor A(a1,a2,a3) contracted as A_{xi,eta} = xi^T m eta.
struct SymTensor {
  Mat3 m = Mat3::Zero();

  double eval(const Vec3& xi, const Vec3& eta) const { return xi.dot(m * eta); }
};

/// A = (1/Phi) ([a1,a2]⊗[a1,a2] + [a2,a3]⊗[a2,a3] + [a3,a1]⊗[a3,a1]); defined on Phi != 0.
inline SymTensor a_tensor(const Triple& t) {
  const double p = phi(t);
  if (std::abs(p) < phi_tolerance(t) || p == 0.0) {
    throw GeometryError(ErrorCode::DegenerateConfiguration,
                        "A is undefined where Phi vanishes (|Phi| below dead-band)");
  }
  const Vec3 c12 = bracket(t[0], t[1]);
  const Vec3 c23 = bracket(t[1], t[2]);
  const Vec3 c31 = bracket(t[2], t[0]);
  SymTensor out;
  out.m = (c12 * c12.transpose() + c23 * c23.transpose() + c31 * c31.transpose()) / p;
  return out;
}

inline double a_eval(const Triple& t, const Vec3& xi, const Vec3& eta) {
  return a_tensor(t).eval(xi, eta);
}

/// G_ij = <a_i, a_j>.
inline Mat3 gram(const Triple& t) {
  Mat3 g;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) g(i, j) = inner(t[i], t[j]);
  }
  return g;
}

enum class Region { Plus, Minus, Boundary };

inline Region region_classify(const Triple& t, double eps) {
  if (eps < 0.0) throw GeometryError(ErrorCode::InvalidArgument, "eps must be non-negative");
  const double p = phi(t);
  if (p > eps) return Region::Plus;
  if (p < -eps) return Region::Minus;
  return Region::Boundary;
}

/// The matrix E(v) with E(v)_{ab} = <[e_a, e_b], v>, i.e. the Lie-Poisson block of v.
inline Mat3 structure_block(const Vec3& v) {
  Mat3 m;
  m << 0.0, v.z(), -v.y(),
      -v.z(), 0.0, v.x(),
      v.y(), -v.x(), 0.0;
  return m;
}

}  // namespace hyperlie
