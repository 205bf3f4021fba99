#pragma once

// Canonical leaves N_{q,r}: the set of orthogonal triples with
// |a1|^2 - |a2|^2 = q, |a2|^2 - |a3|^2 = r and Phi < 0.
//
// Frame-level data (metric, complex structures, symplectic forms) is expressed
// in the basis V0..V3 of distribution_frame. A FrameOperator column b holds the
// image of V_b.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "hyperlie/error.hpp"
#include "hyperlie/poisson.hpp"
#include "hyperlie/su2.hpp"

namespace hyperlie {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using IntMat4 = Eigen::Matrix<int, 4, 4>;

struct LeafParams {
  double q = 0.0;
  double r = 0.0;
};

/// 0 for q = r = 0, 1 for q > 0 and r = 0, 2 for r > 0.
inline int type_of(const LeafParams& p) {
  if (p.q < 0.0 || p.r < 0.0) throw GeometryError(ErrorCode::InvalidArgument, "leaf parameters must be non-negative");
  if (p.r > 0.0) return 2;
  return p.q > 0.0 ? 1 : 0;
}

struct LeafChart {
  double s = 1.0;
  Mat3 o = Mat3::Identity();
};

inline double orthogonality_defect(const Mat3& o) { return (o.transpose() * o - Mat3::Identity()).cwiseAbs().maxCoeff(); }

/// (sqrt(s^2+r+q) e1, sqrt(s^2+r) e2, -s e3) with e_i the columns of the chart rotation.
inline Triple leaf_point(const LeafParams& p, const LeafChart& c) {
  if (!(c.s > 0.0)) throw GeometryError(ErrorCode::InvalidChart, "chart parameter s must be positive");
  if (p.q < 0.0 || p.r < 0.0) throw GeometryError(ErrorCode::InvalidChart, "leaf parameters must be non-negative");
  if (orthogonality_defect(c.o) > 1e-10 || std::abs(c.o.determinant() - 1.0) > 1e-10) {
    throw GeometryError(ErrorCode::InvalidChart, "chart rotation is not in SO(3)");
  }
  const double s2 = c.s * c.s;
  return {std::sqrt(s2 + p.r + p.q) * c.o.col(0), std::sqrt(s2 + p.r) * c.o.col(1), -c.s * c.o.col(2)};
}

/// Relative tolerance on the orthogonality Casimirs f1, f2, f3 (times scale^2).
inline constexpr double kLeafMembershipTol = 1e-8;

/// Parameters and chart of a point of some N_{q,r}.
inline std::pair<LeafParams, LeafChart> leaf_coords(const Triple& t) {
  const double s2 = t.scale() * t.scale();
  const double tol = kLeafMembershipTol * s2;
  const CasimirVector f = casimirs(t);
  if (std::abs(f[0]) > tol || std::abs(f[1]) > tol || std::abs(f[2]) > tol) {
    throw GeometryError(ErrorCode::NotInCanonicalLeaf, "components are not pairwise orthogonal");
  }
  if (f[3] < -tol || f[4] < -tol) {
    throw GeometryError(ErrorCode::NotInCanonicalLeaf, "norms are not in descending order");
  }
  if (!(phi(t) < 0.0) || std::abs(phi(t)) < phi_tolerance(t)) {
    throw GeometryError(ErrorCode::WrongRegion, "canonical leaves lie in Phi < 0");
  }
  LeafChart c;
  c.s = t[2].norm();
  c.o.col(0) = t[0].normalized();
  c.o.col(1) = t[1].normalized();
  c.o.col(2) = -t[2].normalized();
  LeafParams p{std::max(f[3], 0.0), std::max(f[4], 0.0)};
  return {p, c};
}

/// Right action (a1, a2, a3) -> (a1, a2, a3) O, i.e. a'_j = sum_i a_i O_ij.
inline Triple sigma_map(const Mat3& o, const Triple& t) {
  if (orthogonality_defect(o) > 1e-10) throw GeometryError(ErrorCode::NotOrthogonal, "O is not orthogonal");
  Triple out;
  for (int j = 0; j < 3; ++j) out[j] = o(0, j) * t[0] + o(1, j) * t[1] + o(2, j) * t[2];
  return out;
}

inline Triple iota(const Triple& t) { return sigma_map(-Mat3::Identity(), t); }

inline Triple rho_scale(double tau, const Triple& t) {
  if (!(tau > 0.0)) throw GeometryError(ErrorCode::InvalidArgument, "scaling factor must be positive");
  return std::sqrt(tau) * t;
}

struct CanonicalForm {
  Mat3 o = Mat3::Identity();
  LeafParams params;
  /// Set when O has det -1, i.e. sigma_O is an anti-isomorphism (input had Phi > 0).
  bool anti = false;
};

namespace detail {

inline CanonicalForm spectral_canonical(const Triple& t) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(gram(t));
  if (es.info() != Eigen::Success) throw GeometryError(ErrorCode::DegenerateGram, "eigen-solver did not converge");
  const Eigen::Vector3d ev = es.eigenvalues().reverse();
  Mat3 o = es.eigenvectors().rowwise().reverse();
  // Within a repeated eigenvalue the basis is arbitrary; take the projections of
  // the matching coordinate axes so that already-canonical input gives O = Id.
  const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (int a = 0; a < 3;) {
    int b = a + 1;
    while (b < 3 && ev(b - 1) - ev(b) <= tol) ++b;
    if (b - a > 1) {
      const Eigen::MatrixXd span = o.middleCols(a, b - a);
      const Eigen::MatrixXd proj = span * span.transpose();
      for (int j = a; j < b; ++j) {
        Vec3 v = proj * Vec3::Unit(j);
        for (int k = a; k < j; ++k) v -= o.col(k).dot(v) * o.col(k);
        if (v.norm() < 1e-6) {
          // Axis nearly orthogonal to the eigenspace: any completion will do.
          for (int m = 0; m < 3 && v.norm() < 1e-6; ++m) {
            v = proj * Vec3::Unit(m);
            for (int k = a; k < j; ++k) v -= o.col(k).dot(v) * o.col(k);
          }
        }
        o.col(j) = v.normalized();
      }
    }
    a = b;
  }
  for (int j = 0; j < 3; ++j) {
    Eigen::Index k = 0;
    o.col(j).cwiseAbs().maxCoeff(&k);
    if (o(k, j) < 0.0) o.col(j) *= -1.0;
  }
  if (o.determinant() < 0.0) o.col(2) *= -1.0;
  CanonicalForm out;
  out.o = o;
  out.params = {std::max(ev(0) - ev(1), 0.0), std::max(ev(1) - ev(2), 0.0)};
  return out;
}

}  // namespace detail

/// O in SO(3) diagonalizing gram(t) with descending eigenvalues, so that
/// sigma_map(O, t) lies in N_{q,r} with q = l1 - l2, r = l2 - l3.
inline CanonicalForm canonicalize_leaf(const Triple& t) {
  const double p = phi(t);
  if (!(p < 0.0) || std::abs(p) < phi_tolerance(t)) {
    throw GeometryError(ErrorCode::WrongRegion, "canonicalize_leaf requires Phi < 0");
  }
  return detail::spectral_canonical(t);
}

/// Both regions: for Phi > 0 the rotation is composed with diag(1, 1, -1),
/// giving det O = -1 and an anti-isomorphism onto N_{q,r}.
inline CanonicalForm canonicalize_any(const Triple& t) {
  const double p = phi(t);
  if (std::abs(p) < phi_tolerance(t) || p == 0.0) {
    throw GeometryError(ErrorCode::DegenerateConfiguration, "Phi vanishes");
  }
  if (p < 0.0) return detail::spectral_canonical(t);
  CanonicalForm out = detail::spectral_canonical(t);
  out.o.col(2) *= -1.0;
  out.anti = true;
  return out;
}

inline TangentFrame frame(const Triple& t) { return distribution_frame(t); }

struct FrameOperator {
  Mat4 m = Mat4::Zero();
};

struct ComplexStructures {
  IntMat4 i, j, k;
};

/// I(V0,V1,V2,V3) = (V1,-V0,V3,-V2), J = (V2,-V3,-V0,V1), K = (V3,V2,-V1,-V0).
inline ComplexStructures complex_structures(const Triple& t) {
  (void)distribution_frame(t);
  ComplexStructures cs;
  cs.i << 0, -1, 0, 0,
      1, 0, 0, 0,
      0, 0, 0, -1,
      0, 0, 1, 0;
  cs.j << 0, 0, -1, 0,
      0, 0, 0, 1,
      1, 0, 0, 0,
      0, -1, 0, 0;
  cs.k << 0, 0, 0, -1,
      0, 0, -1, 0,
      0, 1, 0, 0,
      1, 0, 0, 0;
  return cs;
}

/// omega_k^flat in the frame basis: m(a, b) = omega_k(V_b, V_a).
///
/// Covectors alpha_a with pi_k#(alpha_a) = V_a are found by least squares,
/// then omega_k(V_a, V_b) = <alpha_a, V_b>.
inline FrameOperator omega_frame(int k, const Triple& t) {
  const TangentFrame f = distribution_frame(t);
  const BivectorMatrix pi = pi_matrix(k, t);
  const Eigen::Matrix<double, 9, 4> v = f.matrix();
  const Mat9 sharp = pi.m.transpose();
  const Eigen::Matrix<double, 9, 4> alpha = sharp.completeOrthogonalDecomposition().solve(v);
  const double resid = (sharp * alpha - v).norm();
  if (!(resid <= 1e-8 * v.norm())) {
    throw GeometryError(ErrorCode::SingularRestriction, "frame is not in the image of pi#");
  }
  const Mat4 omega = alpha.transpose() * v;
  if (!(std::abs(omega.determinant()) > 1e-12 * std::pow(omega.cwiseAbs().maxCoeff(), 4))) {
    throw GeometryError(ErrorCode::SingularRestriction, "leafwise restriction is singular");
  }
  FrameOperator out;
  out.m = omega.transpose();
  return out;
}

struct HypersymplecticReport {
  /// max over i != j of |[(omega_i)^-1 omega_j]^2 + Id|.
  double condition1 = 0.0;
  /// omega_3 (omega_1)^-1 omega_2 in the frame basis.
  Mat4 g = Mat4::Zero();
  /// max |g / (-Phi) - Id|.
  double metric_defect = 0.0;
  bool positive_definite = false;
  bool negative_definite = false;
};

inline HypersymplecticReport hypersymplectic_check(const Triple& t) {
  std::array<Mat4, 3> w;
  for (int k = 0; k < 3; ++k) w[static_cast<std::size_t>(k)] = omega_frame(k + 1, t).m;
  HypersymplecticReport rep;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      const Mat4 a = w[static_cast<std::size_t>(i)].inverse() * w[static_cast<std::size_t>(j)];
      rep.condition1 = std::max(rep.condition1, (a * a + Mat4::Identity()).cwiseAbs().maxCoeff());
    }
  }
  rep.g = w[2] * w[0].inverse() * w[1];
  rep.metric_defect = (rep.g / (-phi(t)) - Mat4::Identity()).cwiseAbs().maxCoeff();
  const Vec4 ev = Eigen::SelfAdjointEigenSolver<Mat4>(0.5 * (rep.g + rep.g.transpose())).eigenvalues();
  rep.positive_definite = ev.minCoeff() > 0.0;
  rep.negative_definite = ev.maxCoeff() < 0.0;
  return rep;
}

/// Complex structures recovered from the symplectic forms:
/// I = (omega_3)^-1 omega_2, J = (omega_1)^-1 omega_3, K = (omega_2)^-1 omega_1.
inline std::array<Mat4, 3> complex_structures_from_omega(const Triple& t) {
  const Mat4 w1 = omega_frame(1, t).m;
  const Mat4 w2 = omega_frame(2, t).m;
  const Mat4 w3 = omega_frame(3, t).m;
  return {w3.inverse() * w2, w1.inverse() * w3, w2.inverse() * w1};
}

struct FrameExpansion {
  Vec4 c = Vec4::Zero();
  /// |u - sum c_a V_a| / |u|; small iff u is tangent to the leaf.
  double residual = 0.0;
};

/// Coordinates of an ambient vector in the frame V0..V3 (least squares).
inline FrameExpansion frame_expand(const TangentFrame& f, const Vec9& u) {
  const Eigen::Matrix<double, 9, 4> v = f.matrix();
  FrameExpansion out;
  out.c = v.colPivHouseholderQr().solve(u);
  const double n = u.norm();
  out.residual = n > 0.0 ? (v * out.c - u).norm() / n : 0.0;
  return out;
}

/// Leaf metric g(V_a, V_b) = -Phi delta_ab applied to frame coordinates.
inline double frame_metric(const Triple& t, const Vec4& u, const Vec4& w) { return -phi(t) * u.dot(w); }

/// Leaf metric of two ambient tangent vectors at t.
inline double leaf_metric(const Triple& t, const Vec9& u, const Vec9& w) {
  const TangentFrame f = distribution_frame(t);
  return frame_metric(t, frame_expand(f, u).c, frame_expand(f, w).c);
}

struct BoundaryTangent {
  std::array<double, 4> k{};

  double operator[](int i) const { return k[static_cast<std::size_t>(i)]; }
};

/// Extension of the metric to a boundary point (a, 0, 0): (1/|a|) sum k_i k'_i.
inline double boundary_metric(const Vec3& a, const BoundaryTangent& k, const BoundaryTangent& k2) {
  const double n = a.norm();
  if (!(n > 0.0)) throw GeometryError(ErrorCode::ZeroBoundaryPoint, "metric does not extend to the origin");
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += k[i] * k2[i];
  return s / n;
}

/// The tangent vector [k1,k2,k3,k4] at (|a| e1, 0, 0) as an ambient 9-vector:
/// (k1 e2 + k2 e3, k3 e2 + k4 e3, k4 e2 - k3 e3). It is the limit of leaf
/// tangents along (sqrt(s^2+q) e1, s e2, -s e3) as s -> 0.
inline Vec9 boundary_tangent_vector(const BoundaryTangent& k) {
  const Vec3 e2 = basis(1);
  const Vec3 e3 = basis(2);
  return Triple(k[0] * e2 + k[1] * e3, k[2] * e2 + k[3] * e3, k[3] * e2 - k[2] * e3).to_vector();
}

}  // namespace hyperlie
