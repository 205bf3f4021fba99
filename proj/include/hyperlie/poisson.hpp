#pragma once

// The hyper-Lie Poisson bivectors pi_1, pi_2, pi_3 on su(2)^3 (Phi != 0), their
// Casimirs, the symplectic distribution frame, and the projection to the
// Lie-Poisson structure on su(2)^C.
//
// A bivector at a point is stored as the 9x9 antisymmetric matrix of brackets
// of the coordinate functions, entry ((i,alpha),(j,beta)) = {l^i_{e_alpha}, l^j_{e_beta}}.
// The musical map is pi#(alpha) = pi(alpha, .) = m^T alpha.

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hyperlie/error.hpp"
#include "hyperlie/su2.hpp"

namespace hyperlie {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct BivectorMatrix {
  Triple at;
  Mat9 m = Mat9::Zero();

  Vec9 sharp(const Vec9& covector) const { return m.transpose() * covector; }
  double operator()(const Vec9& alpha, const Vec9& beta) const { return alpha.dot(m * beta); }
};

/// Linear map of sigma: (a1, a2, a3) -> (a3, a1, a2) on coordinates.
inline Mat9 cyclic_permutation_matrix() {
  Mat9 p = Mat9::Zero();
  p.block<3, 3>(0, 6).setIdentity();
  p.block<3, 3>(3, 0).setIdentity();
  p.block<3, 3>(6, 3).setIdentity();
  return p;
}

/// Linear map of sigma_O: (a1, a2, a3) -> (a1, a2, a3) O, i.e. a'_j = sum_i a_i O_ij.
inline Mat9 sigma_matrix(const Mat3& o) {
  Mat9 s = Mat9::Zero();
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) s.block<3, 3>(3 * j, 3 * i) = o(i, j) * Mat3::Identity();
  }
  return s;
}

namespace detail {

inline Mat9 pi1_raw(const Triple& t) {
  const Mat3 a = a_tensor(t).m;
  const Mat3 e1 = structure_block(t[0]);
  const Mat3 e2 = structure_block(t[1]);
  const Mat3 e3 = structure_block(t[2]);
  Mat9 m;
  m << e1, e2, e3,
      e2, -e1, a,
      e3, -a, -e1;
  return m;
}

}  // namespace detail

/// pi_k at t for k in {1,2,3}. pi_2 = sigma_* pi_1 and pi_3 = sigma_* pi_2 are
/// obtained by conjugating pi_1 at the sigma-preimage point.
inline BivectorMatrix pi_matrix(int k, const Triple& t) {
  if (k < 1 || k > 3) throw GeometryError(ErrorCode::InvalidArgument, "pi index must be 1, 2 or 3");
  const Mat9 p = cyclic_permutation_matrix();
  Vec9 x = t.to_vector();
  Mat9 conj = Mat9::Identity();
  for (int step = 1; step < k; ++step) {
    x = p.transpose() * x;
    conj = conj * p;
  }
  BivectorMatrix out;
  out.at = t;
  out.m = conj * detail::pi1_raw(Triple::from_vector(x)) * conj.transpose();
  return out;
}

inline double default_fd_step(const Triple& t) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * t.scale();
}

/// Max over index triples of |sum_l (P^{li} d_l P^{jk} + P^{lj} d_l P^{ki} + P^{lk} d_l P^{ij})|
/// for a matrix-valued field, with fourth-order central differences of step h.
template <int N, class Field>
double schouten_residual(Field&& field, const Eigen::Matrix<double, N, 1>& x, double h) {
  using Mat = Eigen::Matrix<double, N, N>;
  using Vec = Eigen::Matrix<double, N, 1>;
  const Mat p = field(x);
  std::array<Mat, N> d;
  for (int l = 0; l < N; ++l) {
    Vec step = Vec::Zero();
    step(l) = h;
    d[static_cast<std::size_t>(l)] = (8.0 * (field(Vec(x + step)) - field(Vec(x - step))) -
                                      (field(Vec(x + 2.0 * step)) - field(Vec(x - 2.0 * step)))) /
                                     (12.0 * h);
  }
  // t(i,j,k) = sum_l P^{li} d_l P^{jk}
  auto term = [&](int i, int j, int k) {
    double s = 0.0;
    for (int l = 0; l < N; ++l) s += p(l, i) * d[static_cast<std::size_t>(l)](j, k);
    return s;
  };
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < N; ++k) {
        const double r = term(i, j, k) + term(j, k, i) + term(k, i, j);
        worst = std::max(worst, std::abs(r));
      }
    }
  }
  return worst;
}

/// Finite-difference Jacobi (Schouten) residual of pi_k at t.
inline double jacobi_residual(int k, const Triple& t, double h) {
  if (!(h > 0.0)) throw GeometryError(ErrorCode::InvalidArgument, "FD step must be positive");
  const Vec9 x = t.to_vector();
  for (int l = 0; l < 9; ++l) {
    for (double sgn : {-2.0, -1.0, 1.0, 2.0}) {
      Vec9 y = x;
      y(l) += sgn * h;
      const Triple ty = Triple::from_vector(y);
      if (std::abs(phi(ty)) < phi_tolerance(ty) || phi(ty) * phi(t) <= 0.0) {
        throw GeometryError(ErrorCode::DegenerateConfiguration, "FD stencil leaves the region Phi != 0");
      }
    }
  }
  return schouten_residual<9>([k](const Vec9& y) { return pi_matrix(k, Triple::from_vector(y)).m; }, x, h);
}

struct CasimirVector {
  std::array<double, 5> f{};

  double operator[](int i) const { return f[static_cast<std::size_t>(i)]; }
};

/// (<a1,a2>, <a2,a3>, <a3,a1>, <a1,a1> - <a2,a2>, <a2,a2> - <a3,a3>).
inline CasimirVector casimirs(const Triple& t) {
  return {{inner(t[0], t[1]), inner(t[1], t[2]), inner(t[2], t[0]),
           inner(t[0], t[0]) - inner(t[1], t[1]), inner(t[1], t[1]) - inner(t[2], t[2])}};
}

inline std::array<Vec9, 5> casimir_gradients(const Triple& t) {
  const Vec3 z = Vec3::Zero();
  auto pack = [](const Vec3& u, const Vec3& v, const Vec3& w) { return Triple(u, v, w).to_vector(); };
  return {pack(t[1], t[0], z), pack(z, t[2], t[1]), pack(t[2], z, t[0]),
          pack(2.0 * t[0], -2.0 * t[1], z), pack(z, 2.0 * t[1], -2.0 * t[2])};
}

/// The four frame fields V0..V3 at a point, as ambient 9-vectors.
struct TangentFrame {
  Triple at;
  std::array<Vec9, 4> v;

  const Vec9& operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

  /// Columns V0..V3.
  Eigen::Matrix<double, 9, 4> matrix() const {
    Eigen::Matrix<double, 9, 4> m;
    for (int i = 0; i < 4; ++i) m.col(i) = v[static_cast<std::size_t>(i)];
    return m;
  }

  double x() const { return inner(at[0], at[0]); }
  double y() const { return inner(at[1], at[1]); }
  double z() const { return inner(at[2], at[2]); }
};

inline TangentFrame frame_unchecked(const Triple& t) {
  const Vec3 z = Vec3::Zero();
  const Vec3& a1 = t[0];
  const Vec3& a2 = t[1];
  const Vec3& a3 = t[2];
  auto pack = [](const Vec3& u, const Vec3& v, const Vec3& w) { return Triple(u, v, w).to_vector(); };
  TangentFrame f;
  f.at = t;
  f.v = {pack(bracket(a2, a3), bracket(a3, a1), bracket(a1, a2)),
         pack(z, bracket(a2, a1), bracket(a3, a1)),
         pack(bracket(a1, a2), z, bracket(a3, a2)),
         pack(bracket(a1, a3), bracket(a2, a3), z)};
  return f;
}

/// V0 = ([a2,a3],[a3,a1],[a1,a2]), V1 = (0,[a2,a1],[a3,a1]),
/// V2 = ([a1,a2],0,[a3,a2]), V3 = ([a1,a3],[a2,a3],0).
inline TangentFrame distribution_frame(const Triple& t) {
  if (std::abs(phi(t)) < phi_tolerance(t) || phi(t) == 0.0) {
    throw GeometryError(ErrorCode::DegenerateConfiguration, "frame degenerates where Phi vanishes");
  }
  return frame_unchecked(t);
}

/// Lie-Poisson matrix of su(2)^C as a real Lie algebra at z = x + i y, in coordinates (x, y).
inline Mat6 lie_poisson_matrix(const Vec3& x, const Vec3& y) {
  const Mat3 ex = structure_block(x);
  const Mat3 ey = structure_block(y);
  Mat6 m;
  m << ex, ey,
      ey, -ex;
  return m;
}

/// || J pi_1 J^T - pi_Lie(a1 + i a2) || (max-abs), J the coordinate matrix of pr_12.
inline double pr12_pushforward_check(const Triple& t) {
  Eigen::Matrix<double, 6, 9> j = Eigen::Matrix<double, 6, 9>::Zero();
  j.block<6, 6>(0, 0).setIdentity();
  const Mat6 pushed = j * pi_matrix(1, t).m * j.transpose();
  return (pushed - lie_poisson_matrix(t[0], t[1])).cwiseAbs().maxCoeff();
}

}  // namespace hyperlie
