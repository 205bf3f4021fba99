#pragma once

// Levi-Civita connection and Riemann tensor of N_{q,r} in the frame V0..V3.
//
// Along a canonical leaf the metric is g(V_i, V_j) = -Phi delta_ij and the
// only non-constant frame functions are X, Y, Z and Phi, with
//   V0 X = V0 Y = V0 Z = 2 Phi,   V0 Phi = XY + YZ + ZX,
// and V_i of all of them zero for i >= 1. Every bracket and connection
// coefficient has the form (a XY + b YZ + c ZX) / Phi, so derivatives along
// the frame are closed-form.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hyperlie/error.hpp"
#include "hyperlie/leaf.hpp"
#include "hyperlie/parallel.hpp"
#include "hyperlie/sampling.hpp"
#include "hyperlie/su2.hpp"

namespace hyperlie {

/// Values of X, Y, Z, Phi at a leaf point.
struct LeafScalars {
  double x = 0.0, y = 0.0, z = 0.0, phi = 0.0;

  double v0_phi() const { return x * y + y * z + z * x; }
};

/// From chart data: X = s^2 + r + q, Y = s^2 + r, Z = s^2, Phi = -sqrt(XYZ).
inline LeafScalars leaf_scalars(const LeafParams& p, double s) {
  if (!(s > 0.0)) throw GeometryError(ErrorCode::InvalidChart, "chart parameter s must be positive");
  LeafScalars l;
  l.z = s * s;
  l.y = l.z + p.r;
  l.x = l.y + p.q;
  l.phi = -std::sqrt(l.x * l.y * l.z);
  return l;
}

/// From a point; throws NotInCanonicalLeaf / WrongRegion if t is not on some N_{q,r}.
inline LeafScalars leaf_scalars(const Triple& t) {
  (void)leaf_coords(t);
  return {inner(t[0], t[0]), inner(t[1], t[1]), inner(t[2], t[2]), phi(t)};
}

/// (xy XY + yz YZ + zx ZX) / Phi.
struct FrameCoeff {
  double xy = 0.0, yz = 0.0, zx = 0.0;

  double numerator(const LeafScalars& l) const { return xy * l.x * l.y + yz * l.y * l.z + zx * l.z * l.x; }
  double eval(const LeafScalars& l) const { return numerator(l) / l.phi; }

  /// V0 of the coefficient. V_i of it vanishes for i >= 1.
  double v0(const LeafScalars& l) const {
    const double dnum = 2.0 * l.phi * (xy * (l.x + l.y) + yz * (l.y + l.z) + zx * (l.z + l.x));
    return dnum / l.phi - numerator(l) * l.v0_phi() / (l.phi * l.phi);
  }

  FrameCoeff operator+(const FrameCoeff& o) const { return {xy + o.xy, yz + o.yz, zx + o.zx}; }
  FrameCoeff operator-() const { return {-xy, -yz, -zx}; }
  bool zero() const { return xy == 0.0 && yz == 0.0 && zx == 0.0; }
};

using Table3 = std::array<std::array<std::array<double, 4>, 4>, 4>;
using Table4 = std::array<Table3, 4>;
using SymbolicTable3 = std::array<std::array<std::array<FrameCoeff, 4>, 4>, 4>;

namespace detail {

/// [V_i, V_j] = sum_k c[i][j][k] V_k.
inline const SymbolicTable3& bracket_symbols() {
  static const SymbolicTable3 table = [] {
    SymbolicTable3 c{};
    auto set = [&c](int i, int j, int k, FrameCoeff v) {
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = v;
      c[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = -v;
    };
    set(0, 1, 1, {0, 1, 0});
    set(0, 2, 2, {0, 0, 1});
    set(0, 3, 3, {1, 0, 0});
    set(1, 2, 3, {-1, 0, 0});
    set(1, 3, 2, {0, 0, 1});
    set(2, 3, 1, {0, -1, 0});
    return c;
  }();
  return table;
}

/// nabla_{V_i} V_j = sum_k g[i][j][k] V_k.
inline const SymbolicTable3& connection_symbols() {
  static const SymbolicTable3 table = [] {
    SymbolicTable3 g{};
    auto at = [&g](int i, int j, int k) -> FrameCoeff& {
      return g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    };
    for (int j = 0; j < 4; ++j) at(0, j, j) = {0.5, 0.5, 0.5};
    at(1, 1, 0) = {-0.5, 0.5, -0.5};
    at(1, 2, 3) = {-0.5, 0.5, -0.5};
    at(1, 3, 2) = {0.5, -0.5, 0.5};
    at(2, 2, 0) = {-0.5, -0.5, 0.5};
    at(2, 3, 1) = {-0.5, -0.5, 0.5};
    at(3, 3, 0) = {0.5, -0.5, -0.5};
    // Torsion-free: nabla_i V_j = nabla_j V_i + [V_i, V_j] for i > j.
    const SymbolicTable3& c = bracket_symbols();
    for (int i = 1; i < 4; ++i) {
      for (int j = 0; j < i; ++j) {
        for (int k = 0; k < 4; ++k) {
          at(i, j, k) = at(j, i, k) + c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
        }
      }
    }
    return g;
  }();
  return table;
}

inline Table3 evaluate(const SymbolicTable3& s, const LeafScalars& l) {
  Table3 out{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) out[i][j][k] = s[i][j][k].zero() ? 0.0 : s[i][j][k].eval(l);
  return out;
}

}  // namespace detail

struct BracketTable {
  Table3 c{};
};

struct ConnectionTable {
  Table3 gamma{};
};

struct RiemannTable {
  Table4 r{};

  double operator()(int i, int j, int k, int l) const {
    return r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]
            [static_cast<std::size_t>(l)];
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& a : r)
      for (const auto& b : a)
        for (const auto& c : b)
          for (double v : c) m = std::max(m, std::abs(v));
    return m;
  }
  int nonzero_count(double tol) const {
    int n = 0;
    for (const auto& a : r)
      for (const auto& b : a)
        for (const auto& c : b)
          for (double v : c) n += std::abs(v) > tol ? 1 : 0;
    return n;
  }
};

inline BracketTable frame_lie_brackets(const LeafScalars& l) { return {detail::evaluate(detail::bracket_symbols(), l)}; }
inline BracketTable frame_lie_brackets(const Triple& t) { return frame_lie_brackets(leaf_scalars(t)); }

inline ConnectionTable connection_table(const LeafScalars& l) { return {detail::evaluate(detail::connection_symbols(), l)}; }
inline ConnectionTable connection_table(const Triple& t) { return connection_table(leaf_scalars(t)); }

namespace detail {

/// R_1221, R_1331, R_2332 as polynomials in (Z, q = X - Y, r = Y - Z) over 2 Phi.
/// Written in these variables so the type-0 leaf gives exact zeros.
struct RiemannSeeds {
  double a, b, c;
};

inline RiemannSeeds riemann_seeds(double z, double q, double r, double phi) {
  const double z2 = z * z, z3 = z2 * z, q2 = q * q, r2 = r * r, r3 = r2 * r, r4 = r2 * r2;
  const double n1221 = z3 * (-q - 2 * r) + z2 * (-6 * q * r - 6 * r2) + z * (-3 * q2 * r - 9 * q * r2 - 6 * r3) -
                       2 * q2 * r2 - 4 * q * r3 - 2 * r4;
  const double n1331 =
      z3 * (-q + r) + z2 * (3 * q * r + 3 * r2) + z * (3 * q2 * r + 6 * q * r2 + 3 * r3) + q2 * r2 + 2 * q * r3 + r4;
  const double n2332 = z3 * (2 * q + r) + z2 * (3 * q * r + 3 * r2) + z * (3 * q * r2 + 3 * r3) + q2 * r2 + 2 * q * r3 + r4;
  return {-n1221 / (2 * phi), -n1331 / (2 * phi), -n2332 / (2 * phi)};
}

inline void set_with_symmetries(Table4& r, int i, int j, int k, int l, double v) {
  auto put = [&r](int a, int b, int c, int d, double w) {
    r[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] = w;
  };
  for (int swap = 0; swap < 2; ++swap) {
    const int a = swap ? k : i, b = swap ? l : j, c = swap ? i : k, d = swap ? j : l;
    put(a, b, c, d, v);
    put(b, a, c, d, -v);
    put(a, b, d, c, -v);
    put(b, a, d, c, v);
  }
}

}  // namespace detail

/// Analytic Riemann tensor R_ijkl = g(R(V_i,V_j)V_k, V_l) from the three generators
/// R_1221, R_1331, R_2332, closed under the index and Kaehler symmetries.
inline RiemannTable riemann_analytic(const LeafParams& p, const LeafScalars& l) {
  const auto s = detail::riemann_seeds(l.z, p.q, p.r, l.phi);
  RiemannTable t;
  detail::set_with_symmetries(t.r, 1, 2, 1, 2, -s.a);
  detail::set_with_symmetries(t.r, 0, 3, 0, 3, -s.a);
  detail::set_with_symmetries(t.r, 1, 2, 0, 3, s.a);
  detail::set_with_symmetries(t.r, 0, 2, 0, 2, -s.b);
  detail::set_with_symmetries(t.r, 1, 3, 1, 3, -s.b);
  detail::set_with_symmetries(t.r, 1, 3, 0, 2, -s.b);
  detail::set_with_symmetries(t.r, 0, 1, 0, 1, -s.c);
  detail::set_with_symmetries(t.r, 2, 3, 2, 3, -s.c);
  detail::set_with_symmetries(t.r, 2, 3, 0, 1, s.c);
  return t;
}

/// R(V_i,V_j)V_k = nabla_i nabla_j V_k - nabla_j nabla_i V_k - nabla_[V_i,V_j] V_k,
/// built from the connection table and its closed-form frame derivatives.
inline RiemannTable riemann_from_connection(const LeafScalars& l) {
  const SymbolicTable3& gs = detail::connection_symbols();
  const Table3 g = detail::evaluate(gs, l);
  const Table3 c = detail::evaluate(detail::bracket_symbols(), l);
  auto dgamma = [&](int i, int j, int k, int m) {
    return i == 0 ? gs[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].v0(l) : 0.0;
  };
  auto G = [&g](int i, int j, int k) {
    return g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  };
  // nabla_i nabla_j V_k, coefficient on V_n.
  auto nn = [&](int i, int j, int k, int n) {
    double v = dgamma(i, j, k, n);
    for (int m = 0; m < 4; ++m) v += G(j, k, m) * G(i, m, n);
    return v;
  };
  RiemannTable out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int n = 0; n < 4; ++n) {
          double v = nn(i, j, k, n) - nn(j, i, k, n);
          for (int m = 0; m < 4; ++m) v -= c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] * G(m, k, n);
          out.r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
              -l.phi * v;
        }
  return out;
}

/// Natural size of curvature entries at a leaf point: Phi^2 / sqrt(max(X,Y,Z)).
inline double riemann_scale(const LeafScalars& l) { return l.phi * l.phi / std::sqrt(std::max({l.x, l.y, l.z})); }

inline double riemann_discrepancy(const RiemannTable& a, const RiemannTable& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 4; ++l) m = std::max(m, std::abs(a.r[i][j][k][l] - b.r[i][j][k][l]));
  return m;
}

/// Analytic table, cross-checked against the connection-derived tensor.
inline RiemannTable riemann_table(const LeafParams& p, const LeafScalars& l, double rel_tol = 1e-8) {
  RiemannTable analytic = riemann_analytic(p, l);
  const RiemannTable derived = riemann_from_connection(l);
  const double ref = std::max(analytic.max_abs(), riemann_scale(l));
  if (!(riemann_discrepancy(analytic, derived) <= rel_tol * ref)) {
    throw GeometryError(ErrorCode::SymmetryViolation, "analytic and connection-derived curvature disagree");
  }
  return analytic;
}

inline RiemannTable riemann_table(const LeafParams& p, double s) { return riemann_table(p, leaf_scalars(p, s)); }

inline RiemannTable riemann_table(const Triple& t) {
  const auto [p, c] = leaf_coords(t);
  (void)c;
  return riemann_table(p, leaf_scalars(t));
}

/// R(u,w,w,u) for frame-coordinate vectors.
inline double riemann_contract(const RiemannTable& r, const Vec4& u, const Vec4& w) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) s += r(i, j, k, l) * u(i) * w(j) * w(k) * u(l);
  return s;
}

/// Sectional curvature of span{u, w} given in frame coordinates.
inline double sectional_frame(const RiemannTable& r, double phi_value, const Vec4& u, const Vec4& w) {
  const double uu = -phi_value * u.dot(u);
  const double ww = -phi_value * w.dot(w);
  const double uw = -phi_value * u.dot(w);
  const double den = uu * ww - uw * uw;
  if (!(std::abs(den) > 1e-14 * std::abs(uu * ww)) || uu * ww == 0.0) {
    throw GeometryError(ErrorCode::DegeneratePlane, "vectors do not span a 2-plane");
  }
  return riemann_contract(r, u, w) / den;
}

struct SectionPlane {
  Vec9 u = Vec9::Zero();
  Vec9 w = Vec9::Zero();
};

/// Sectional curvature of a plane of ambient tangent vectors at t.
inline double sectional(const Triple& t, const SectionPlane& p) {
  const RiemannTable r = riemann_table(t);
  const TangentFrame f = distribution_frame(t);
  const FrameExpansion eu = frame_expand(f, p.u);
  const FrameExpansion ew = frame_expand(f, p.w);
  if (eu.residual > 1e-8 || ew.residual > 1e-8) {
    throw GeometryError(ErrorCode::DegeneratePlane, "plane is not tangent to the leaf");
  }
  return sectional_frame(r, phi(t), eu.c, ew.c);
}

/// Haar-uniform 2-plane in frame coordinates: Gram-Schmidt of a Gaussian pair.
/// Frame coordinates are orthonormal up to the common factor -Phi.
inline std::pair<Vec4, Vec4> random_frame_plane(Rng& rng) {
  Vec4 u, w;
  for (int i = 0; i < 4; ++i) u(i) = gaussian(rng);
  for (int i = 0; i < 4; ++i) w(i) = gaussian(rng);
  u.normalize();
  w -= w.dot(u) * u;
  w.normalize();
  return {u, w};
}

struct CurvatureRow {
  double q = 0.0, r = 0.0, s = 0.0;
  int plane_id = 0;
  double kappa = 0.0;
};

struct CurvatureSummary {
  double min = 0.0;
  double max = 0.0;
  /// 12/sqrt(q) for type 1, infinity otherwise.
  double bound = std::numeric_limits<double>::infinity();
  bool bound_respected = true;
};

struct CurvatureScan {
  std::vector<CurvatureRow> rows;
  CurvatureSummary summary;
};

/// Frame planes (V_a, V_b), a < b, in the order 01, 02, 03, 12, 13, 23.
inline constexpr std::array<std::array<int, 2>, 6> kFramePlanes{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// kappa on each s of the grid for the six frame planes (ids 0..5) and
/// plane_samples Haar planes (ids 6..). Rows are ordered by (s index, plane id)
/// regardless of how many workers run.
inline CurvatureScan curvature_scan(const LeafParams& p, const std::vector<double>& s_grid, int plane_samples,
                                    std::uint64_t seed = 0) {
  if (s_grid.empty()) throw GeometryError(ErrorCode::InvalidArgument, "s grid is empty");
  if (plane_samples < 0) throw GeometryError(ErrorCode::InvalidArgument, "plane_samples must be non-negative");
  (void)type_of(p);
  const std::size_t per_s = 6 + static_cast<std::size_t>(plane_samples);
  std::vector<CurvatureRow> rows(s_grid.size() * per_s);
  parallel_for(s_grid.size(), [&](std::size_t n) {
    const double s = s_grid[n];
    const LeafScalars l = leaf_scalars(p, s);
    const RiemannTable r = riemann_table(p, l);
    Rng rng = make_rng(seed, n);
    for (std::size_t id = 0; id < per_s; ++id) {
      Vec4 u = Vec4::Zero(), w = Vec4::Zero();
      if (id < 6) {
        u(kFramePlanes[id][0]) = 1.0;
        w(kFramePlanes[id][1]) = 1.0;
      } else {
        std::tie(u, w) = random_frame_plane(rng);
      }
      rows[n * per_s + id] = {p.q, p.r, s, static_cast<int>(id), sectional_frame(r, l.phi, u, w)};
    }
  });
  CurvatureScan out;
  out.rows = std::move(rows);
  out.summary.min = std::numeric_limits<double>::infinity();
  out.summary.max = -std::numeric_limits<double>::infinity();
  for (const auto& row : out.rows) {
    out.summary.min = std::min(out.summary.min, row.kappa);
    out.summary.max = std::max(out.summary.max, row.kappa);
  }
  if (type_of(p) == 1) {
    out.summary.bound = 12.0 / std::sqrt(p.q);
    out.summary.bound_respected = std::max(std::abs(out.summary.min), std::abs(out.summary.max)) <= out.summary.bound;
  }
  return out;
}

/// kappa(V0, V1) = R_0110 / Phi^2 in closed form; on N_{0,r} it equals r / (2 Z^{3/2}).
inline double kappa01(const LeafParams& p, double s) {
  const LeafScalars l = leaf_scalars(p, s);
  const RiemannTable r = riemann_analytic(p, l);
  return r(0, 1, 1, 0) / (l.phi * l.phi);
}

}  // namespace hyperlie
