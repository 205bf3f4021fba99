#pragma once

// Nahm's equations B1' = -[B2,B3], B2' = -[B3,B1], B3' = -[B1,B2] on (-inf, 0],
// the tangent frame of the moduli space, its L^2 metric, the evaluation map
// to the leaves, and the flow of V0 on su(2)^3.
//
// The Nahm vector field is -V0 evaluated at the permuted triple (B2,B3,B1), so
// integrating backward from t = 0 is forward V0-flow of the image point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hyperlie/error.hpp"
#include "hyperlie/leaf.hpp"
#include "hyperlie/poisson.hpp"
#include "hyperlie/su2.hpp"

namespace hyperlie {

/// (B1, B2, B3).
using NahmState = Triple;

inline NahmState nahm_rhs(const NahmState& s) {
  return {-bracket(s[1], s[2]), -bracket(s[2], s[0]), -bracket(s[0], s[1])};
}

/// Second time derivative along the flow: B1'' = -[B2',B3] - [B2,B3'] and cyclic.
inline NahmState nahm_second(const NahmState& s) {
  const NahmState d = nahm_rhs(s);
  return {-bracket(d[1], s[2]) - bracket(s[1], d[2]), -bracket(d[2], s[0]) - bracket(s[2], d[0]),
          -bracket(d[0], s[1]) - bracket(s[0], d[1])};
}

template <class Field>
Vec9 rk4_step(Field&& f, const Vec9& x, double h) {
  const Vec9 k1 = f(x);
  const Vec9 k2 = f(Vec9(x + 0.5 * h * k1));
  const Vec9 k3 = f(Vec9(x + 0.5 * h * k2));
  const Vec9 k4 = f(Vec9(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

enum class DecayKind { Stationary, Exponential, Polynomial };

inline const char* to_string(DecayKind k) {
  switch (k) {
    case DecayKind::Stationary: return "stationary";
    case DecayKind::Exponential: return "exponential";
    case DecayKind::Polynomial: return "polynomial";
  }
  return "unknown";
}

/// Model for the logarithmic decay rate lambda(u) = -d/du log|f| in elapsed time u.
/// Exponential: lambda constant. Polynomial |f| ~ (u + u0)^-k: 1/lambda = (u + u0)/k.
struct DecayFit {
  DecayKind kind = DecayKind::Stationary;
  /// Exponential rate; 0 for polynomial decay.
  double rate = 0.0;
  /// Polynomial exponent k; infinity for exponential decay.
  double exponent = std::numeric_limits<double>::infinity();
  /// Fitted lambda at the last sample.
  double lambda_end = 0.0;
  /// Fitted u + u0 at the last sample (polynomial only).
  double offset_end = std::numeric_limits<double>::infinity();
  /// Relative misfit of the accepted model.
  double misfit = 0.0;
};

struct DecayTolerances {
  /// Max relative spread of lambda accepted as exponential.
  double exponential_spread = 1e-2;
  /// Max relative rms residual of the linear fit of 1/lambda.
  double polynomial_misfit = 1e-2;
};

/// Classifies decay from samples (u, lambda). Throws NoDecayFit if neither model fits.
inline DecayFit fit_decay(const std::vector<double>& u, const std::vector<double>& lambda,
                          const DecayTolerances& tol = {}) {
  DecayFit fit;
  if (u.empty()) return fit;
  for (double l : lambda) {
    if (!(l > 0.0) || !std::isfinite(l)) throw GeometryError(ErrorCode::NoDecayFit, "state is not decaying");
  }
  const auto [mn, mx] = std::minmax_element(lambda.begin(), lambda.end());
  double mean = 0.0;
  for (double l : lambda) mean += l;
  mean /= static_cast<double>(lambda.size());
  const double spread = (*mx - *mn) / mean;
  if (spread <= tol.exponential_spread) {
    fit.kind = DecayKind::Exponential;
    fit.rate = mean;
    fit.lambda_end = mean;
    fit.misfit = spread;
    return fit;
  }
  // Least squares 1/lambda = a + b u.
  const double n = static_cast<double>(u.size());
  double su = 0, sy = 0, suu = 0, suy = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double y = 1.0 / lambda[i];
    su += u[i];
    sy += y;
    suu += u[i] * u[i];
    suy += u[i] * y;
  }
  const double den = n * suu - su * su;
  const double b = den != 0.0 ? (n * suy - su * sy) / den : 0.0;
  const double a = (sy - b * su) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = 1.0 / lambda[i] - (a + b * u[i]);
    ss += r * r;
  }
  const double misfit = std::sqrt(ss / n) / (sy / n);
  if (!(b > 0.0) || !(misfit <= tol.polynomial_misfit)) {
    throw GeometryError(ErrorCode::NoDecayFit, "decay is neither exponential nor polynomial");
  }
  fit.kind = DecayKind::Polynomial;
  fit.exponent = 1.0 / b;
  const double y_end = a + b * u.back();
  fit.lambda_end = 1.0 / y_end;
  fit.offset_end = y_end * fit.exponent;
  fit.misfit = misfit;
  return fit;
}

struct Trajectory {
  /// Descending: t[0] = 0, t.back() = -T.
  std::vector<double> t;
  std::vector<NahmState> states;
  double step = 0.0;
  double T = 0.0;
  DecayFit fit;
  /// Fitted exponential rate of |B - limit| (0 for polynomial decay).
  double decay_rate = 0.0;
  NahmState limit;

  std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
  DecayTolerances decay;
  double blowup_factor = 1e6;
};

/// Fixed-step RK4 from B(0) = s0 backward to t = -T. The node count is rounded
/// up to a multiple of 4 so composite Simpson and its Richardson estimate apply.
inline Trajectory integrate(const NahmState& s0, double T, double step, const IntegrateOptions& opt = {}) {
  if (!(step > 0.0) || !(T >= 10.0 * step)) {
    throw GeometryError(ErrorCode::InvalidArgument, "need step > 0 and T >= 10 step");
  }
  std::size_t n = static_cast<std::size_t>(std::ceil(T / step - 1e-9));
  n = (n + 3) / 4 * 4;
  const double h = T / static_cast<double>(n);
  Trajectory tr;
  tr.step = h;
  tr.T = T;
  tr.t.resize(n + 1);
  tr.states.resize(n + 1);
  tr.t[0] = 0.0;
  tr.states[0] = s0;
  const double bound = opt.blowup_factor * std::max(s0.to_vector().norm(), std::numeric_limits<double>::min());
  auto f = [](const Vec9& x) { return nahm_rhs(Triple::from_vector(x)).to_vector(); };
  Vec9 x = s0.to_vector();
  for (std::size_t i = 1; i <= n; ++i) {
    x = rk4_step(f, x, -h);
    if (!(x.norm() <= bound)) throw GeometryError(ErrorCode::BlowUp, "state norm exceeded the blow-up bound");
    tr.t[i] = -static_cast<double>(i) * h;
    tr.states[i] = Triple::from_vector(x);
  }
  // lambda(u) = d/dt log|B'| with u = -t, on the final third.
  std::vector<double> u, lambda;
  bool moving = false;
  for (std::size_t i = 2 * n / 3; i <= n; ++i) {
    const Vec9 d = nahm_rhs(tr.states[i]).to_vector();
    const double d2 = d.squaredNorm();
    if (d2 == 0.0) continue;
    moving = true;
    u.push_back(-tr.t[i]);
    lambda.push_back(d.dot(nahm_second(tr.states[i]).to_vector()) / d2);
  }
  const NahmState& end = tr.states[n];
  if (!moving) {
    tr.fit.kind = DecayKind::Stationary;
    tr.decay_rate = std::numeric_limits<double>::infinity();
    tr.limit = end;
    return tr;
  }
  tr.fit = fit_decay(u, lambda, opt.decay);
  const Vec9 d_end = nahm_rhs(end).to_vector();
  // B - L ~ B' / lambda (exponential) or B' (u+u0) / (k-1) (polynomial).
  const double factor = tr.fit.kind == DecayKind::Exponential ? 1.0 / tr.fit.lambda_end
                                                              : tr.fit.offset_end / (tr.fit.exponent - 1.0);
  tr.limit = Triple::from_vector(end.to_vector() - factor * d_end);
  tr.decay_rate = tr.fit.kind == DecayKind::Exponential ? tr.fit.rate : 0.0;
  return tr;
}

enum class ExactKind { Regular, Nilpotent };

/// Closed-form symmetric solutions B_i = f_i(t) O e_i.
/// Regular: f1 = f3 = c csch(c(t - t0)), f2 = c coth(c(t - t0)).
/// Nilpotent: f1 = f2 = f3 = 1 / (t - t0).
struct ExactSolution {
  ExactKind kind = ExactKind::Nilpotent;
  double c = 0.0;
  double t0 = 1.0;
  Mat3 o = Mat3::Identity();

  std::array<double, 3> f(double t) const {
    if (kind == ExactKind::Nilpotent) {
      const double v = 1.0 / (t - t0);
      return {v, v, v};
    }
    const double x = c * (t - t0);
    const double cs = c / std::sinh(x);
    return {cs, c * std::cosh(x) / std::sinh(x), cs};
  }

  std::array<double, 3> df(double t) const {
    if (kind == ExactKind::Nilpotent) {
      const double v = -1.0 / ((t - t0) * (t - t0));
      return {v, v, v};
    }
    const double x = c * (t - t0);
    const double s = 1.0 / std::sinh(x);
    const double ct = std::cosh(x) / std::sinh(x);
    return {-c * c * s * ct, -c * c * s * s, -c * c * s * ct};
  }

  NahmState operator()(double t) const {
    const auto v = f(t);
    return {v[0] * o.col(0), v[1] * o.col(1), v[2] * o.col(2)};
  }

  NahmState derivative(double t) const {
    const auto v = df(t);
    return {v[0] * o.col(0), v[1] * o.col(1), v[2] * o.col(2)};
  }

  /// Limit at t -> -inf: (0, -c O e2, 0) for regular, 0 for nilpotent.
  NahmState limit() const {
    if (kind == ExactKind::Nilpotent) return {};
    return {Vec3::Zero(), -c * o.col(1), Vec3::Zero()};
  }

  /// max |B'(t) - nahm_rhs(B(t))| over the given times.
  double residual(const std::vector<double>& times) const {
    double m = 0.0;
    for (double t : times) {
      m = std::max(m, (derivative(t).to_vector() - nahm_rhs((*this)(t)).to_vector()).cwiseAbs().maxCoeff());
    }
    return m;
  }
};

inline ExactSolution exact_solution(ExactKind kind, double c, double t0, const Mat3& o = Mat3::Identity()) {
  if (!(t0 > 0.0)) throw GeometryError(ErrorCode::PoleInDomain, "pole t0 must lie in t > 0");
  if (kind == ExactKind::Regular && !(c > 0.0)) throw GeometryError(ErrorCode::InvalidArgument, "c must be positive");
  if (orthogonality_defect(o) > 1e-10 || std::abs(o.determinant() - 1.0) > 1e-10) {
    throw GeometryError(ErrorCode::NotOrthogonal, "frame must be in SO(3)");
  }
  return {kind, c, t0, o};
}

/// A tangent vector (b0, b1, b2, b3) to the moduli space, sampled on a trajectory grid.
struct ModuliTangent {
  std::vector<std::array<Vec3, 4>> b;
};

/// Ṽ0 = (0, [B2,B3], [B3,B1], [B1,B2]), Ṽ1 = ([B3,B2], 0, [B2,B1], [B3,B1]),
/// Ṽ2 = ([B1,B3], [B1,B2], 0, [B3,B2]), Ṽ3 = ([B2,B1], [B1,B3], [B2,B3], 0).
inline std::array<Vec3, 4> moduli_frame_at(int i, const NahmState& s) {
  const Vec3 z = Vec3::Zero();
  const Vec3 &b1 = s[0], &b2 = s[1], &b3 = s[2];
  switch (i) {
    case 0: return {z, bracket(b2, b3), bracket(b3, b1), bracket(b1, b2)};
    case 1: return {bracket(b3, b2), z, bracket(b2, b1), bracket(b3, b1)};
    case 2: return {bracket(b1, b3), bracket(b1, b2), z, bracket(b3, b2)};
    default: return {bracket(b2, b1), bracket(b1, b3), bracket(b2, b3), z};
  }
}

inline std::array<ModuliTangent, 4> tangent_frame_nahm(const Trajectory& tr) {
  std::array<ModuliTangent, 4> out;
  for (int i = 0; i < 4; ++i) {
    auto& b = out[static_cast<std::size_t>(i)].b;
    b.reserve(tr.size());
    for (const auto& s : tr.states) b.push_back(moduli_frame_at(i, s));
  }
  return out;
}

/// Residual of the linearized Nahm system at interior nodes, with the time
/// derivative of b taken by fourth-order central differences on the grid.
inline double linearized_residual(const Trajectory& tr, const ModuliTangent& tg) {
  if (tg.b.size() != tr.size()) throw GeometryError(ErrorCode::InvalidArgument, "tangent not on trajectory grid");
  double worst = 0.0;
  const double h = tr.step;
  for (std::size_t n = 2; n + 2 < tr.size(); ++n) {
    const auto& b = tg.b[n];
    const Vec3 &B1 = tr.states[n][0], &B2 = tr.states[n][1], &B3 = tr.states[n][2];
    std::array<Vec3, 4> db;
    // Grid runs backward in t, so index n-1 is at t + h.
    for (std::size_t j = 0; j < 4; ++j) {
      db[j] = (8.0 * (tg.b[n - 1][j] - tg.b[n + 1][j]) - (tg.b[n - 2][j] - tg.b[n + 2][j])) / (12.0 * h);
    }
    const std::array<Vec3, 4> r = {
        db[0] + bracket(B1, b[1]) + bracket(B2, b[2]) + bracket(B3, b[3]),
        db[1] - bracket(B1, b[0]) + bracket(B2, b[3]) - bracket(B3, b[2]),
        db[2] - bracket(B1, b[3]) - bracket(B2, b[0]) + bracket(B3, b[1]),
        db[3] + bracket(B1, b[2]) - bracket(B2, b[1]) - bracket(B3, b[0])};
    for (const auto& v : r) worst = std::max(worst, v.cwiseAbs().maxCoeff());
  }
  return worst;
}

struct MetricValue {
  /// Quadrature on [-T, 0] plus the modelled tail on (-inf, -T].
  double value = 0.0;
  double tail = 0.0;
  /// Richardson estimate of the Simpson error.
  double quadrature_error = 0.0;
};

/// g~(b, c) = sum_j int_{-inf}^0 <b_j, c_j> dt.
inline MetricValue moduli_metric(const Trajectory& tr, const ModuliTangent& b, const ModuliTangent& c) {
  const std::size_t n = tr.size();
  if (b.b.size() != n || c.b.size() != n) throw GeometryError(ErrorCode::InvalidArgument, "tangent not on trajectory grid");
  if (n < 5 || (n - 1) % 4 != 0) throw GeometryError(ErrorCode::InvalidArgument, "grid must have 4k intervals");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += b.b[i][j].dot(c.b[i][j]);
    w[i] = s;
  }
  auto simpson = [&](std::size_t stride) {
    const double h = tr.step * static_cast<double>(stride);
    double s = w[0] + w[n - 1];
    for (std::size_t i = stride, k = 1; i + stride < n; i += stride, ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * w[i];
    return s * h / 3.0;
  };
  MetricValue out;
  const double fine = simpson(1);
  out.quadrature_error = std::abs(fine - simpson(2)) / 15.0;
  const double w_end = w[n - 1];
  double peak = 0.0;
  for (double v : w) peak = std::max(peak, std::abs(v));
  if (w_end != 0.0) {
    if (tr.fit.kind == DecayKind::Stationary) {
      if (std::abs(w_end) > 1e-12 * peak) throw GeometryError(ErrorCode::TailUnbounded, "integrand does not decay");
    } else {
      // lambda_w = -d/du log|w| at u = T, one-sided second-order difference.
      const double h = tr.step;
      const double a0 = std::log(std::abs(w[n - 1])), a1 = std::log(std::abs(w[n - 2])), a2 = std::log(std::abs(w[n - 3]));
      const double lam = (-3.0 * a0 + 4.0 * a1 - a2) / (2.0 * h);
      if (!(lam > 0.0) || std::signbit(w[n - 1]) != std::signbit(w[n - 2])) {
        throw GeometryError(ErrorCode::TailUnbounded, "integrand is not decaying at the truncation point");
      }
      double denom = lam;
      if (tr.fit.kind == DecayKind::Polynomial) {
        const double p = lam * tr.fit.offset_end;
        if (!(p > 1.0)) throw GeometryError(ErrorCode::TailUnbounded, "polynomial tail is not integrable");
        denom = lam * (1.0 - 1.0 / p);
      }
      out.tail = w_end / denom;
    }
  }
  out.value = fine + out.tail;
  return out;
}

/// (B1, B2, B3) -> (B2(0), B3(0), B1(0)).
inline Triple h_map(const Trajectory& tr) {
  const NahmState& s = tr.states.front();
  return {s[1], s[2], s[0]};
}

/// Pushforward of the evaluation map on the moduli frame: column i is the image
/// of Ṽ_i in the leaf frame, (Ṽ0, Ṽ1, Ṽ2, Ṽ3) -> (V0, V3, V1, V2).
inline IntMat4 pushforward_table() {
  IntMat4 f = IntMat4::Zero();
  f(0, 0) = 1;
  f(3, 1) = 1;
  f(1, 2) = 1;
  f(2, 3) = 1;
  return f;
}

/// The signed variant (Ṽ0, Ṽ1, Ṽ2, Ṽ3) -> (-V0, -V3, V1, V2).
inline IntMat4 signed_pushforward_table() {
  IntMat4 f = pushforward_table();
  f(0, 0) = -1;
  f(3, 1) = -1;
  return f;
}

/// Rotation relating the moduli and leaf complex structures under the signed table:
/// F I~ F^-1 = sum_j O(0,j) (I,J,K)_j, and likewise for J~, K~.
inline Mat3 intertwining_rotation() {
  Mat3 o;
  o << 0, 0, 1,
      -1, 0, 0,
      0, -1, 0;
  return o;
}

/// Moduli complex structures I~(b) = (-b1,b0,-b3,b2), J~(b) = (-b2,b3,b0,-b1),
/// K~(b) = (-b3,-b2,b1,b0) in the basis Ṽ0..Ṽ3. They share the integer matrices
/// of I, J, K on V0..V3.
inline std::array<std::array<Vec3, 4>, 3> moduli_complex_apply(const std::array<Vec3, 4>& b) {
  return {{{-b[1], b[0], -b[3], b[2]}, {-b[2], b[3], b[0], -b[1]}, {-b[3], -b[2], b[1], b[0]}}};
}

struct IsometryReport {
  std::array<double, 4> diag_errors{};
  double offdiag_max = 0.0;
  double frame_table_error = 0.0;
  bool intertwine_ok = false;
  Mat4 gram = Mat4::Zero();
  /// -Phi(h_map(tr)).
  double expected = 0.0;
  /// Largest |tail| / |value| over the diagonal entries.
  double tail_fraction = 0.0;
  double quadrature_error = 0.0;
  double linearized_residual = 0.0;
};

/// Integer-level identities: with the evaluation table F,
/// F I~ = K F, F J~ = I F, F K~ = J F; with the signed table the images are
/// (K, -I, -J), i.e. the rows of intertwining_rotation().
inline bool intertwining_identities_hold() {
  const Triple any(basis(0), basis(1), -basis(2));
  const ComplexStructures leaf = complex_structures(any);
  const ComplexStructures mod = leaf;
  const IntMat4 f = pushforward_table();
  const IntMat4 fs = signed_pushforward_table();
  const bool plain = f * mod.i == leaf.k * f && f * mod.j == leaf.i * f && f * mod.k == leaf.j * f;
  const Mat3 o = intertwining_rotation();
  const std::array<IntMat4, 3> ijk{leaf.i, leaf.j, leaf.k};
  const std::array<IntMat4, 3> tilde{mod.i, mod.j, mod.k};
  bool signed_ok = true;
  for (int a = 0; a < 3; ++a) {
    IntMat4 rhs = IntMat4::Zero();
    for (int b = 0; b < 3; ++b) rhs += static_cast<int>(o(a, b)) * ijk[static_cast<std::size_t>(b)];
    signed_ok = signed_ok && (fs * tilde[static_cast<std::size_t>(a)] == rhs * fs);
  }
  return plain && signed_ok;
}

struct IsometryTolerances {
  double frame_table = 1e-8;
};

inline IsometryReport isometry_check(const Trajectory& tr, const IsometryTolerances& tol = {}) {
  const Triple image = h_map(tr);
  const double p = phi(image);
  if (!(p < 0.0) || std::abs(p) < phi_tolerance(image)) {
    throw GeometryError(ErrorCode::WrongRegion, "image of the trajectory must have Phi < 0");
  }
  IsometryReport rep;
  rep.expected = -p;
  const auto tangents = tangent_frame_nahm(tr);
  for (const auto& tg : tangents) rep.linearized_residual = std::max(rep.linearized_residual, linearized_residual(tr, tg));
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const MetricValue m = moduli_metric(tr, tangents[static_cast<std::size_t>(i)], tangents[static_cast<std::size_t>(j)]);
      rep.gram(i, j) = rep.gram(j, i) = m.value;
      rep.quadrature_error = std::max(rep.quadrature_error, m.quadrature_error);
      if (i == j) {
        rep.diag_errors[static_cast<std::size_t>(i)] = std::abs(m.value - rep.expected) / rep.expected;
        if (m.value != 0.0) rep.tail_fraction = std::max(rep.tail_fraction, std::abs(m.tail / m.value));
      } else {
        rep.offdiag_max = std::max(rep.offdiag_max, std::abs(m.value));
      }
    }
  }
  // Pushforward of Ṽ_i at t = 0 expressed in the leaf frame at the image.
  const TangentFrame lf = distribution_frame(image);
  const IntMat4 table = pushforward_table();
  Eigen::Matrix<double, 12, 4> mf;
  for (int i = 0; i < 4; ++i) {
    const auto v = moduli_frame_at(i, tr.states.front());
    mf.col(i) << v[0], v[1], v[2], v[3];
    const FrameExpansion e = frame_expand(lf, Triple(v[2], v[3], v[1]).to_vector());
    rep.frame_table_error = std::max(rep.frame_table_error, e.residual);
    for (int a = 0; a < 4; ++a) rep.frame_table_error = std::max(rep.frame_table_error, std::abs(e.c(a) - table(a, i)));
  }
  // Moduli complex structures in the frame Ṽ must reproduce the integer tables.
  const ComplexStructures ref = complex_structures(image);
  const std::array<const IntMat4*, 3> refs{&ref.i, &ref.j, &ref.k};
  const auto solver = mf.colPivHouseholderQr();
  for (int i = 0; i < 4; ++i) {
    const auto v = moduli_frame_at(i, tr.states.front());
    const auto applied = moduli_complex_apply(v);
    for (int c = 0; c < 3; ++c) {
      Eigen::Matrix<double, 12, 1> w;
      w << applied[static_cast<std::size_t>(c)][0], applied[static_cast<std::size_t>(c)][1],
          applied[static_cast<std::size_t>(c)][2], applied[static_cast<std::size_t>(c)][3];
      const Vec4 coeff = solver.solve(w);
      for (int a = 0; a < 4; ++a) {
        rep.frame_table_error = std::max(rep.frame_table_error, std::abs(coeff(a) - (*refs[static_cast<std::size_t>(c)])(a, i)));
      }
    }
  }
  if (!(rep.frame_table_error <= tol.frame_table)) {
    throw GeometryError(ErrorCode::FrameMismatch, "pushforward does not match the frame table");
  }
  rep.intertwine_ok = intertwining_identities_hold();
  return rep;
}

enum class FlowBranch { PhiZero, Converged };

inline const char* to_string(FlowBranch b) { return b == FlowBranch::PhiZero ? "phi_zero" : "converged"; }

struct FlowOptions {
  double step = 1e-3;
  /// Convergence when |V0| <= converge_tol |V0(start)|.
  double converge_tol = 1e-6;
  /// Bisection width for the Phi = 0 crossing time.
  double event_tol = 1e-10;
  /// Stored samples are thinned by 2 whenever this many accumulate.
  std::size_t max_stored = 20000;
  DecayTolerances decay;
};

struct FlowResult {
  FlowBranch branch = FlowBranch::Converged;
  /// Crossing time for the Phi = 0 branch, NaN otherwise.
  double D = std::numeric_limits<double>::quiet_NaN();
  /// Width of the final bisection bracket.
  double D_bracket = 0.0;
  double end_time = 0.0;
  std::vector<double> times;
  std::vector<Triple> states;
  /// max |f(x(t)) - f(x(0))| / scale(x(0))^2 over the run.
  double casimir_drift = 0.0;
  /// Decay of |V0| (converged branch).
  DecayFit fit;
};

/// V0 directional derivative of V0: d/dt V0(x) along x' = w.
inline Vec9 v0_derivative(const Triple& x, const Triple& w) {
  return Triple(bracket(w[1], x[2]) + bracket(x[1], w[2]), bracket(w[2], x[0]) + bracket(x[2], w[0]),
                bracket(w[0], x[1]) + bracket(x[0], w[1]))
      .to_vector();
}

/// Integrates x' = direction V0(x) from start, stopping at a sign change of Phi
/// (located by bisection on the last step) or at convergence of |V0|.
inline FlowResult v0_flow(const Triple& start, int direction, double max_time, const FlowOptions& opt = {}) {
  if (direction != 1 && direction != -1) throw GeometryError(ErrorCode::InvalidArgument, "direction must be +1 or -1");
  if (!(opt.step > 0.0) || !(max_time > 0.0)) throw GeometryError(ErrorCode::InvalidArgument, "step and max_time must be positive");
  const double p0 = phi(start);
  if (std::abs(p0) < phi_tolerance(start) || p0 == 0.0) {
    throw GeometryError(ErrorCode::DegenerateConfiguration, "flow must start where Phi != 0");
  }
  const double dir = static_cast<double>(direction);
  auto field = [dir](const Vec9& y) -> Vec9 { return dir * frame_unchecked(Triple::from_vector(y))[0]; };
  const CasimirVector f0 = casimirs(start);
  const double s2 = start.scale() * start.scale();
  const double v_start = frame_unchecked(start)[0].norm();

  FlowResult res;
  std::vector<double> lam_u, lam;
  std::size_t stride = 1;
  auto record = [&](std::size_t idx, double t, const Vec9& x) {
    if (idx % stride != 0) return;
    const Triple tx = Triple::from_vector(x);
    res.times.push_back(t);
    res.states.push_back(tx);
    const Vec9 v = frame_unchecked(tx)[0];
    const double v2 = v.squaredNorm();
    if (v2 > 0.0) {
      lam_u.push_back(t);
      lam.push_back(-v.dot(v0_derivative(tx, Triple::from_vector(dir * v))) / v2);
    }
    if (res.times.size() >= opt.max_stored) {
      auto thin = [](auto& vec) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < vec.size(); i += 2) vec[k++] = vec[i];
        vec.resize(k);
      };
      thin(res.times);
      thin(res.states);
      thin(lam_u);
      thin(lam);
      stride *= 2;
    }
  };

  Vec9 x = start.to_vector();
  double t = 0.0;
  std::size_t idx = 0;
  record(idx, t, x);
  const double h = opt.step;
  for (;;) {
    if (t >= max_time) throw GeometryError(ErrorCode::Inconclusive, "neither a Phi zero nor convergence before max_time");
    const Vec9 next = rk4_step(field, x, h);
    const double pn = phi(Triple::from_vector(next));
    if (pn == 0.0 || (pn > 0.0) != (p0 > 0.0)) {
      double lo = 0.0, hi = h;
      while (hi - lo > opt.event_tol) {
        const double mid = 0.5 * (lo + hi);
        const double pm = phi(Triple::from_vector(rk4_step(field, x, mid)));
        if (pm != 0.0 && (pm > 0.0) == (p0 > 0.0)) lo = mid;
        else hi = mid;
      }
      res.branch = FlowBranch::PhiZero;
      res.D = t + 0.5 * (lo + hi);
      res.D_bracket = hi - lo;
      x = rk4_step(field, x, 0.5 * (lo + hi));
      t = res.D;
      res.times.push_back(t);
      res.states.push_back(Triple::from_vector(x));
      break;
    }
    x = next;
    t += h;
    ++idx;
    const Triple tx = Triple::from_vector(x);
    const CasimirVector f = casimirs(tx);
    for (int c = 0; c < 5; ++c) res.casimir_drift = std::max(res.casimir_drift, std::abs(f[c] - f0[c]) / s2);
    record(idx, t, x);
    if (frame_unchecked(tx)[0].norm() <= opt.converge_tol * v_start) {
      res.branch = FlowBranch::Converged;
      if (idx % stride != 0) {
        res.times.push_back(t);
        res.states.push_back(tx);
      }
      break;
    }
  }
  res.end_time = t;
  if (res.branch == FlowBranch::Converged) {
    std::vector<double> u, l;
    for (std::size_t i = 0; i < lam_u.size(); ++i) {
      if (lam_u[i] >= 2.0 * t / 3.0) {
        u.push_back(lam_u[i]);
        l.push_back(lam[i]);
      }
    }
    res.fit = fit_decay(u, l, opt.decay);
  }
  return res;
}

}  // namespace hyperlie
