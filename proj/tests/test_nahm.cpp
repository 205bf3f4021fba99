#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "hyperlie/nahm.hpp"
#include "hyperlie/sampling.hpp"
#include "oracles.hpp"

using namespace hyperlie;

namespace {

std::vector<double> sample_times(double T, int n) {
  std::vector<double> t;
  for (int i = 0; i <= n; ++i) t.push_back(-T * i / n);
  return t;
}

double sup_error(const Trajectory& tr, const ExactSolution& ex) {
  double m = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    m = std::max(m, (tr.states[i].to_vector() - ex(tr.t[i]).to_vector()).cwiseAbs().maxCoeff());
  }
  return m;
}

template <class F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const GeometryError& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(NahmRhs, Values) {
  const NahmState fixed(Vec3::Zero(), 2.0 * basis(0), Vec3::Zero());
  EXPECT_EQ(nahm_rhs(fixed).to_vector(), Vec9::Zero());
  const NahmState b(basis(0), basis(1), basis(2));
  EXPECT_TRUE(nahm_rhs(b).to_vector().isApprox((-b).to_vector()));
}

TEST(NahmRhs, IsMinusV0OfPermutedTriple) {
  Rng rng = make_rng(71);
  for (int n = 0; n < 50; ++n) {
    const NahmState s(random_vec3(rng), random_vec3(rng), random_vec3(rng));
    const Vec9 v0 = oracle::frame_field(0, Triple(s[1], s[2], s[0]).to_vector());
    const NahmState d = nahm_rhs(s);
    const Vec9 permuted = Triple(d[1], d[2], d[0]).to_vector();
    EXPECT_LT((permuted + v0).norm(), 1e-13);
  }
}

TEST(NahmRhs, SecondDerivativeMatchesFiniteDifference) {
  Rng rng = make_rng(72);
  const NahmState s(random_vec3(rng), random_vec3(rng), random_vec3(rng));
  const double h = 1e-5;
  const Vec9 d = nahm_rhs(s).to_vector();
  const Vec9 fd = (nahm_rhs(Triple::from_vector(s.to_vector() + h * d)).to_vector() -
                   nahm_rhs(Triple::from_vector(s.to_vector() - h * d)).to_vector()) / (2 * h);
  EXPECT_LT((fd - nahm_second(s).to_vector()).norm(), 1e-7);
}

TEST(Exact, OraclesSatisfyOdeBySubstitution) {
  const auto times = sample_times(20.0, 400);
  EXPECT_LE(exact_solution(ExactKind::Regular, 1.0, 1.0).residual(times), 1e-12);
  EXPECT_LE(exact_solution(ExactKind::Regular, 2.0, 0.5).residual(times), 1e-12);
  EXPECT_LE(exact_solution(ExactKind::Nilpotent, 0.0, 1.0).residual(times), 1e-12);
  Rng rng = make_rng(73);
  EXPECT_LE(exact_solution(ExactKind::Regular, 1.0, 1.0, random_rotation(rng)).residual(times), 1e-12);
}

TEST(Exact, DerivativeMatchesFiniteDifference) {
  const ExactSolution ex = exact_solution(ExactKind::Regular, 1.3, 0.7);
  for (double t : {0.0, -0.5, -3.0}) {
    const double h = 1e-5;
    const Vec9 fd = (ex(t + h).to_vector() - ex(t - h).to_vector()) / (2 * h);
    EXPECT_LT((fd - ex.derivative(t).to_vector()).norm(), 1e-8);
  }
}

TEST(Exact, Values) {
  const ExactSolution nil = exact_solution(ExactKind::Nilpotent, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(nil.f(0.0)[0], -1.0);
  EXPECT_NEAR(nil.f(-9.0)[1], -0.1, 1e-15);
  const ExactSolution reg = exact_solution(ExactKind::Regular, 1.0, 1.0);
  EXPECT_NEAR(reg.f(0.0)[1], -1.313035285499331, 1e-12);
  EXPECT_NEAR(reg.f(-30.0)[1], -1.0, 1e-12);
  for (double t : {0.0, -1.0, -5.0}) {
    const auto f = reg.f(t);
    EXPECT_NEAR(f[1] * f[1] - f[0] * f[0], 1.0, 1e-10);
  }
  EXPECT_EQ(code_of([] { exact_solution(ExactKind::Nilpotent, 0.0, 0.0); }), ErrorCode::PoleInDomain);
}

TEST(Integrate, MatchesRegularOracle) {
  const ExactSolution ex = exact_solution(ExactKind::Regular, 1.0, 1.0);
  const Trajectory tr = integrate(ex(0.0), 20.0, 1e-3);
  EXPECT_LE(sup_error(tr, ex), 1e-8);
  EXPECT_EQ(tr.fit.kind, DecayKind::Exponential);
  // csch decays like e^{ct}, so the state approaches its limit at rate c.
  EXPECT_NEAR(tr.decay_rate, 1.0, 1e-3);
  EXPECT_LT((tr.limit.to_vector() - ex.limit().to_vector()).norm(), 1e-8);
  double drift = 0.0, cons = 0.0;
  const CasimirVector c0 = casimirs(Triple(tr.states[0][1], tr.states[0][2], tr.states[0][0]));
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const NahmState& s = tr.states[i];
    const CasimirVector c = casimirs(Triple(s[1], s[2], s[0]));
    for (int k = 0; k < 5; ++k) drift = std::max(drift, std::abs(c[k] - c0[k]));
    cons = std::max(cons, std::abs(s[1].squaredNorm() - s[0].squaredNorm() - 1.0));
  }
  EXPECT_LE(drift, 1e-10);
  EXPECT_LE(cons, 1e-10);
}

TEST(Integrate, FourthOrder) {
  const ExactSolution ex = exact_solution(ExactKind::Regular, 1.0, 1.0);
  const double e1 = sup_error(integrate(ex(0.0), 20.0, 0.04), ex);
  const double e2 = sup_error(integrate(ex(0.0), 20.0, 0.02), ex);
  const double e3 = sup_error(integrate(ex(0.0), 20.0, 0.01), ex);
  EXPECT_NEAR(e1 / e2, 16.0, 1.5);
  EXPECT_NEAR(e2 / e3, 16.0, 1.5);
}

TEST(Integrate, NilpotentPolynomialDecay) {
  const ExactSolution ex = exact_solution(ExactKind::Nilpotent, 0.0, 1.0);
  const Trajectory tr = integrate(ex(0.0), 150.0, 1e-2);
  EXPECT_LE(sup_error(tr, ex), 1e-8);
  EXPECT_EQ(tr.fit.kind, DecayKind::Polynomial);
  EXPECT_NEAR(tr.fit.exponent, 2.0, 1e-3);
  EXPECT_LT(tr.limit.to_vector().norm(), 1e-4);
}

TEST(Integrate, FixedPointStays) {
  const NahmState s(Vec3::Zero(), basis(0), Vec3::Zero());
  const Trajectory tr = integrate(s, 1.0, 1e-2);
  EXPECT_EQ(tr.fit.kind, DecayKind::Stationary);
  EXPECT_EQ(tr.states.back().to_vector(), s.to_vector());
}

TEST(Integrate, Errors) {
  const NahmState s(basis(0), basis(1), basis(2));
  EXPECT_EQ(code_of([&] { integrate(s, 0.01, 1e-2); }), ErrorCode::InvalidArgument);
  // Phi > 0 data is forward V0-flow with growing norms: backward Nahm blows up.
  EXPECT_EQ(code_of([&] { integrate(2.0 * s, 5.0, 1e-3); }), ErrorCode::BlowUp);
}

TEST(Integrate, RotationEquivariance) {
  Rng rng = make_rng(74);
  const ExactSolution ex = exact_solution(ExactKind::Regular, 1.0, 1.0);
  const Mat3 o = random_rotation(rng);
  const Trajectory a = integrate(ex(0.0), 10.0, 1e-3);
  const Trajectory b = integrate(sigma_map(o, ex(0.0)), 10.0, 1e-3);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, (sigma_map(o, a.states[i]).to_vector() - b.states[i].to_vector()).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(m, 1e-8);
}

TEST(Integrate, HMapIsInverseCyclicPermutation) {
  const NahmState s(basis(0), 2 * basis(1), -basis(2));
  const Trajectory tr = integrate(exact_solution(ExactKind::Nilpotent, 0.0, 1.0)(0.0), 1.0, 1e-2);
  const Triple img = h_map(tr);
  EXPECT_EQ(img[0], tr.states[0][1]);
  EXPECT_EQ(img[1], tr.states[0][2]);
  EXPECT_EQ(img[2], tr.states[0][0]);
  (void)s;
}

TEST(TangentFrame, SatisfiesLinearizedSystem) {
  const Trajectory tr = integrate(exact_solution(ExactKind::Regular, 1.0, 1.0)(0.0), 10.0, 1e-3);
  const auto tg = tangent_frame_nahm(tr);
  for (const auto& b : tg) EXPECT_LE(linearized_residual(tr, b), 1e-6);
  const NahmState& s = tr.states[5];
  EXPECT_NEAR(tg[0].b[5][1].norm(), bracket(s[1], s[2]).norm(), 1e-15);
}

TEST(TangentFrame, LinearizedResidualDetectsWrongPath) {
  const Trajectory tr = integrate(exact_solution(ExactKind::Regular, 1.0, 1.0)(0.0), 4.0, 1e-3);
  auto tg = tangent_frame_nahm(tr);
  for (auto& b : tg[1].b) b[0] *= 1.5;
  EXPECT_GT(linearized_residual(tr, tg[1]), 1e-3);
}

TEST(ModuliMetric, NilpotentAnalytic) {
  const ExactSolution ex = exact_solution(ExactKind::Nilpotent, 0.0, 1.0);
  const Trajectory tr = integrate(ex(0.0), 150.0, 1e-2);
  const auto tg = tangent_frame_nahm(tr);
  const MetricValue m = moduli_metric(tr, tg[0], tg[0]);
  EXPECT_NEAR(m.value, oracle::nilpotent_metric(1.0), 1e-6);
  EXPECT_NEAR(moduli_metric(tr, tg[0], tg[1]).value, 0.0, 1e-6);
  EXPECT_NEAR(moduli_metric(tr, tg[0], tg[1]).value, moduli_metric(tr, tg[1], tg[0]).value, 1e-15);
}

TEST(ModuliMetric, TailCorrectionAndBilinearity) {
  const ExactSolution ex = exact_solution(ExactKind::Regular, 1.0, 1.0);
  const Trajectory tr = integrate(ex(0.0), 8.0, 1e-3);
  const auto tg = tangent_frame_nahm(tr);
  const MetricValue m = moduli_metric(tr, tg[2], tg[2]);
  EXPECT_GT(m.tail, 0.0);
  EXPECT_NEAR(m.value, oracle::regular_metric(1.0, 1.0), 1e-8);
  ModuliTangent sum = tg[1];
  for (std::size_t i = 0; i < sum.b.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) sum.b[i][j] = 2.0 * tg[1].b[i][j] + tg[3].b[i][j];
  const double lhs = moduli_metric(tr, sum, tg[1]).value;
  const double rhs = 2.0 * moduli_metric(tr, tg[1], tg[1]).value + moduli_metric(tr, tg[3], tg[1]).value;
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(ModuliMetric, StationaryTailUnbounded) {
  const NahmState s(Vec3::Zero(), basis(0), Vec3::Zero());
  const Trajectory tr = integrate(s, 1.0, 1e-2);
  ModuliTangent c;
  c.b.assign(tr.size(), {basis(1), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  EXPECT_EQ(code_of([&] { moduli_metric(tr, c, c); }), ErrorCode::TailUnbounded);
}

TEST(Isometry, Nilpotent) {
  const Trajectory tr = integrate(exact_solution(ExactKind::Nilpotent, 0.0, 1.0)(0.0), 150.0, 1e-2);
  const Triple img = h_map(tr);
  EXPECT_NEAR(phi(img), -1.0, 1e-15);
  const CasimirVector f = casimirs(img);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(f[k], 0.0, 1e-15);
  const IsometryReport rep = isometry_check(tr);
  for (double e : rep.diag_errors) EXPECT_LE(e, 1e-6);
  EXPECT_LE(rep.offdiag_max, 1e-6);
  EXPECT_LE(rep.frame_table_error, 1e-10);
  EXPECT_TRUE(rep.intertwine_ok);
}

TEST(Isometry, RegularBothPoles) {
  for (double t0 : {1.0, 2.0}) {
    const Trajectory tr = integrate(exact_solution(ExactKind::Regular, 1.0, t0)(0.0), 40.0, 1e-3);
    const IsometryReport rep = isometry_check(tr);
    EXPECT_NEAR(rep.expected, oracle::regular_metric(1.0, t0), 1e-12);
    for (double e : rep.diag_errors) EXPECT_LE(e, 1e-4);
    EXPECT_LE(rep.offdiag_max, 1e-6);
    EXPECT_LE(rep.tail_fraction, 1e-6);
    const Triple img = h_map(tr);
    const CasimirVector f = casimirs(img);
    EXPECT_NEAR(f[3], 1.0, 1e-12);
    EXPECT_NEAR(f[4], 0.0, 1e-12);
  }
}

TEST(Isometry, RotatedRegularData) {
  Rng rng = make_rng(75);
  const Mat3 o = random_rotation(rng);
  // Off-axis roundoff grows like e^{c|t|} backward, so keep T moderate.
  const Trajectory tr = integrate(exact_solution(ExactKind::Regular, 1.0, 1.0, o)(0.0), 12.0, 1e-3);
  const IsometryReport rep = isometry_check(tr);
  for (double e : rep.diag_errors) EXPECT_LE(e, 1e-4);
  EXPECT_TRUE(rep.intertwine_ok);
}

TEST(Isometry, IntegerIdentities) {
  EXPECT_TRUE(intertwining_identities_hold());
  const Mat3 o = intertwining_rotation();
  EXPECT_TRUE((o.transpose() * o).isApprox(Mat3::Identity()));
  EXPECT_DOUBLE_EQ(o.determinant(), 1.0);
}

TEST(Pr12, OrbitQuadricOfImages) {
  // Sum z_i^2 with z = a1 + i a2 equals f4 + 2i f1.
  for (const ExactSolution& ex :
       {exact_solution(ExactKind::Regular, 1.0, 1.0), exact_solution(ExactKind::Nilpotent, 0.0, 1.0)}) {
    const Triple img = h_map(integrate(ex(0.0), 1.0, 1e-2));
    const std::complex<double> q = (img[0].cast<std::complex<double>>() +
                                    std::complex<double>(0, 1) * img[1].cast<std::complex<double>>())
                                       .array()
                                       .square()
                                       .sum();
    const double expected = ex.kind == ExactKind::Regular ? 1.0 : 0.0;
    EXPECT_NEAR(q.real(), expected, 1e-12);
    EXPECT_NEAR(q.imag(), 0.0, 1e-12);
  }
}

TEST(Flow, TypeTwoHitsPhiZero) {
  const Triple t = leaf_point({0.0, 1.0}, {1.0, Mat3::Identity()});
  const FlowResult r = v0_flow(t, 1, 10.0);
  EXPECT_EQ(r.branch, FlowBranch::PhiZero);
  // w = sqrt(Z) obeys w' = -(w^2 + r), so D = atan(w0 / sqrt r) / sqrt r.
  EXPECT_NEAR(r.D, std::atan(1.0), 1e-9);
  EXPECT_LE(r.D_bracket, 1e-10);
  EXPECT_LE(r.casimir_drift, 1e-10);
}

TEST(Flow, TypeOneConvergesExponentially) {
  const Triple t = leaf_point({1.0, 0.0}, {1.0, Mat3::Identity()});
  const FlowResult r = v0_flow(t, 1, 100.0);
  EXPECT_EQ(r.branch, FlowBranch::Converged);
  EXPECT_TRUE(std::isnan(r.D));
  EXPECT_EQ(r.fit.kind, DecayKind::Exponential);
  EXPECT_NEAR(r.fit.rate, 1.0, 1e-2);
  EXPECT_LE(r.casimir_drift, 1e-10);
}

TEST(Flow, TypeZeroConvergesPolynomially) {
  const Triple t = leaf_point({0.0, 0.0}, {1.0, Mat3::Identity()});
  FlowOptions opt;
  opt.step = 1e-2;
  const FlowResult r = v0_flow(t, 1, 5000.0, opt);
  EXPECT_EQ(r.branch, FlowBranch::Converged);
  EXPECT_EQ(r.fit.kind, DecayKind::Polynomial);
  EXPECT_NEAR(r.fit.exponent, 2.0, 1e-2);
  EXPECT_LE(r.casimir_drift, 1e-10);
}

TEST(Flow, Inconclusive) {
  const Triple t = leaf_point({0.0, 0.0}, {1.0, Mat3::Identity()});
  EXPECT_EQ(code_of([&] { v0_flow(t, 1, 1.0); }), ErrorCode::Inconclusive);
  EXPECT_EQ(code_of([&] { v0_flow(Triple(basis(0), basis(1), Vec3::Zero()), 1, 1.0); }),
            ErrorCode::DegenerateConfiguration);
}
