#include <cmath>

#include <gtest/gtest.h>

#include "hyperlie/curvature.hpp"
#include "hyperlie/sampling.hpp"
#include "oracles.hpp"

using namespace hyperlie;

namespace {

struct Sample {
  LeafParams p;
  Triple t;
};

Sample random_sample(Rng& rng, int type) {
  LeafParams p{type >= 1 ? uniform(rng, 0.3, 3.0) : 0.0, type == 2 ? uniform(rng, 0.3, 3.0) : 0.0};
  if (type == 2 && uniform(rng, 0, 1) < 0.3) p.q = 0.0;
  return {p, leaf_point(p, {uniform(rng, 0.3, 2.0), random_rotation(rng)})};
}

double G(const Table3& t, int i, int j, int k) {
  return t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
}

}  // namespace

TEST(FrameBrackets, ClosedFormValue) {
  const Triple t(2 * basis(0), std::sqrt(2.0) * basis(1), -basis(2));
  const BracketTable b = frame_lie_brackets(t);
  EXPECT_NEAR(G(b.c, 0, 1, 1), -1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(G(b.c, 1, 0, 1), 1.0 / std::sqrt(2.0), 1e-14);
  // N_{0,0}, X = Y = Z = 4: [V1,V2] = -(X^2/Phi) V3 = sqrt(X) V3.
  const BracketTable b0 = frame_lie_brackets(leaf_point({0, 0}, {2.0, Mat3::Identity()}));
  EXPECT_NEAR(G(b0.c, 1, 2, 3), 2.0, 1e-13);
}

TEST(FrameBrackets, MatchFiniteDifferences) {
  Rng rng = make_rng(61);
  for (int n = 0; n < 20; ++n) {
    const Sample s = random_sample(rng, n % 3);
    const BracketTable b = frame_lie_brackets(s.t);
    const auto fd = oracle::fd_frame_brackets(s.t.to_vector(), 1e-5);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
          EXPECT_NEAR(G(b.c, i, j, k), fd[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](k), 1e-7);
  }
}

TEST(FrameBrackets, RequiresCanonicalLeaf) {
  EXPECT_THROW(frame_lie_brackets(Triple(basis(0), basis(0) + basis(1), -basis(2))), GeometryError);
}

TEST(Connection, UnitPoint) {
  const ConnectionTable c = connection_table(leaf_point({0, 0}, {1.0, Mat3::Identity()}));
  EXPECT_NEAR(G(c.gamma, 0, 0, 0), -1.5, 1e-14);
}

TEST(Connection, MatchesKoszul) {
  Rng rng = make_rng(62);
  for (int n = 0; n < 20; ++n) {
    const Sample s = random_sample(rng, n % 3);
    const ConnectionTable c = connection_table(s.t);
    const auto k = oracle::koszul_connection(s.t.to_vector(), 1e-5);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int m = 0; m < 4; ++m)
          EXPECT_NEAR(G(c.gamma, i, j, m), k[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](m), 1e-7);
  }
}

TEST(Connection, TorsionFreeAndCompatible) {
  Rng rng = make_rng(63);
  for (int n = 0; n < 20; ++n) {
    const Sample s = random_sample(rng, 2);
    const LeafScalars l = leaf_scalars(s.t);
    const ConnectionTable c = connection_table(l);
    const BracketTable b = frame_lie_brackets(l);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
          EXPECT_NEAR(G(c.gamma, i, j, k) - G(c.gamma, j, i, k), G(b.c, i, j, k), 1e-12);
          // V_i g(V_j,V_k) = g(nabla_i V_j, V_k) + g(V_j, nabla_i V_k)
          const double lhs = (j == k && i == 0) ? -l.v0_phi() : 0.0;
          const double rhs = -l.phi * (G(c.gamma, i, j, k) + G(c.gamma, i, k, j));
          EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(l.v0_phi())));
        }
  }
}

TEST(Connection, FrameDerivativeMatchesFiniteDifference) {
  Rng rng = make_rng(64);
  const Sample s = random_sample(rng, 2);
  const Vec9 x = s.t.to_vector();
  const Vec9 v0 = oracle::frame_field(0, x);
  auto scalars = [](const Vec9& y) {
    const Triple u = Triple::from_vector(y);
    return LeafScalars{inner(u[0], u[0]), inner(u[1], u[1]), inner(u[2], u[2]), phi(u)};
  };
  const double h = 1e-5;
  const LeafScalars lp = scalars(x + h * v0), lm = scalars(x - h * v0), l = scalars(x);
  for (FrameCoeff f : {FrameCoeff{1, 0, 0}, FrameCoeff{0.5, -0.5, 0.5}, FrameCoeff{0, 1, -1}}) {
    EXPECT_NEAR(f.v0(l), (f.eval(lp) - f.eval(lm)) / (2 * h), 1e-7);
  }
}

TEST(Riemann, FlatTypeZero) {
  for (double s : {0.1, 1.0, 3.0}) {
    const LeafScalars l = leaf_scalars({0, 0}, s);
    const RiemannTable r = riemann_analytic({0, 0}, l);
    EXPECT_EQ(r.max_abs(), 0.0);
    EXPECT_LT(riemann_from_connection(l).max_abs(), 1e-8 * riemann_scale(l));
  }
}

TEST(Riemann, TypeOneValue) {
  const RiemannTable r = riemann_table({1, 0}, 1.0);
  const LeafScalars l = leaf_scalars({1, 0}, 1.0);
  EXPECT_NEAR(r(1, 2, 2, 1) / (l.phi * l.phi), -1.0 / (2 * std::pow(2.0, 1.5)), 1e-12);
}

TEST(Riemann, FortyEightNonzero) {
  const LeafParams p{0.7, 1.3};
  const RiemannTable r = riemann_table(p, 0.8);
  EXPECT_EQ(r.nonzero_count(1e-12 * r.max_abs()), 48);
}

TEST(Riemann, SymmetriesAndBianchi) {
  Rng rng = make_rng(65);
  for (int n = 0; n < 30; ++n) {
    const Sample s = random_sample(rng, n % 3);
    const RiemannTable r = riemann_table(s.t);
    const RiemannTable d = riemann_from_connection(leaf_scalars(s.t));
    const double ref = std::max(r.max_abs(), riemann_scale(leaf_scalars(s.t)));
    EXPECT_LE(riemann_discrepancy(r, d), 1e-8 * ref);
    const ComplexStructures cs = complex_structures(s.t);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) {
            EXPECT_EQ(r(i, j, k, l), r(k, l, i, j));
            EXPECT_EQ(r(i, j, k, l), -r(j, i, k, l));
            EXPECT_LE(std::abs(r(i, j, k, l) + r(j, k, i, l) + r(k, i, j, l)), 1e-9 * ref);
            for (const IntMat4* c : {&cs.i, &cs.j, &cs.k}) {
              // R(C V_i, C V_j, V_k, V_l) with C V_i = sum_a C(a,i) V_a.
              double v = 0.0;
              for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) v += (*c)(a, i) * (*c)(b, j) * r(a, b, k, l);
              EXPECT_NEAR(v, r(i, j, k, l), 1e-12 * ref);
            }
          }
    EXPECT_EQ(r(1, 2, 2, 0), 0.0);
    EXPECT_EQ(r(1, 3, 3, 0), 0.0);
    EXPECT_EQ(r(2, 3, 3, 0), 0.0);
    EXPECT_NEAR(r(0, 1, 0, 1), -r(2, 3, 0, 1), 1e-12 * ref);
    EXPECT_NEAR(r(0, 1, 0, 1), r(2, 3, 2, 3), 1e-12 * ref);
  }
}

TEST(Sectional, TypeTwoClosedForm) {
  for (double s : {1.0, 0.1, 0.01}) {
    const double z = s * s;
    EXPECT_NEAR(kappa01({0, 1}, s) / (1.0 / (2 * std::pow(z, 1.5))), 1.0, 1e-12);
  }
  EXPECT_NEAR(kappa01({0, 1}, 1e-2) / 5e5, 1.0, 1e-10);
}

TEST(Sectional, TypeOneFramePlanesBelowInverseRootQ) {
  for (double q : {0.5, 1.0, 4.0})
    for (double s : {0.05, 0.5, 2.0}) {
      const LeafScalars l = leaf_scalars({q, 0}, s);
      const RiemannTable r = riemann_table({q, 0}, l);
      for (const auto& pl : kFramePlanes) {
        Vec4 u = Vec4::Zero(), w = Vec4::Zero();
        u(pl[0]) = 1;
        w(pl[1]) = 1;
        EXPECT_LT(std::abs(sectional_frame(r, l.phi, u, w)), 1.0 / std::sqrt(q));
      }
    }
}

TEST(Sectional, AmbientPlaneInvariance) {
  Rng rng = make_rng(66);
  const Sample s = random_sample(rng, 2);
  const TangentFrame f = frame(s.t);
  const Vec9 u = f[0] + 0.3 * f[2], w = f[1] - 0.7 * f[3];
  const double k = sectional(s.t, {u, w});
  EXPECT_NEAR(sectional(s.t, {2 * u + w, w}), k, 1e-12 * (1 + std::abs(k)));
  EXPECT_NEAR(sectional(s.t, {f[0], f[1]}), riemann_table(s.t)(0, 1, 1, 0) / (phi(s.t) * phi(s.t)), 1e-10);
  EXPECT_THROW(sectional(s.t, {u, 3 * u}), GeometryError);
}

TEST(Sectional, ScalesWithRho) {
  Rng rng = make_rng(67);
  const Sample s = random_sample(rng, 2);
  const TangentFrame f = frame(s.t);
  const Vec9 u = f[0] + 0.4 * f[3], w = f[2] + f[1];
  for (double tau : {0.25, 4.0}) {
    const Triple st = rho_scale(tau, s.t);
    const double k = sectional(st, {std::sqrt(tau) * u, std::sqrt(tau) * w});
    EXPECT_NEAR(k, sectional(s.t, {u, w}) / std::sqrt(tau), 1e-10);
  }
}

TEST(Scan, TypeZeroAllZero) {
  const CurvatureScan sc = curvature_scan({0, 0}, {0.5, 1.0, 2.0}, 20, 3);
  EXPECT_EQ(sc.rows.size(), 3u * 26u);
  EXPECT_EQ(sc.summary.min, 0.0);
  EXPECT_EQ(sc.summary.max, 0.0);
}

TEST(Scan, TypeOneBounded) {
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(std::pow(10.0, -2.0 + 0.15 * k));
  const CurvatureScan sc = curvature_scan({1, 0}, grid, 500, 5);
  EXPECT_TRUE(sc.summary.bound_respected);
  EXPECT_DOUBLE_EQ(sc.summary.bound, 12.0);
  EXPECT_LT(sc.summary.max, 12.0);
}

TEST(Scan, DeterministicAcrossThreadCounts) {
  const std::vector<double> grid{0.1, 0.3, 1.0, 3.0};
  setenv("HYPERLIE_THREADS", "1", 1);
  const CurvatureScan a = curvature_scan({0.5, 0.5}, grid, 50, 9);
  setenv("HYPERLIE_THREADS", "3", 1);
  const CurvatureScan b = curvature_scan({0.5, 0.5}, grid, 50, 9);
  unsetenv("HYPERLIE_THREADS");
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].kappa, b.rows[i].kappa);
}

TEST(Scan, TypeTwoGrowsAsSShrinks) {
  const CurvatureScan a = curvature_scan({0, 1}, {0.1}, 0);
  const CurvatureScan b = curvature_scan({0, 1}, {0.01}, 0);
  EXPECT_GT(b.summary.max, 100 * a.summary.max);
  EXPECT_FALSE(std::isfinite(a.summary.bound));
}
