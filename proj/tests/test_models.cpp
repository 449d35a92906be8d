#include <hopfrom/models.hpp>
#include <hopfrom/spectral.hpp>

#include <gtest/gtest.h>

#include <boost/numeric/odeint.hpp>

#include <random>

using namespace hopfrom;

TEST(Ziegler2, UnitMatrices) {
  auto m = build_ziegler2(ZieglerParams::unit2());
  MatR M(2, 2), K(2, 2), Kg(2, 2);
  M << 2, 1, 1, 1;
  K << 2, -1, -1, 1;
  Kg << -1, 1, 0, 0;
  EXPECT_EQ((m.M - M).norm(), 0.0);
  EXPECT_EQ((m.K - K).norm(), 0.0);
  // follower stiffness at P = 1: P Kg theta = -P Ru theta
  EXPECT_EQ((-m.Ru - Kg).norm(), 0.0);
  EXPECT_EQ(m.C.norm(), 0.0);
}

TEST(Ziegler2, CubicForceAndDamping) {
  ZieglerParams z = ZieglerParams::unit2(0.3, 0.1);
  z.L = 1.7;
  auto m = build_ziegler2(z);
  EXPECT_LT((m.C - 2.0 * (0.1 * m.K + 0.3 * m.M)).norm(), 1e-14);
  VecR th(2);
  th << 0.3, -0.2;
  const double P = 2.5;
  // residual minus the linear part leaves P (L/6) (theta1 - theta2)^3 on row 0
  VecR r = m.staticResidual(th, P) - (m.K - P * m.Ru) * th;
  EXPECT_NEAR(r(0), P * z.L / 6.0 * std::pow(0.5, 3), 1e-14);
  EXPECT_NEAR(r(1), 0.0, 1e-15);
}

TEST(Ziegler2, RejectsNonPhysicalParameters) {
  EXPECT_THROW(build_ziegler2({{1.0, -1.0}, {1.0, 1.0}, 1.0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(build_ziegler2({{1.0, 1.0}, {1.0, 1.0}, 0.0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(build_ziegler2({{1.0, 1.0}, {1.0, 1.0}, 1.0, -0.1, 0}), std::invalid_argument);
}

TEST(Ziegler3, UnitMatrices) {
  auto m = build_ziegler3(ZieglerParams::unit3());
  MatR M(3, 3);
  M << 3, 2, 1, 2, 2, 1, 1, 1, 1;
  EXPECT_EQ((m.M - M).norm(), 0.0);
  EXPECT_EQ(m.K(1, 0), -1.0);
  EXPECT_EQ(m.K(1, 1), 2.0);
  EXPECT_EQ(m.K(1, 2), -1.0);
  VecR same = VecR::Constant(3, 0.37);
  VecR r = m.staticResidual(same, 3.0) - (m.K - 3.0 * m.Ru) * same;
  EXPECT_EQ(r.norm(), 0.0);
}

TEST(Ziegler3, RandomParameterSpotChecks) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 5; ++trial) {
    ZieglerParams z{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, u(rng), 0, 0};
    auto m = build_ziegler3(z);
    const double L = z.L, m1 = z.m[0], m2 = z.m[1], m3 = z.m[2], k1 = z.k[0], k2 = z.k[1], k3 = z.k[2];
    EXPECT_NEAR(m.M(0, 0), (m1 + m2 + m3) * L * L, 1e-13);
    EXPECT_NEAR(m.M(0, 1), (m2 + m3) * L * L, 1e-13);
    EXPECT_NEAR(m.M(1, 2), m3 * L * L, 1e-13);
    EXPECT_NEAR(m.K(0, 0), k1 + k2, 1e-14);
    EXPECT_NEAR(m.K(1, 1), k2 + k3, 1e-14);
    EXPECT_NEAR(m.K(2, 1), -k3, 1e-14);
    // follower stiffness: P L [[-1,0,1],[0,-1,1],[0,0,0]]
    EXPECT_NEAR(-m.Ru(0, 0), -L, 1e-14);
    EXPECT_NEAR(-m.Ru(0, 2), L, 1e-14);
    EXPECT_NEAR(-m.Ru(1, 1), -L, 1e-14);
    EXPECT_NEAR(-m.Ru(1, 2), L, 1e-14);
    EXPECT_EQ(m.Ru.row(2).norm(), 0.0);
    EXPECT_LT((m.M - m.M.transpose()).norm(), 1e-14);
    EXPECT_LT((m.K - m.K.transpose()).norm(), 1e-14);
    VecR th(3);
    th << 0.2, -0.1, 0.05;
    const double P = u(rng);
    VecR r = m.staticResidual(th, P) - (m.K - P * m.Ru) * th;
    EXPECT_NEAR(r(0), P * L / 6 * std::pow(0.15, 3), 1e-14);
    EXPECT_NEAR(r(1), P * L / 6 * std::pow(-0.15, 3), 1e-14);
    EXPECT_NEAR(r(2), 0.0, 1e-15);
  }
}

TEST(Models, TangentQuadraticMatchesDefinition) {
  SparseTrilinearForm<double> H(3);
  SparseBilinearForm<double> G(3);
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  // symmetric H built from a symmetric seed
  for (int p = 0; p < 3; ++p)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) H.add(p, i, j, k, (p + 1) * (i + j + k + 1) * 0.1);
  for (int k = 0; k < 6; ++k) G.add(k % 3, (k + 1) % 3, (2 * k) % 3, g(rng));
  SecondOrderModel m;
  m.nDof = 3;
  m.nonlinear = std::make_shared<SparseNonlinearForce>(G, H);
  m.U0 = VecR::NullaryExpr(3, [&] { return g(rng); });
  VecR a = VecR::NullaryExpr(3, [&] { return g(rng); });
  VecR b = VecR::NullaryExpr(3, [&] { return g(rng); });
  VecR expected = apply_bilinear(G, a, b) + 3.0 * apply_trilinear(H, m.U0, a, b);
  EXPECT_LT((m.Gt(a, b) - expected).norm(), 1e-12 * expected.norm());
}

TEST(Models, ZieglerEquilibriumIsUpright) {
  auto m = at_load(build_ziegler2(ZieglerParams::tuned2()), 5.0);
  EXPECT_EQ(m.U0.norm(), 0.0);
  EXPECT_EQ(static_equilibrium(m, 5.0).norm(), 0.0);
}

TEST(Recast, DimensionsAndStructure) {
  auto m = at_load(build_ziegler2(ZieglerParams::unit2()), 1.5);
  auto dae = recast_to_dae(m);
  EXPECT_EQ(dae.D, 6);
  // algebraic rows
  EXPECT_EQ(dae.B.row(4).norm(), 0.0);
  EXPECT_EQ(dae.B.row(5).norm(), 0.0);
  EXPECT_EQ(dae.mu0, 1.5);
  EXPECT_EQ(dae.residual(dae.y0, dae.mu0).norm(), 0.0);
  EXPECT_EQ(Eigen::FullPivLU<MatR>(dae.A).rank(), 6);
  auto m3 = at_load(build_ziegler3(ZieglerParams::unit3()), 1.0);
  EXPECT_EQ(recast_to_dae(m3).D, 10);
}

TEST(Recast, ZeroCubicHasNoAuxiliaries) {
  auto m = build_ziegler2(ZieglerParams::unit2());
  m.cubicTerms.clear();
  m.paramCubic = SparseTrilinearForm<double>(2);
  auto dae = recast_to_dae(m);
  EXPECT_EQ(dae.D, 4);
  EXPECT_TRUE(dae.Q1.empty());
}

TEST(Recast, RejectsParameterOnlyLoad) {
  auto m = build_ziegler2(ZieglerParams::unit2());
  m.R0 = VecR::Ones(2);
  EXPECT_THROW(recast_to_dae(m), std::invalid_argument);
}

namespace {

using State = std::vector<double>;

// Direct second-order right-hand side of the Ziegler equations.
struct DirectOde {
  const SecondOrderModel* m;
  double P;
  Eigen::PartialPivLU<MatR> lu;
  void operator()(const State& x, State& dx, double) const {
    const int n = m->nDof;
    VecR U = Eigen::Map<const VecR>(x.data(), n), V = Eigen::Map<const VecR>(x.data() + n, n);
    VecR acc = lu.solve(VecR(-m->C * V - m->staticResidual(U, P)));
    for (int i = 0; i < n; ++i) {
      dx[static_cast<std::size_t>(i)] = V(i);
      dx[static_cast<std::size_t>(n + i)] = acc(i);
    }
  }
};

// Recast DAE with the algebraic states eliminated by Newton on the algebraic rows.
struct DaeOde {
  const FirstOrderDAE* dae;
  double P;
  void operator()(const State& x, State& dx, double) const {
    const int D = dae->D, nd = 2 * dae->nDisplacement, na = D - nd;
    VecR y = VecR::Zero(D);
    for (int i = 0; i < nd; ++i) y(i) = x[static_cast<std::size_t>(i)];
    for (int it = 0; it < 20; ++it) {
      VecR r = dae->residual(y, P).tail(na);
      if (r.norm() < 1e-15) break;
      MatR J = dae->jacobian(y, P).bottomRightCorner(na, na);
      y.tail(na) -= J.partialPivLu().solve(r);
    }
    VecR rhs = dae->residual(y, P).head(nd);
    VecR dy = dae->B.topLeftCorner(nd, nd).partialPivLu().solve(rhs);
    for (int i = 0; i < nd; ++i) dx[static_cast<std::size_t>(i)] = dy(i);
  }
};

}  // namespace

TEST(Recast, TrajectoryMatchesDirectIntegration) {
  using namespace boost::numeric::odeint;
  auto model = build_ziegler2(ZieglerParams::unit2(0.2));
  auto traj = analyse_stability(pencil_factory(model, false), 0.0, 3.0, 31);
  ASSERT_TRUE(traj.PH.has_value());
  for (double dP : {0.1, 0.5}) {
    const double P = *traj.PH + dP;
    auto m = at_load(model, P);
    auto dae = recast_to_dae(m);
    DirectOde direct{&m, P, m.M.partialPivLu()};
    DaeOde viaDae{&dae, P};
    State a{0.01, -0.005, 0.0, 0.0}, b = a;
    double err = 0;
    for (int k = 1; k <= 50; ++k) {
      integrate_adaptive(make_controlled(1e-13, 1e-13, runge_kutta_dopri5<State>()), direct, a, k - 1.0, double(k), 0.01);
      integrate_adaptive(make_controlled(1e-13, 1e-13, runge_kutta_dopri5<State>()), viaDae, b, k - 1.0, double(k), 0.01);
      for (std::size_t i = 0; i < 4; ++i) err = std::max(err, std::abs(a[i] - b[i]));
    }
    EXPECT_LT(err, 1e-8) << dP;
  }
}
