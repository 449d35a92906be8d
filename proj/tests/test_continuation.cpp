#include <hopfrom/continuation.hpp>

#include <gtest/gtest.h>

#include <numbers>

using namespace hopfrom;

namespace {

ParametrisationROM ziegler2Rom(const SecondOrderModel& model, double Pe, int modes, int order, bool jordan = false) {
  auto dae = recast_to_dae(at_load(model, Pe));
  auto pen = make_pencil(dae);
  auto spec = solve_master_eigen(pen, modes);
  if (jordan) spec = enforce_jordan(spec, pen, master_jordan_pairs(spec));
  return build_rom_firstorder(dae, spec, {order});
}

}  // namespace

TEST(Continuation, NormalFormBranchIsSquareRoot) {
  auto rom = hopf_normal_form_rom();
  EXPECT_NEAR(find_hopf(rom), 0.0, 1e-10);
  ContinuationOptions opt;
  opt.muMax = 0.2;
  opt.startOffset = 0.04;
  auto d = continue_periodic(rom, opt);
  ASSERT_GT(d.points.size(), 10u);
  EXPECT_EQ(d.points.front().event, BranchEvent::Hopf);
  EXPECT_NEAR(d.points.front().period, 2 * std::numbers::pi, 1e-8);
  for (std::size_t k = 1; k < d.points.size(); ++k) {
    const auto& p = d.points[k];
    EXPECT_NEAR(p.amplitude(0), std::sqrt(p.mu), 1e-6) << p.mu;
    EXPECT_LT(p.trivialMultiplierError, 1e-6);
    EXPECT_NEAR(p.period, 2 * std::numbers::pi, 1e-8);
    EXPECT_TRUE(p.stable);
    const auto nontrivial = detail::nontrivialMultipliers(p.multipliers);
    ASSERT_EQ(nontrivial.size(), 1u);
    EXPECT_NEAR(nontrivial[0].real(), std::exp(-2 * p.mu * p.period), 1e-6);
  }
}

TEST(Continuation, SubcriticalNormalFormFoldIsLocated) {
  // z' = (mu + i) z + z|z|^2 - z|z|^4: fold of cycles at mu = -1/4, radius^2 = 1/2
  ParametrisationROM rom = hopf_normal_form_rom(1.0, 1.0);
  rom.order = 5;
  MonomialTable t(3, 5);
  std::vector<VecC> f(static_cast<std::size_t>(t.size()), VecC::Zero(3));
  std::vector<VecC> W(static_cast<std::size_t>(t.size()), VecC::Zero(2));
  for (int id = 0; id < rom.table.size(); ++id) {
    const int nid = t.find(rom.table.exponents(id));
    f[static_cast<std::size_t>(nid)] = rom.f[static_cast<std::size_t>(id)];
    W[static_cast<std::size_t>(nid)] = rom.W[static_cast<std::size_t>(id)];
  }
  f[static_cast<std::size_t>(t.find({3, 2, 0}))](0) = -1.0;
  f[static_cast<std::size_t>(t.find({2, 3, 0}))](1) = -1.0;
  rom.table = t;
  rom.f = f;
  rom.W = W;
  ContinuationOptions opt;
  opt.hopf.halfWidth = 0.1;
  // start on the stable outer branch and follow it towards smaller mu
  opt.startOffset = 0.05;
  opt.muMin = -0.4;
  opt.muMax = 0.3;
  opt.settle.perturbation = 1.0;
  opt.direction = -1;
  auto d = continue_periodic(rom, opt);
  int folds = 0;
  for (const auto& p : d.points)
    if (p.event == BranchEvent::Fold) {
      ++folds;
      EXPECT_NEAR(p.mu, -0.25, 1e-5);
      EXPECT_NEAR(p.amplitude(0), std::sqrt(0.5), 1e-3);
    }
  EXPECT_EQ(folds, 1);
}

TEST(Continuation, HopfAtExpansionPointIsZero) {
  auto model = build_ziegler2(ZieglerParams::tuned2(0.2));
  const double PH = *analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61).PH;
  auto rom = ziegler2Rom(model, PH, 2, 5);
  EXPECT_NEAR(find_hopf(rom), 0.0, 1e-8);
}

TEST(Continuation, TwoModeRomFindsHopfFromBelow) {
  for (auto z : {ZieglerParams::tuned2(0.01), ZieglerParams::tuned2(0.2), ZieglerParams::tuned2(0.0, 0.1)}) {
    auto model = build_ziegler2(z);
    const double PH = *analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61).PH;
    auto rom = ziegler2Rom(model, 0.95 * PH, 2, 9);
    EXPECT_NEAR(rom.mu0 + find_hopf(rom), PH, 0.01 * PH);
  }
}

TEST(Continuation, OneModeRomBeforeCoalescenceFindsNoHopf) {
  auto model = build_ziegler2(ZieglerParams::tuned2(0.01));
  const auto traj = analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61);
  ASSERT_TRUE(traj.Pc.has_value());
  auto rom = ziegler2Rom(model, 0.95 * *traj.Pc, 1, 9);
  EXPECT_THROW(find_hopf(rom), std::runtime_error);
}

TEST(Continuation, ZieglerBranchInvariants) {
  auto model = build_ziegler2(ZieglerParams::unit2(0.2));
  const double PH = *analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61).PH;
  auto rom = ziegler2Rom(model, PH, 2, 7);
  ContinuationOptions opt;
  opt.muMax = 0.3;
  auto d = continue_periodic(rom, opt);
  ASSERT_GT(d.points.size(), 12u);
  for (std::size_t k = 1; k < d.points.size(); ++k) {
    EXPECT_LT(d.points[k].trivialMultiplierError, 1e-6);
    EXPECT_TRUE(d.points[k].stable);
    if (k > 1) EXPECT_LT(std::abs(d.points[k].amplitude(1) - d.points[k - 1].amplitude(1)), 2 * opt.dsMax);
  }
  // amplitude^2 linear in (mu - mu_H) over the first ten accepted points
  const double muH = d.points.front().mu;
  std::vector<double> x, y;
  for (std::size_t k = 1; k <= 10; ++k) {
    x.push_back(d.points[k].mu - muH);
    y.push_back(d.points[k].amplitude(1) * d.points[k].amplitude(1));
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  EXPECT_GT(r * r, 0.99);
}

TEST(Continuation, FoldTestFunctionMatchesMultipliers) {
  MatR Phi(3, 3);
  Phi << 1.0, 0.2, 0.0, 0.0, 0.5, 0.1, 0.0, 0.0, 1.3;
  EXPECT_NEAR(detail::foldTestFunction(Phi), (1 - 0.5) * (1 - 1.3), 1e-14);
}

TEST(Continuation, IdenticalDiagramsHaveInfiniteValidity) {
  auto rom = hopf_normal_form_rom();
  ContinuationOptions opt;
  opt.muMax = 0.1;
  auto d = continue_periodic(rom, opt);
  auto rep = diagram_compare(d, d);
  EXPECT_EQ(rep.maxError, 0.0);
  EXPECT_TRUE(std::isinf(rep.validity));
}

TEST(Continuation, ValidityIsWhereErrorCrossesThreshold) {
  BifurcationDiagram a, b;
  for (int k = 0; k <= 10; ++k) {
    BranchPoint p;
    p.parameter = k;
    p.amplitude = VecR::Constant(1, 1.0 + k);
    b.points.push_back(p);
    p.amplitude = VecR::Constant(1, (1.0 + k) * (1.0 + 0.01 * k));
    a.points.push_back(p);
  }
  auto rep = diagram_compare(a, b);
  EXPECT_NEAR(rep.validity, 5.0, 1e-12);
  BifurcationDiagram c;
  for (int k = 20; k < 25; ++k) {
    BranchPoint p;
    p.parameter = k;
    p.amplitude = VecR::Constant(1, 1.0);
    c.points.push_back(p);
  }
  EXPECT_THROW(diagram_compare(a, c), std::invalid_argument);
}
