// Acceptance checks: one PASS/FAIL line per criterion.
// Usage: hopfrom_acceptance [criterion ...]   (all when none given)

#include <hopfrom/continuation.hpp>
#include <hopfrom/dpim.hpp>
#include <hopfrom/fem.hpp>
#include <hopfrom/models.hpp>
#include <hopfrom/romdyn.hpp>
#include <hopfrom/spectral.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace hopfrom;

namespace {

namespace tol {
constexpr double c1Event = 1e-6, c1Omega = 1e-8, c1Runtime = 1.0;
constexpr double c2Pc = 2.2461, c2Pd = 18.2539, c2Oracle = 1e-4, c2Interval = 16.0, c2IntervalTol = 0.5, c2Runtime = 1.0;
constexpr double c3Drift = 1e-8, c3Runtime = 5.0;
constexpr double c4Biorth = 1e-8, c4PostCond = 1e3, c4RawCond = 1e8, c4Runtime = 1.0;
constexpr double c5SlopeMargin = 0.2, c5WindowLow = 1e-4, c5WindowHigh = 1e-2, c5Symmetry = 1e-10, c5Dual = 1e-8, c5Runtime = 120.0;
constexpr double c6Hopf = 0.01, c6Runtime = 120.0;
constexpr double c7Amplitude = 0.02, c7Near = 0.5, c7Far = 0.8, c7Runtime = 300.0;
constexpr double c8Threshold = 0.05, c8UnitLow = 0.3, c8UnitHigh = 0.7, c8TunedLow = 3.0, c8TunedHigh = 5.0, c8RatioFactor = 1.5,
                 c8Runtime = 600.0;
constexpr double c9Orders = 0.01, c9Threshold = 0.05, c9Runtime = 600.0;
constexpr double c10Omega = 0.68, c10OmegaTol = 0.05, c10Amplitude = 0.10, c10Offset = 0.5, c10Fold = 0.018, c10FoldTol = 0.30,
                 c10Runtime = 1800.0;
constexpr double c11Amplitude = 1e-6, c11Multiplier = 1e-6, c11Runtime = 10.0;
}  // namespace tol

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

using Checks = std::vector<Check>;

std::string g(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Check within(const std::string& name, double value, double target, double tolerance) {
  const double err = std::abs(value - target);
  return {name, err <= tolerance, g(value, 10) + " vs " + g(target, 10) + " (|err| " + g(err, 3) + " <= " + g(tolerance, 3) + ")"};
}

Check below(const std::string& name, double value, double bound) {
  return {name, value < bound, g(value, 4) + " < " + g(bound, 4)};
}

Check inRange(const std::string& name, double value, double lo, double hi) {
  return {name, value >= lo && value <= hi, g(value, 5) + " in [" + g(lo) + ", " + g(hi) + "]"};
}

Check truth(const std::string& name, bool ok, const std::string& detail) { return {name, ok, detail}; }

ParametrisationROM firstOrderRom(const SecondOrderModel& model, double Pe, int modes, int order, bool jordan = false) {
  const FirstOrderDAE dae = recast_to_dae(at_load(model, Pe));
  const LinearPencil pen = make_pencil(dae);
  Spectrum spec = solve_master_eigen(pen, modes);
  if (jordan) spec = enforce_jordan(spec, pen, master_jordan_pairs(spec));
  return build_rom_firstorder(dae, spec, {order});
}

std::vector<std::pair<double, double>> branch(const BifurcationDiagram& d, int coordinate) {
  return detail::monotoneBranch(d, coordinate);
}

double amplitudeAt(const BifurcationDiagram& d, int coordinate, double P) {
  const auto b = branch(d, coordinate);
  if (b.size() < 2 || P < b.front().first || P > b.back().first) throw std::runtime_error("branch does not cover " + g(P));
  return detail::interpolate(b, P);
}

BifurcationDiagram romBranch(const ParametrisationROM& rom, double top, double dsMax = 0.05) {
  ContinuationOptions co;
  co.muMax = top - rom.mu0;
  co.dsMax = dsMax;
  return continue_periodic(rom, co);
}

std::vector<double> offsetsGrid(double PH, double step, double last) {
  std::vector<double> loads;
  for (int k = 1; k * step <= last + 1e-12; ++k) loads.push_back(PH + k * step);
  return loads;
}

/// Validity P_v - P_H; a branch valid over the whole compared range reports that range.
double validityAbove(const BifurcationDiagram& rom, const BifurcationDiagram& fom, int coordinate, double PH, double threshold) {
  const ComparisonReport rep = diagram_compare(rom, fom, {coordinate, threshold});
  if (std::isinf(rep.validity)) return rep.rows.back().parameter - PH;
  return rep.validity - PH;
}

/// Flutter boundaries of a 2-DOF model from the discriminant of det(Kt(P) - w^2 M), quadratic in P.
std::pair<double, double> discriminantRoots(const SecondOrderModel& model) {
  auto disc = [&](double P) {
    const MatR A = at_load(model, P).Kt();
    const MatR& M = model.M;
    const double b = A(0, 0) * M(1, 1) + A(1, 1) * M(0, 0) - A(0, 1) * M(1, 0) - A(1, 0) * M(0, 1);
    return b * b - 4 * M.determinant() * A.determinant();
  };
  const double d0 = disc(0), d1 = disc(1), d2 = disc(2);
  const double qa = 0.5 * (d2 - 2 * d1 + d0), qb = d1 - d0 - qa, qc = d0;
  const double s = std::sqrt(qb * qb - 4 * qa * qc);
  const double r1 = (-qb - s) / (2 * qa), r2 = (-qb + s) / (2 * qa);
  return {std::min(r1, r2), std::max(r1, r2)};
}

// ---------------------------------------------------------------------------

Checks criterion1() {
  const auto model = build_ziegler2(ZieglerParams::unit2());
  const auto t = analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61);
  Checks c;
  if (!t.Pc || !t.PH || !t.Pd || !t.omegaC) return {truth("events found", false, "P_c, P_H, P_d or omega_c missing")};
  c.push_back(within("P_c", *t.Pc, 2.0, tol::c1Event));
  c.push_back(within("P_H", *t.PH, 2.0, tol::c1Event));
  c.push_back(within("P_d", *t.Pd, 4.0, tol::c1Event));
  c.push_back(within("omega_c", *t.omegaC, 1.0, tol::c1Omega));
  // the pencil reproduces 1 - (6 - 2P) w^2 + w^4
  double worst = 0;
  for (double P : {0.5, 1.5, 3.0, 5.0}) {
    for (cplx l : pencil_eigenvalues(make_pencil(at_load(model, P)))) {
      const cplx w2 = -l * l;
      worst = std::max(worst, std::abs(1.0 - (6 - 2 * P) * w2 + w2 * w2));
    }
  }
  c.push_back(below("quartic oracle residual", worst, 1e-9));
  return c;
}

Checks criterion2() {
  const auto model = build_ziegler2(ZieglerParams::tuned2());
  const auto t = analyse_stability(pencil_factory(model, true), 0.0, 20.0, 101);
  if (!t.Pc || !t.PH || !t.Pd) return {truth("events found", false, "P_c, P_H or P_d missing")};
  const auto [oc, od] = discriminantRoots(model);
  return {within("P_c vs oracle", *t.Pc, oc, tol::c2Oracle),
          within("P_d vs oracle", *t.Pd, od, tol::c2Oracle),
          within("oracle P_c", oc, tol::c2Pc, tol::c2Oracle),
          within("oracle P_d", od, tol::c2Pd, tol::c2Oracle),
          within("P_d - P_H", *t.Pd - *t.PH, tol::c2Interval, tol::c2IntervalTol)};
}

Checks criterion3() {
  const auto t0 = analyse_stability(pencil_factory(build_ziegler2(ZieglerParams::unit2()), true), 0.0, 6.0, 61);
  const auto t2 = analyse_stability(pencil_factory(build_ziegler2(ZieglerParams::unit2(0.2)), true), 0.0, 6.0, 61);
  if (!t0.Pc || !t2.Pc || !t2.PH) return {truth("events found", false, "P_c or P_H missing")};
  return {within("P_c drift", *t2.Pc, *t0.Pc, tol::c3Drift),
          truth("P_H > P_c", *t2.PH > *t2.Pc, "P_H " + g(*t2.PH, 10) + " > P_c " + g(*t2.Pc, 10))};
}

Checks criterion4() {
  Checks c;
  auto check = [&](const std::string& label, const Spectrum& raw, const LinearPencil& pen, int i, int j, const std::vector<JordanPair>& pairs) {
    MatC rawPair(raw.Y.rows(), 2), postPair(raw.Y.rows(), 2);
    rawPair << raw.Y.col(i), raw.Y.col(j);
    const Spectrum out = enforce_jordan(raw, pen, pairs);
    postPair << out.Y.col(i), out.Y.col(j);
    const auto [eB, eA] = biorthogonality_error(out, pen);
    const double rc = column_condition(rawPair), pc = column_condition(postPair);
    c.push_back(below(label + " X*BY - I", eB, tol::c4Biorth));
    c.push_back(below(label + " X*AY - Lambda", eA, tol::c4Biorth));
    c.push_back({label + " cond", pc < tol::c4PostCond, "raw " + g(rc, 3) + (rc > tol::c4RawCond ? " (> 1e8)" : "") + ", enforced " + g(pc, 3) + " < 1e3"});
  };
  for (double eps : {1e-4, 1e-9, 0.0}) {
    LinearPencil pen;
    pen.B = MatR::Identity(2, 2);
    pen.At.resize(2, 2);
    pen.At << 0, 1, -(1 - eps * eps), -2;
    pen.A0 = VecR::Zero(2);
    const EigenSystem sys = pencil_eigensystem(pen);
    Spectrum s;
    s.d = 2;
    s.lambda = sys.values;
    s.Lambda = MatC::Zero(2, 2);
    s.Y = sys.right;
    s.X = sys.left;
    for (int k = 0; k < 2; ++k) {
      s.Lambda(k, k) = s.lambda[static_cast<std::size_t>(k)];
      s.Y.col(k).normalize();
      s.X.col(k) /= std::conj(s.X.col(k).dot(pen.B * s.Y.col(k)));
    }
    check("companion eps=" + g(eps, 2), s, pen, 0, 1, {{0, 1, 1.0}});
  }
  const auto model = build_ziegler2(ZieglerParams::unit2(0.2));
  const auto t = analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61);
  if (!t.Pc) return {truth("EP found", false, "no exceptional point")};
  const LinearPencil pen = make_pencil(recast_to_dae(at_load(model, *t.Pc)));
  const Spectrum raw = solve_master_eigen(pen, 2);
  check("Ziegler EP", raw, pen, 0, 2, master_jordan_pairs(raw));
  return c;
}

Checks criterion5() {
  Checks c;
  const auto model = build_ziegler2(ZieglerParams::unit2(0.2));
  const FirstOrderDAE dae = recast_to_dae(at_load(model, 2.1));
  const Spectrum spec = solve_master_eigen(make_pencil(dae), 2);
  for (int o : {3, 5, 9}) {
    const ParametrisationROM rom = build_rom_firstorder(dae, spec, {o});
    const double slope = residual_slope(rom, dae, tol::c5WindowLow, tol::c5WindowHigh);
    c.push_back({"slope o=" + std::to_string(o), slope >= o + 1 - tol::c5SlopeMargin, g(slope, 4) + " >= " + g(o + 1 - tol::c5SlopeMargin, 3)});
    c.push_back(below("conjugate symmetry o=" + std::to_string(o), rom.conjugateAsymmetry(), tol::c5Symmetry));
  }
  const auto frozen = at_load(freeze_parametric_cubic(build_ziegler2(ZieglerParams::tuned2(0.01)), 1.8), 1.8);
  const FirstOrderDAE fdae = recast_to_dae(frozen);
  const auto r1 = build_rom_firstorder(fdae, solve_master_eigen(make_pencil(fdae), 2), {5});
  const auto r2 = build_rom_secondorder(frozen, solve_master_eigen(make_pencil(frozen), 2), {5});
  double worst = 0, scale = 0;
  const int n = frozen.nDof;
  for (int id = 0; id < r1.table.size(); ++id) {
    const auto k = static_cast<std::size_t>(id);
    worst = std::max(worst, (r1.W[k].head(2 * n) - r2.W[k]).cwiseAbs().maxCoeff());
    scale = std::max(scale, r1.W[k].head(2 * n).cwiseAbs().maxCoeff());
  }
  c.push_back(below("dual-engine W", worst / std::max(1.0, scale), tol::c5Dual));
  return c;
}

Checks criterion6() {
  Checks c;
  const std::vector<std::pair<std::string, ZieglerParams>> cases{
      {"xi_m=0.01", ZieglerParams::tuned2(0.01)}, {"xi_m=0.2", ZieglerParams::tuned2(0.2)}, {"xi_k=0.1", ZieglerParams::tuned2(0.0, 0.1)}};
  for (const auto& [label, z] : cases) {
    const auto model = build_ziegler2(z);
    const auto t = analyse_stability(pencil_factory(model, true), 0.0, 20.0, 101);
    if (!t.PH) {
      c.push_back(truth(label + " P_H", false, "no Hopf point in the sweep"));
      continue;
    }
    const auto rom = firstOrderRom(model, 0.95 * *t.PH, 2, 9);
    double predicted = std::numeric_limits<double>::quiet_NaN();
    try {
      predicted = rom.mu0 + find_hopf(rom);
    } catch (const std::exception&) {
    }
    c.push_back({label + " two-mode P_H", std::abs(predicted - *t.PH) <= tol::c6Hopf * *t.PH,
                 g(predicted, 8) + " vs " + g(*t.PH, 8) + " (rel " + g(std::abs(predicted - *t.PH) / *t.PH, 3) + " <= 0.01)"});
    if (t.Pc) {
      const auto one = firstOrderRom(model, 0.95 * *t.Pc, 1, 9);
      bool found = true;
      try {
        find_hopf(one);
      } catch (const std::runtime_error&) {
        found = false;
      }
      c.push_back(truth(label + " one-mode at 0.95 P_c finds no Hopf", !found, found ? "a Hopf point was reported" : "none found, as expected"));
    }
  }
  return c;
}

Checks criterion7() {
  const auto model = build_ziegler2(ZieglerParams::unit2(0.2));
  const auto t = analyse_stability(pencil_factory(model, true), 0.0, 6.0, 61);
  if (!t.PH) return {truth("P_H", false, "no Hopf point")};
  const double PH = *t.PH;
  const auto rom = firstOrderRom(model, 1.05 * PH, 2, 9);
  const auto d = romBranch(rom, PH + tol::c7Far + 0.1);
  auto err = [&](double off) {
    const double r = amplitudeAt(d, 1, PH + off);
    const double f = integrate_fom(model, PH + off).amplitude(1);
    return std::pair{std::abs(r - f) / f, r};
  };
  const auto [eNear, aNear] = err(tol::c7Near);
  const auto [eFar, aFar] = err(tol::c7Far);
  return {{"theta2 at +0.5", eNear <= tol::c7Amplitude, "ROM " + g(aNear, 8) + ", rel err " + g(eNear, 3) + " <= 0.02"},
          {"degradation", eFar > eNear, "rel err at +0.8 " + g(eFar, 3) + " > " + g(eNear, 3) + " (ROM " + g(aFar, 8) + ")"}};
}

Checks criterion8() {
  struct Case {
    std::string label;
    ZieglerParams z;
    double pMax, step, last, lo, hi;
  };
  const std::vector<Case> cases{{"tuned", ZieglerParams::tuned2(0.2), 20.0, 0.25, 10.0, tol::c8TunedLow, tol::c8TunedHigh},
                                {"unit", ZieglerParams::unit2(0.2), 6.0, 0.05, 1.5, tol::c8UnitLow, tol::c8UnitHigh}};
  Checks c;
  std::vector<double> ratios;
  for (const auto& k : cases) {
    const auto model = build_ziegler2(k.z);
    const auto t = analyse_stability(pencil_factory(model, true), 0.0, k.pMax, 101);
    if (!t.PH || !t.Pd) return {truth(k.label + " events", false, "P_H or P_d missing")};
    const double PH = *t.PH;
    const auto rom = firstOrderRom(model, PH, 2, 9);
    const auto d = romBranch(rom, PH + k.last, 0.1);
    const auto fom = fom_diagram(model, offsetsGrid(PH, k.step, k.last));
    const double v = validityAbove(d, fom, 1, PH, tol::c8Threshold);
    c.push_back(inRange(k.label + " P_v - P_H", v, k.lo, k.hi));
    ratios.push_back(v / (*t.Pd - PH));
  }
  const double factor = std::max(ratios[0], ratios[1]) / std::min(ratios[0], ratios[1]);
  c.push_back({"ratio agreement", factor <= tol::c8RatioFactor,
               "(P_v-P_H)/(P_d-P_H) tuned " + g(ratios[0], 4) + ", unit " + g(ratios[1], 4) + ", factor " + g(factor, 4) + " <= 1.5"});
  return c;
}

Checks criterion9() {
  Checks c;
  const std::vector<std::pair<std::string, ZieglerParams>> cases{
      {"xi_m=0.01", ZieglerParams::tuned3(0.01)}, {"xi_m=0.2", ZieglerParams::tuned3(0.2)}, {"xi_k=0.1", ZieglerParams::tuned3(0.0, 0.1)}};
  const int theta3 = 2;
  const double last = 4.0;
  for (const auto& [label, z] : cases) {
    const auto model = build_ziegler3(z);
    const auto t = analyse_stability(pencil_factory(model, true), 0.0, 20.0, 101);
    if (!t.PH) {
      c.push_back(truth(label + " P_H", false, "no Hopf point"));
      continue;
    }
    const double PH = *t.PH;
    const auto fom = fom_diagram(model, offsetsGrid(PH, 0.25, last));
    const auto d7 = romBranch(firstOrderRom(model, PH, 2, 7), PH + last + 0.5, 0.1);
    const auto d9 = romBranch(firstOrderRom(model, PH, 2, 9), PH + last + 0.5, 0.1);
    const double v7 = validityAbove(d7, fom, theta3, PH, tol::c9Threshold);
    const double v9 = validityAbove(d9, fom, theta3, PH, tol::c9Threshold);
    // orders compared on the range where both match the reference
    const double top = PH + std::min(v7, v9);
    const auto b7 = branch(d7, theta3), b9 = branch(d9, theta3);
    double worst = 0;
    for (int k = 1; k <= 200; ++k) {
      const double P = PH + (top - PH) * k / 200;
      const double a7 = detail::interpolate(b7, P), a9 = detail::interpolate(b9, P);
      worst = std::max(worst, std::abs(a7 - a9) / std::abs(a9));
    }
    c.push_back({label + " o7 vs o9", worst <= tol::c9Orders,
                 "max rel diff " + g(worst, 3) + " <= 0.01 on P - P_H in [0, " + g(top - PH, 4) + "]"});
    double v1 = 0.0;
    std::string why;
    try {
      const auto one = firstOrderRom(model, PH, 1, 9);
      find_hopf(one);
      v1 = std::max(0.0, validityAbove(romBranch(one, PH + last + 0.5, 0.1), fom, theta3, PH, tol::c9Threshold));
    } catch (const std::exception& e) {
      why = " (one-mode: " + std::string(e.what()) + ")";
    }
    c.push_back({label + " two-mode beats one-mode", v9 > v1, "validity " + g(v9, 4) + " > " + g(v1, 4) + why});
  }
  return c;
}

Checks criterion10() {
  Checks c;
  // mass-proportional damping: frequency at the Hopf point and amplitude against the full model
  BeckParams p;
  p.xiMass = 0.01;
  auto b = assemble_beck(p);
  c.push_back(truth("mesh", b.mesh->nodes.size() == 153,
                    std::to_string(b.mesh->nodes.size()) + " nodes, " + std::to_string(b.mesh->triangles.size()) + " quadratic triangles"));
  const HopfLocation h = damp_at_hopf(b, p, 0.0, 12.0);
  c.push_back({"omega at Hopf", std::abs(h.omega - tol::c10Omega) <= tol::c10OmegaTol * tol::c10Omega,
               g(h.omega, 5) + " vs 0.68 (rel " + g(std::abs(h.omega - tol::c10Omega) / tol::c10Omega, 3) + " <= 0.05), p_H " + g(h.P, 7)});
  {
    const SecondOrderModel m = at_load(b.model, 1.1 * h.P);
    const auto rom = build_rom_secondorder(m, solve_master_eigen(make_pencil(m), 2), {9});
    const int dof = b.mesh->tipVerticalDof();
    const double P = h.P + tol::c10Offset;
    ContinuationOptions co;
    co.settle.settleCoordinates = {dof};
    const auto [x0, T] = periodic_orbit_at(rom, P - rom.mu0, co);
    const auto [amp, radius] = detail::orbitAmplitude(rom, P - rom.mu0, x0, T, 256, co.integration);
    const SecondOrderModel mP = at_load(b.model, P);
    const VecR w = RealizedReducedSystem(rom, P - rom.mu0).physical(x0);
    const int n = m.nDof;
    VecR y0(2 * n);
    y0.head(n) = w.head(n) + m.U0 - mP.U0;
    y0.tail(n) = w.tail(n);
    FomOptions fo;
    fo.method = FomMethod::Newmark;
    fo.initialState = y0;
    fo.cycle.samplesPerPeriod = 100;
    fo.phaseCoordinate = dof;
    fo.cycle.settleCoordinates = {dof};
    const auto fom = integrate_fom(b.model, P, fo);
    // the ROM amplitude is measured about the equilibrium at the expansion load
    const double romAmp = amp(dof) , fomAmp = fom.amplitude(dof);
    const double rel = std::abs(romAmp - fomAmp) / fomAmp;
    c.push_back({"tip amplitude at +0.5", fom.converged && rel <= tol::c10Amplitude,
                 "ROM " + g(romAmp, 6) + ", FOM " + g(fomAmp, 6) + (fom.converged ? "" : " (not settled)") + ", rel err " + g(rel, 3) + " <= 0.1"});
  }
  // stiffness-proportional damping: fold of the bifurcated branch
  BeckParams q;
  q.xiStiff = 0.1;
  auto bk = assemble_beck(q);
  const HopfLocation hk = damp_at_hopf(bk, q, 0.0, 12.0);
  const SecondOrderModel mk = at_load(bk.model, 1.1 * hk.P);
  const auto romk = build_rom_secondorder(mk, solve_master_eigen(make_pencil(mk), 2), {9});
  ContinuationOptions ck;
  ck.muMax = hk.P + 0.2 - romk.mu0;
  ck.dsMax = 0.01;
  ck.maxPoints = 200;
  const auto dk = continue_periodic(romk, ck);
  double fold = std::numeric_limits<double>::quiet_NaN();
  for (const auto& pt : dk.points)
    if (pt.event == BranchEvent::Fold) {
      fold = pt.parameter - hk.P;
      break;
    }
  c.push_back({"fold (xi_k=0.1)", std::abs(fold - tol::c10Fold) <= tol::c10FoldTol * tol::c10Fold,
               "p - p_H = " + g(fold, 4) + " vs 0.018 +- 30%, p_H " + g(hk.P, 7)});
  return c;
}

Checks criterion11() {
  const auto rom = hopf_normal_form_rom();
  ContinuationOptions opt;
  opt.muMax = 0.2;
  const auto d = continue_periodic(rom, opt);
  double amp = 0, mult = 0;
  for (std::size_t k = 1; k < d.points.size(); ++k) {
    amp = std::max(amp, std::abs(d.points[k].amplitude(0) - std::sqrt(d.points[k].mu)));
    mult = std::max(mult, d.points[k].trivialMultiplierError);
  }
  return {truth("branch points", d.points.size() > 10, std::to_string(d.points.size()) + " points"),
          below("amplitude vs sqrt(mu)", amp, tol::c11Amplitude), below("trivial multiplier", mult, tol::c11Multiplier)};
}

struct Criterion {
  int id;
  const char* title;
  double budget;
  std::function<Checks()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "unit 2-DOF undamped events", tol::c1Runtime, criterion1},
      {2, "tuned 2-DOF undamped events", tol::c2Runtime, criterion2},
      {3, "mass damping keeps P_c, moves P_H", tol::c3Runtime, criterion3},
      {4, "Jordan enforcement", tol::c4Runtime, criterion4},
      {5, "DPIM residual, symmetry, dual engines", tol::c5Runtime, criterion5},
      {6, "Hopf prediction from below", tol::c6Runtime, criterion6},
      {7, "unit 2-DOF limit-cycle amplitude", tol::c7Runtime, criterion7},
      {8, "validity-range ratios", tol::c8Runtime, criterion8},
      {9, "3-DOF order convergence and two-mode gain", tol::c9Runtime, criterion9},
      {10, "Beck column", tol::c10Runtime, criterion10},
      {11, "continuation oracle", tol::c11Runtime, criterion11},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool allPass = true;
  for (const auto& cr : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), cr.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Checks checks;
    try {
      checks = cr.run();
    } catch (const std::exception& e) {
      checks.push_back({"completed", false, std::string("exception: ") + e.what()});
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    checks.push_back({"runtime", elapsed < cr.budget, g(elapsed, 3) + " s < " + g(cr.budget, 4) + " s"});
    bool pass = true;
    std::ostringstream os;
    for (const auto& ch : checks) {
      pass = pass && ch.pass;
      os << (os.tellp() > 0 ? "; " : "") << (ch.pass ? "" : "[FAIL] ") << ch.name << ": " << ch.detail;
    }
    allPass = allPass && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << cr.id << " (" << cr.title << "): " << os.str() << std::endl;
  }
  return allPass ? 0 : 1;
}
