#pragma once
// Hopf detection, periodic-orbit continuation on reduced models, diagram comparison.

#include <hopfrom/romdyn.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace hopfrom {

/// Largest real part of the reduced linear part at z = 0 for increment mu.
inline double reduced_growth_rate(const ParametrisationROM& rom, double mu) {
  VecC zt = VecC::Zero(rom.d + 1);
  zt(rom.d) = mu;
  const MatC J = rom.reducedJacobian(zt);
  Eigen::ComplexEigenSolver<MatC> es(J, false);
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < J.rows(); ++i) m = std::max(m, es.eigenvalues()(i).real());
  return m;
}

struct HopfOptions {
  double halfWidth = -1.0;  // scanned window [-w, w] around the expansion; negative means 0.2 max(1, |mu0|)
  int scanPoints = 401;
  double tol = 1e-12;
};

/// Increment mu_H (relative to the expansion point) where the reduced growth
/// rate at the fixed point changes sign; the crossing nearest the expansion wins.
inline double find_hopf(const ParametrisationROM& rom, const HopfOptions& opt = {}) {
  const double w = opt.halfWidth > 0 ? opt.halfWidth : 0.2 * std::max(1.0, std::abs(rom.mu0));
  const int n = std::max(3, opt.scanPoints);
  std::optional<std::pair<double, double>> best;
  double prevMu = -w, prev = reduced_growth_rate(rom, -w);
  for (int k = 1; k < n; ++k) {
    const double mu = -w + 2 * w * k / (n - 1);
    const double g = reduced_growth_rate(rom, mu);
    if ((prev < 0) != (g < 0)) {
      const double dist = std::min(std::abs(prevMu), std::abs(mu));
      if (!best || dist < std::min(std::abs(best->first), std::abs(best->second))) best = {prevMu, mu};
    }
    prevMu = mu;
    prev = g;
  }
  if (!best) {
    throw std::runtime_error("find_hopf: no sign change of the reduced growth rate in [" + std::to_string(rom.mu0 - w) + ", " +
                             std::to_string(rom.mu0 + w) + "]");
  }
  auto [a, b] = *best;
  const bool aNeg = reduced_growth_rate(rom, a) < 0;
  while (b - a > opt.tol * std::max(1.0, std::abs(a))) {
    const double m = 0.5 * (a + b);
    if ((reduced_growth_rate(rom, m) < 0) == aNeg) a = m;
    else b = m;
  }
  return 0.5 * (a + b);
}

enum class BranchEvent { None, Hopf, Fold, NeimarkSacker };

inline const char* to_string(BranchEvent e) {
  switch (e) {
    case BranchEvent::Hopf: return "hopf";
    case BranchEvent::Fold: return "fold";
    case BranchEvent::NeimarkSacker: return "neimark-sacker";
    default: return "none";
  }
}

struct BranchPoint {
  double mu = 0.0;
  double parameter = 0.0;  // absolute
  VecR anchor;             // reduced state on the orbit
  double period = 0.0;
  VecR amplitude;          // max |coordinate| over the orbit
  std::vector<cplx> multipliers;
  double trivialMultiplierError = 0.0;
  bool stable = true;
  BranchEvent event = BranchEvent::None;
  double foldTest = 0.0;
  double nsTest = 0.0;
  double reducedRadius = 0.0;  // max |x| over the orbit
};

struct BifurcationDiagram {
  std::vector<BranchPoint> points;
  std::vector<std::string> labels;
  std::string model;
  int order = 0;
  int masterModes = 0;
  double expansion = 0.0;
  std::string source = "rom";
  std::string termination;
};

struct ContinuationOptions {
  double startOffset = -1.0;  // positive: start from a settled orbit at mu_H + startOffset
  double startRadius = 1e-3;  // otherwise: start on the Hopf eigenplane at this reduced radius
  double muMin = -std::numeric_limits<double>::infinity();
  double muMax = std::numeric_limits<double>::infinity();  // increments relative to the expansion
  double dsInit = 0.01, dsMin = 1e-5, dsMax = 0.1;
  int direction = 1;         // sign of the initial parameter step
  double minRadius = 1e-4;   // branch ends when the orbit shrinks onto the fixed point
  int targetNewton = 3;
  int maxNewton = 8;
  double newtonTol = 1e-9;
  int maxPoints = 400;
  double trustRadius = std::numeric_limits<double>::infinity();
  int amplitudeSamples = 256;
  bool locateEvents = true;
  double eventTol = 1e-7;  // relative arclength tolerance
  HopfOptions hopf;
  CycleOptions settle;
  IntegrationOptions integration{1e-10, 1e-12, 0.05, 1e3};
};

namespace detail {

/// x' = f(x), Phi' = J Phi, s' = J s + df/dmu, packed as [x, Phi (column major), s].
class VariationalSystem {
 public:
  explicit VariationalSystem(const RealizedReducedSystem& sys) : sys_(&sys), n_(sys.dim()) {}
  void operator()(const OdeState& y, OdeState& dy, double) const {
    const Eigen::Map<const VecR> x(y.data(), n_);
    const Eigen::Map<const MatR> Phi(y.data() + n_, n_, n_);
    const Eigen::Map<const VecR> s(y.data() + n_ + n_ * n_, n_);
    VecR f, fmu;
    MatR J;
    sys_->evaluate(x, &f, &J, &fmu);
    dy.resize(y.size());
    Eigen::Map<VecR>(dy.data(), n_) = f;
    Eigen::Map<MatR>(dy.data() + n_, n_, n_) = J * Phi;
    Eigen::Map<VecR>(dy.data() + n_ + n_ * n_, n_) = J * s + fmu;
  }

 private:
  const RealizedReducedSystem* sys_;
  int n_;
};

struct FlowResult {
  VecR xT;
  MatR Phi;
  VecR dmu;
  VecR fT;
};

inline FlowResult flowWithSensitivities(const ParametrisationROM& rom, double mu, const VecR& x0, double T,
                                        const IntegrationOptions& io) {
  namespace ode = boost::numeric::odeint;
  RealizedReducedSystem sys(rom, mu);
  VariationalSystem var(sys);
  const int n = sys.dim();
  OdeState y(static_cast<std::size_t>(n + n * n + n), 0.0);
  for (int i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = x0(i);
    y[static_cast<std::size_t>(n + i * n + i)] = 1.0;
  }
  auto stepper = ode::make_controlled(io.atol, io.rtol, ode::runge_kutta_dopri5<OdeState>());
  ode::integrate_adaptive(stepper, std::cref(var), y, 0.0, T, T / 100.0);
  FlowResult r;
  r.xT = Eigen::Map<const VecR>(y.data(), n);
  r.Phi = Eigen::Map<const MatR>(y.data() + n, n, n);
  r.dmu = Eigen::Map<const VecR>(y.data() + n + n * n, n);
  r.fT = sys.field(r.xT);
  if (!r.xT.allFinite() || !r.Phi.allFinite()) throw std::runtime_error("continuation: flow blew up");
  return r;
}

/// Sum of the principal (n-1)-minors of (I - Phi): the product of (1 - m) over
/// the multipliers other than the trivial one.
inline double foldTestFunction(const MatR& Phi) {
  const int n = static_cast<int>(Phi.rows());
  const MatR A = MatR::Identity(n, n) - Phi;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    MatR m(n - 1, n - 1);
    for (int r = 0, rr = 0; r < n; ++r) {
      if (r == i) continue;
      for (int c = 0, cc = 0; c < n; ++c) {
        if (c == i) continue;
        m(rr, cc++) = A(r, c);
      }
      ++rr;
    }
    s += n > 1 ? m.determinant() : 1.0;
  }
  return s;
}

/// Multipliers with the one nearest +1 removed.
inline std::vector<cplx> nontrivialMultipliers(const std::vector<cplx>& all) {
  std::vector<cplx> out = all;
  auto it = std::min_element(out.begin(), out.end(), [](cplx a, cplx b) { return std::abs(a - 1.0) < std::abs(b - 1.0); });
  if (it != out.end()) out.erase(it);
  return out;
}

/// Product of (m_i m_j - 1) over pairs of nontrivial multipliers.
inline double nsTestFunction(const std::vector<cplx>& nontrivial) {
  cplx p = 1.0;
  for (std::size_t i = 0; i < nontrivial.size(); ++i)
    for (std::size_t j = i + 1; j < nontrivial.size(); ++j) p *= nontrivial[i] * nontrivial[j] - 1.0;
  return p.real();
}

inline bool hasComplexPairOnCircle(const std::vector<cplx>& nontrivial, double tol) {
  for (cplx m : nontrivial)
    if (std::abs(m.imag()) > 1e-8 && std::abs(std::abs(m) - 1.0) < tol) return true;
  return false;
}

/// Amplitudes max |W_i| and the largest reduced radius over one period.
inline std::pair<VecR, double> orbitAmplitude(const ParametrisationROM& rom, double mu, const VecR& x0, double T, int samples,
                                              const IntegrationOptions& io) {
  RealizedReducedSystem sys(rom, mu);
  IntegrationOptions o = io;
  o.sampleDt = T / samples;
  o.escapeRadius = std::numeric_limits<double>::infinity();
  std::vector<VecR> q;
  double radius = 0.0;
  OdeState x(x0.data(), x0.data() + x0.size());
  integrateSampled(sys, x, 0.0, T, o, [&](double, const OdeState& s) {
    const VecR xs = Eigen::Map<const VecR>(s.data(), static_cast<Eigen::Index>(s.size()));
    radius = std::max(radius, xs.norm());
    q.push_back(sys.physical(xs));
    return true;
  });
  VecR amp = VecR::Zero(q.front().size());
  const std::size_t m = q.size() - 1;  // last sample repeats the first
  for (std::size_t k = 0; k < m; ++k) {
    const VecR& a = q[(k + m - 1) % m];
    const VecR& b = q[k];
    const VecR& c = q[(k + 1) % m];
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      amp(i) = std::max(amp(i), std::abs(b(i)));
      if (std::abs(b(i)) < std::abs(a(i)) || std::abs(b(i)) < std::abs(c(i))) continue;
      const double curv = a(i) - 2 * b(i) + c(i);
      if (curv != 0.0) amp(i) = std::max(amp(i), std::abs(b(i) - (c(i) - a(i)) * (c(i) - a(i)) / (8 * curv)));
    }
  }
  return {amp, radius};
}

/// Unknowns u = (x0, T / Tscale, mu); residual [phi_T(x0) - x0; (x0 - xref) . fref].
struct ShootingProblem {
  const ParametrisationROM* rom;
  IntegrationOptions io;
  double Tscale = 1.0;
  VecR xref, fref;

  int n() const { return rom->d; }

  void evaluate(const VecR& u, VecR& F, MatR& DF, FlowResult* keep = nullptr) const {
    const int nn = n();
    const VecR x0 = u.head(nn);
    const double T = u(nn) * Tscale, mu = u(nn + 1);
    if (!(T > 0)) throw std::runtime_error("continuation: non-positive period");
    FlowResult fr = flowWithSensitivities(*rom, mu, x0, T, io);
    F.resize(nn + 1);
    F.head(nn) = fr.xT - x0;
    F(nn) = (x0 - xref).dot(fref);
    DF = MatR::Zero(nn + 1, nn + 2);
    DF.topLeftCorner(nn, nn) = fr.Phi - MatR::Identity(nn, nn);
    DF.block(0, nn, nn, 1) = fr.fT * Tscale;
    DF.block(0, nn + 1, nn, 1) = fr.dmu;
    DF.block(nn, 0, 1, nn) = fref.transpose();
    if (keep) *keep = std::move(fr);
  }
};

inline VecR nullVector(const MatR& DF) {
  Eigen::ColPivHouseholderQR<MatR> qr(DF.transpose());
  const MatR Q = qr.householderQ();
  return Q.col(Q.cols() - 1);
}

}  // namespace detail

/// Periodic orbit (anchor, period) at fixed increment mu, settled by time
/// integration and refined by Newton on the shooting system.
inline std::pair<VecR, double> periodic_orbit_at(const ParametrisationROM& rom, double mu, const ContinuationOptions& opt) {
  RealizedReducedSystem sys(rom, mu);
  const double omega = std::abs(rom.spectrum.lambda.front().imag());
  const double Test = 2 * std::numbers::pi / omega;
  detail::CycleTracker tracker(opt.settle, 0.5 * Test);
  IntegrationOptions io = opt.integration;
  io.sampleDt = Test / opt.settle.samplesPerPeriod;
  OdeState x(static_cast<std::size_t>(sys.dim()), 0.0);
  x[0] = opt.settle.perturbation;
  VecR last;
  try {
    detail::integrateSampled(sys, x, 0.0, 2.0 * opt.settle.maxPeriods * Test, io, [&](double t, const OdeState& s) {
      last = Eigen::Map<const VecR>(s.data(), static_cast<Eigen::Index>(s.size()));
      return tracker.push(t, last(0), last);
    });
  } catch (const detail::Escape&) {
    throw std::runtime_error("continuation: the starting trajectory escaped");
  }
  LimitCycleMeasurement lc;
  tracker.finish(lc);
  if (lc.decayed || !(lc.period > 0)) throw std::runtime_error("continuation: no limit cycle at the starting increment");
  detail::ShootingProblem sp{&rom, opt.integration, lc.period, last, sys.field(last)};
  VecR u(sys.dim() + 2);
  u << last, 1.0, mu;
  VecR F;
  MatR DF;
  for (int it = 0; it < 20; ++it) {
    sp.evaluate(u, F, DF);
    const int nn = sys.dim();
    const VecR du = DF.leftCols(nn + 1).partialPivLu().solve(-F);
    u.head(nn + 1) += du;
    if (du.norm() < opt.newtonTol * (1 + u.norm())) return {u.head(nn), u(nn) * sp.Tscale};
  }
  throw std::runtime_error("continuation: Newton failed on the starting orbit");
}

/// Small orbit (anchor, period, mu) at reduced radius r next to the Hopf point muH,
/// from Newton on the shooting system with the anchor's component along the
/// critical eigenvector fixed to r.
inline VecR orbit_near_hopf(const ParametrisationROM& rom, double muH, double r, const ContinuationOptions& opt) {
  RealizedReducedSystem sys(rom, muH);
  const int n = sys.dim();
  Eigen::EigenSolver<MatR> es(sys.jacobian(VecR::Zero(n)));
  int crit = -1;
  for (int k = 0; k < n; ++k) {
    const cplx l = es.eigenvalues()(k);
    if (l.imag() <= 0) continue;
    if (crit < 0 || std::abs(l.real()) < std::abs(es.eigenvalues()(crit).real())) crit = k;
  }
  if (crit < 0) throw std::runtime_error("continuation: no oscillatory eigenvalue at the Hopf point");
  const double omega = es.eigenvalues()(crit).imag();
  VecR dir = es.eigenvectors().col(crit).real();
  dir.normalize();
  const VecR xg = r * dir;
  detail::ShootingProblem sp{&rom, opt.integration, 2 * std::numbers::pi / omega, xg, sys.field(xg)};
  VecR u(n + 2);
  u << xg, 1.0, muH;
  VecR F;
  MatR DF;
  for (int it = 0; it < 30; ++it) {
    sp.evaluate(u, F, DF);
    MatR G(n + 2, n + 2);
    G.topRows(n + 1) = DF;
    G.row(n + 1).setZero();
    G.row(n + 1).head(n) = dir.transpose();
    VecR rhs(n + 2);
    rhs.head(n + 1) = -F;
    rhs(n + 1) = r - dir.dot(u.head(n));
    const VecR du = G.partialPivLu().solve(rhs);
    if (!du.allFinite()) break;
    u += du;
    if (du.norm() < opt.newtonTol * (1 + u.norm())) {
      u(n) *= sp.Tscale;
      return u;
    }
  }
  throw std::runtime_error("continuation: Newton failed on the orbit next to the Hopf point");
}

/// Pseudo-arclength continuation of the periodic orbits born at the reduced Hopf point.
inline BifurcationDiagram continue_periodic(const ParametrisationROM& rom, const ContinuationOptions& opt = {}) {
  BifurcationDiagram diag;
  diag.labels = rom.stateLabels;
  diag.model = rom.modelName;
  diag.order = rom.order;
  diag.masterModes = rom.d / 2;
  diag.expansion = rom.mu0;
  const int n = rom.d;

  const double muH = find_hopf(rom, opt.hopf);
  {
    BranchPoint h;
    h.mu = muH;
    h.parameter = rom.mu0 + muH;
    h.anchor = VecR::Zero(n);
    VecC zt = VecC::Zero(n + 1);
    zt(n) = muH;
    Eigen::ComplexEigenSolver<MatC> es(rom.reducedJacobian(zt), false);
    double w = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()(i).real()) < 1e-6 * std::max(1.0, std::abs(es.eigenvalues()(i))))
        w = std::max(w, std::abs(es.eigenvalues()(i).imag()));
    h.period = w > 0 ? 2 * std::numbers::pi / w : 0.0;
    h.amplitude = VecR::Zero(rom.stateDim);
    h.event = BranchEvent::Hopf;
    diag.points.push_back(h);
  }

  VecR x0;
  double T0 = 0, muStart = 0;
  const bool fromHopf = !(opt.startOffset > 0);
  if (fromHopf) {
    const VecR s = orbit_near_hopf(rom, muH, opt.startRadius, opt);
    x0 = s.head(n);
    T0 = s(n);
    muStart = s(n + 1);
  } else {
    muStart = muH + opt.startOffset;
    std::tie(x0, T0) = periodic_orbit_at(rom, muStart, opt);
  }

  detail::ShootingProblem sp{&rom, opt.integration, T0, x0, RealizedReducedSystem(rom, muStart).field(x0)};
  VecR u(n + 2);
  u << x0, 1.0, muStart;

  auto makePoint = [&](const VecR& uu, const detail::FlowResult& fr) {
    BranchPoint p;
    p.mu = uu(n + 1);
    p.parameter = rom.mu0 + p.mu;
    p.anchor = uu.head(n);
    p.period = uu(n) * sp.Tscale;
    Eigen::EigenSolver<MatR> es(fr.Phi, false);
    for (Eigen::Index i = 0; i < n; ++i) p.multipliers.push_back(es.eigenvalues()(i));
    const auto nontrivial = detail::nontrivialMultipliers(p.multipliers);
    double best = std::numeric_limits<double>::infinity();
    for (cplx m : p.multipliers) best = std::min(best, std::abs(m - 1.0));
    p.trivialMultiplierError = best;
    p.stable = true;
    for (cplx m : nontrivial)
      if (std::abs(m) > 1.0 + 1e-6) p.stable = false;
    p.foldTest = detail::foldTestFunction(fr.Phi);
    p.nsTest = detail::nsTestFunction(nontrivial);
    auto [amp, radius] = detail::orbitAmplitude(rom, p.mu, p.anchor, p.period, opt.amplitudeSamples, opt.integration);
    p.amplitude = amp;
    p.reducedRadius = radius;
    return p;
  };

  VecR F;
  MatR DF;
  detail::FlowResult fr;
  sp.evaluate(u, F, DF, &fr);
  VecR tangent = detail::nullVector(DF);
  // from the Hopf point the branch leaves with growing amplitude
  if (fromHopf ? tangent.head(n).dot(x0) < 0 : tangent(n + 1) * opt.direction < 0) tangent = -tangent;
  diag.points.push_back(makePoint(u, fr));

  // Corrector from u0 along t0 at arclength ds; returns iterations or -1.
  auto correct = [&](const VecR& u0, const VecR& t0, double ds, VecR& out, detail::FlowResult& frOut) {
    detail::ShootingProblem local = sp;
    local.xref = u0.head(n);
    local.fref = RealizedReducedSystem(rom, u0(n + 1)).field(local.xref);
    VecR uu = u0 + ds * t0;
    for (int it = 1; it <= opt.maxNewton; ++it) {
      VecR Fl;
      MatR DFl;
      try {
        local.evaluate(uu, Fl, DFl, &frOut);
      } catch (const std::exception&) {
        return -1;
      }
      MatR G(n + 2, n + 2);
      G.topRows(n + 1) = DFl;
      G.row(n + 1) = t0.transpose();
      VecR rhs(n + 2);
      rhs.head(n + 1) = -Fl;
      rhs(n + 1) = -(t0.dot(uu - u0) - ds);
      const VecR du = G.partialPivLu().solve(rhs);
      if (!du.allFinite()) return -1;
      uu += du;
      if (du.norm() < opt.newtonTol * (1 + uu.norm())) {
        out = uu;
        return it;
      }
    }
    return -1;
  };

  double ds = opt.dsInit;
  diag.termination = "maximum number of points";
  for (int step = 0; step < opt.maxPoints; ++step) {
    VecR un;
    detail::FlowResult frn;
    const int its = correct(u, tangent, ds, un, frn);
    if (its < 0) {
      ds *= 0.5;
      if (ds < opt.dsMin) {
        diag.termination = "corrector failed at the minimum step";
        break;
      }
      continue;
    }
    BranchPoint p = makePoint(un, frn);
    if (p.reducedRadius > opt.trustRadius) {
      diag.termination = "left the trust region";
      break;
    }
    if (p.reducedRadius < opt.minRadius) {
      diag.termination = "orbit shrank onto the fixed point";
      break;
    }
    const BranchPoint& prev = diag.points.back();
    if (prev.event != BranchEvent::Hopf && p.anchor.dot(prev.anchor) < 0) {
      diag.termination = "branch returned through the fixed point";
      break;
    }
    if (opt.locateEvents) {
      auto locate = [&](auto testOf, BranchEvent ev) {
        double a = 0.0, b = ds;
        BranchPoint found = p;
        const double ta = testOf(prev);
        for (int k = 0; k < 60 && b - a > opt.eventTol * ds; ++k) {
          const double m = 0.5 * (a + b);
          VecR um;
          detail::FlowResult frm;
          if (correct(u, tangent, m, um, frm) < 0) break;
          BranchPoint pm = makePoint(um, frm);
          if ((testOf(pm) < 0) == (ta < 0)) a = m;
          else b = m;
          found = pm;
        }
        found.event = ev;
        return found;
      };
      std::vector<BranchPoint> events;
      if ((prev.foldTest < 0) != (p.foldTest < 0) && prev.event != BranchEvent::Hopf)
        events.push_back(locate([](const BranchPoint& q) { return q.foldTest; }, BranchEvent::Fold));
      if ((prev.nsTest < 0) != (p.nsTest < 0) && prev.event != BranchEvent::Hopf) {
        BranchPoint e = locate([](const BranchPoint& q) { return q.nsTest; }, BranchEvent::NeimarkSacker);
        if (detail::hasComplexPairOnCircle(detail::nontrivialMultipliers(e.multipliers), 1e-3)) events.push_back(e);
      }
      std::sort(events.begin(), events.end(), [&](const BranchPoint& a, const BranchPoint& b) {
        return (a.anchor - prev.anchor).norm() < (b.anchor - prev.anchor).norm();
      });
      for (auto& e : events) diag.points.push_back(e);
    }
    diag.points.push_back(p);
    // tangent from the last Jacobian with the phase row moved to the new anchor
    MatR DFn = MatR::Zero(n + 1, n + 2);
    DFn.topLeftCorner(n, n) = frn.Phi - MatR::Identity(n, n);
    DFn.block(0, n, n, 1) = frn.fT * sp.Tscale;
    DFn.block(0, n + 1, n, 1) = frn.dmu;
    DFn.block(n, 0, 1, n) = RealizedReducedSystem(rom, un(n + 1)).field(un.head(n)).transpose();
    VecR tn = detail::nullVector(DFn);
    if (tn.dot(tangent) < 0) tn = -tn;
    tangent = tn;
    u = un;
    const double factor = std::clamp(static_cast<double>(opt.targetNewton) / its, 0.5, 2.0);
    ds = std::clamp(ds * factor, opt.dsMin, opt.dsMax);
    if (u(n + 1) > opt.muMax || u(n + 1) < opt.muMin) {
      diag.termination = "parameter range reached";
      break;
    }
  }
  return diag;
}

/// Full-order reference diagram sampled by time integration at absolute loads.
inline BifurcationDiagram fom_diagram(const SecondOrderModel& model, const std::vector<double>& loads, const FomOptions& opt = {}) {
  BifurcationDiagram diag;
  diag.model = model.name;
  diag.source = "fom";
  diag.expansion = model.p0;
  for (double P : loads) {
    const LimitCycleMeasurement m = integrate_fom(model, P, opt);
    if (diag.labels.empty()) diag.labels = m.labels;
    BranchPoint p;
    p.mu = P - model.p0;
    p.parameter = P;
    p.period = m.period;
    p.amplitude = m.amplitude;
    p.stable = m.converged && !m.escaped;
    diag.points.push_back(p);
  }
  diag.termination = "load list exhausted";
  return diag;
}

struct CompareOptions {
  int coordinate = 0;
  double threshold = 0.05;
};

struct ComparisonRow {
  double parameter, candidate, reference, relError;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double maxError = 0.0;
  double validity = std::numeric_limits<double>::infinity();  // absolute parameter P_v
  double referenceOnset = 0.0;                                 // first reference parameter with nonzero amplitude
};

namespace detail {

/// Leading part of a branch on which the parameter increases, ordered by parameter.
inline std::vector<std::pair<double, double>> monotoneBranch(const BifurcationDiagram& d, int coordinate) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : d.points) {
    if (p.amplitude.size() <= coordinate) continue;
    if (!out.empty() && p.parameter <= out.back().first) {
      if (d.source == "fom") continue;
      break;
    }
    out.emplace_back(p.parameter, p.amplitude(coordinate));
  }
  return out;
}

inline double interpolate(const std::vector<std::pair<double, double>>& c, double x) {
  auto it = std::lower_bound(c.begin(), c.end(), x, [](const auto& a, double v) { return a.first < v; });
  if (it == c.begin()) return it->second;
  if (it == c.end()) return c.back().second;
  const auto& [x1, y1] = *it;
  const auto& [x0, y0] = *(it - 1);
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace detail

/// Relative amplitude error of `candidate` against `reference` at the reference
/// parameters; P_v is where the error first exceeds the threshold.
inline ComparisonReport diagram_compare(const BifurcationDiagram& candidate, const BifurcationDiagram& reference,
                                        const CompareOptions& opt = {}) {
  const auto a = detail::monotoneBranch(candidate, opt.coordinate);
  const auto b = detail::monotoneBranch(reference, opt.coordinate);
  if (a.size() < 2 || b.empty()) throw std::invalid_argument("diagram_compare: a diagram has too few points");
  ComparisonReport rep;
  rep.referenceOnset = std::numeric_limits<double>::quiet_NaN();
  double lastParam = std::numeric_limits<double>::quiet_NaN(), lastErr = 0.0;
  for (const auto& [P, ref] : b) {
    if (ref <= 0.0) continue;
    if (std::isnan(rep.referenceOnset)) rep.referenceOnset = P;
    if (P < a.front().first || P > a.back().first) continue;
    const double cand = detail::interpolate(a, P);
    const double err = std::abs(cand - ref) / ref;
    rep.rows.push_back({P, cand, ref, err});
    rep.maxError = std::max(rep.maxError, err);
    if (std::isinf(rep.validity) && err > opt.threshold) {
      rep.validity = std::isnan(lastParam) ? P : lastParam + (P - lastParam) * (opt.threshold - lastErr) / (err - lastErr);
    }
    lastParam = P;
    lastErr = err;
  }
  if (rep.rows.empty()) throw std::invalid_argument("diagram_compare: parameter ranges do not overlap");
  return rep;
}

}  // namespace hopfrom
