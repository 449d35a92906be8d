#pragma once
// Time integration of reduced models and full-order references, limit-cycle measurement.

#include <hopfrom/dpim.hpp>
#include <hopfrom/spectral.hpp>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopfrom {

using OdeState = std::vector<double>;

struct IntegrationOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double sampleDt = 0.05;
  double escapeRadius = 1e3;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<VecR> x;
  bool escaped = false;
  double escapeTime = std::numeric_limits<double>::quiet_NaN();
};

/// Reduced dynamics in real coordinates x = (Re z1, Im z1, Re z2, Im z2, ...) at fixed mu.
class RealizedReducedSystem {
 public:
  RealizedReducedSystem(const ParametrisationROM& rom, double mu) : rom_(&rom), mu_(mu) {
    if (rom.d % 2 != 0) throw std::invalid_argument("RealizedReducedSystem: master set must hold conjugate pairs");
    for (int m = 0; 2 * m < rom.d; ++m)
      if (rom.conjugateVariable(2 * m) != 2 * m + 1)
        throw std::invalid_argument("RealizedReducedSystem: conjugate of z" + std::to_string(2 * m + 1) + " must follow it");
    const int half = rom.d / 2;
    for (int id = 0; id < rom.table.size(); ++id) {
      const VecC& fa = rom.f[static_cast<std::size_t>(id)];
      bool any = false;
      for (int m = 0; m < half; ++m) any = any || fa(2 * m) != cplx(0);
      if (!any) continue;
      Term t;
      for (int k = 0; k <= rom.d; ++k) t.exponents.push_back(rom.table.exponent(id, k));
      for (int m = 0; m < half; ++m) t.coeff.push_back(fa(2 * m));
      terms_.push_back(std::move(t));
    }
  }

  int dim() const { return rom_->d; }
  double mu() const { return mu_; }
  const ParametrisationROM& rom() const { return *rom_; }

  VecC complexState(const VecR& x) const { return rom_->fromRealified(x, mu_); }

  /// Field, its Jacobian d/dx and its derivative d/dmu; null outputs are skipped.
  void evaluate(const VecR& x, VecR* field, MatR* jac, VecR* dmu) const {
    const int d = rom_->d, half = d / 2, order = rom_->order;
    const VecC zt = complexState(x);
    std::vector<cplx> pw(static_cast<std::size_t>((d + 1) * (order + 1)));
    for (int k = 0; k <= d; ++k) {
      cplx v = 1.0;
      for (int e = 0; e <= order; ++e, v *= zt(k)) pw[static_cast<std::size_t>(k * (order + 1) + e)] = v;
    }
    auto power = [&](int k, int e) { return pw[static_cast<std::size_t>(k * (order + 1) + e)]; };
    const bool grad = jac || dmu;
    std::vector<cplx> fz(static_cast<std::size_t>(half), 0.0);
    std::vector<cplx> dz(grad ? static_cast<std::size_t>(half * (d + 1)) : 0, 0.0);
    std::vector<cplx> partial(static_cast<std::size_t>(d + 1));
    for (const Term& t : terms_) {
      cplx value = 1.0;
      for (int k = 0; k <= d; ++k) value *= power(k, t.exponents[static_cast<std::size_t>(k)]);
      for (int m = 0; m < half; ++m) fz[static_cast<std::size_t>(m)] += value * t.coeff[static_cast<std::size_t>(m)];
      if (!grad) continue;
      for (int k = 0; k <= d; ++k) {
        const int e = t.exponents[static_cast<std::size_t>(k)];
        if (e == 0) {
          partial[static_cast<std::size_t>(k)] = 0.0;
          continue;
        }
        cplx p = static_cast<double>(e) * power(k, e - 1);
        for (int j = 0; j <= d; ++j)
          if (j != k) p *= power(j, t.exponents[static_cast<std::size_t>(j)]);
        partial[static_cast<std::size_t>(k)] = p;
      }
      for (int m = 0; m < half; ++m)
        for (int k = 0; k <= d; ++k)
          dz[static_cast<std::size_t>(m * (d + 1) + k)] += partial[static_cast<std::size_t>(k)] * t.coeff[static_cast<std::size_t>(m)];
    }
    if (field) {
      field->resize(d);
      for (int m = 0; m < half; ++m) {
        (*field)(2 * m) = fz[static_cast<std::size_t>(m)].real();
        (*field)(2 * m + 1) = fz[static_cast<std::size_t>(m)].imag();
      }
    }
    // dz/dRe = e_z + e_zbar, dz/dIm = i (e_z - e_zbar)
    if (jac) {
      jac->resize(d, d);
      for (int m = 0; m < half; ++m)
        for (int c = 0; c < half; ++c) {
          const cplx a = dz[static_cast<std::size_t>(m * (d + 1) + 2 * c)];
          const cplx b = dz[static_cast<std::size_t>(m * (d + 1) + 2 * c + 1)];
          const cplx dRe = a + b, dIm = cplx(0, 1) * (a - b);
          (*jac)(2 * m, 2 * c) = dRe.real();
          (*jac)(2 * m + 1, 2 * c) = dRe.imag();
          (*jac)(2 * m, 2 * c + 1) = dIm.real();
          (*jac)(2 * m + 1, 2 * c + 1) = dIm.imag();
        }
    }
    if (dmu) {
      dmu->resize(d);
      for (int m = 0; m < half; ++m) {
        const cplx g = dz[static_cast<std::size_t>(m * (d + 1) + d)];
        (*dmu)(2 * m) = g.real();
        (*dmu)(2 * m + 1) = g.imag();
      }
    }
  }

  VecR field(const VecR& x) const {
    VecR f;
    evaluate(x, &f, nullptr, nullptr);
    return f;
  }

  MatR jacobian(const VecR& x) const {
    MatR J;
    evaluate(x, nullptr, &J, nullptr);
    return J;
  }

  VecR paramDerivative(const VecR& x) const {
    VecR g;
    evaluate(x, nullptr, nullptr, &g);
    return g;
  }

  /// Full-state perturbation W(z, mu); real part only.
  VecR physical(const VecR& x) const { return rom_->mapping(complexState(x)).real(); }
  /// Largest imaginary part of W(z, mu) relative to its real part.
  double imaginaryLeak(const VecR& x) const {
    const VecC w = rom_->mapping(complexState(x));
    return w.imag().cwiseAbs().maxCoeff() / std::max(1e-300, w.real().cwiseAbs().maxCoeff());
  }

  void operator()(const OdeState& x, OdeState& dx, double) const {
    const VecR v = field(Eigen::Map<const VecR>(x.data(), static_cast<Eigen::Index>(x.size())));
    dx.assign(v.data(), v.data() + v.size());
  }

 private:
  struct Term {
    std::vector<int> exponents;
    std::vector<cplx> coeff;  // rows of z_1, z_3, ... (the conjugate rows follow)
  };

  const ParametrisationROM* rom_;
  double mu_;
  std::vector<Term> terms_;
};

namespace detail {

struct Escape {
  double t;
};

/// Adaptive Dormand-Prince integration sampled every opt.sampleDt; the
/// callback sees every sample and may stop the run by returning false.
template <class System>
void integrateSampled(const System& sys, OdeState& x, double t0, double tEnd, const IntegrationOptions& opt,
                      const std::function<bool(double, const OdeState&)>& observe) {
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(opt.atol, opt.rtol, ode::runge_kutta_dopri5<OdeState>());
  struct Stop {};
  auto obs = [&](const OdeState& s, double t) {
    double n2 = 0;
    for (double v : s) n2 += v * v;
    if (!(std::sqrt(n2) <= opt.escapeRadius)) throw Escape{t};
    if (!observe(t, s)) throw Stop{};
  };
  try {
    const int n = std::max(1, static_cast<int>(std::ceil((tEnd - t0) / opt.sampleDt - 1e-9)));
    const double dt = (tEnd - t0) / n;
    ode::integrate_n_steps(stepper, std::cref(sys), x, t0, dt, n, obs);
  } catch (const Stop&) {
  }
}

}  // namespace detail

/// Integrates the realified reduced dynamics from real coordinates x0.
inline Trajectory integrate_reduced(const ParametrisationROM& rom, double mu, const VecR& x0, double tEnd,
                                    const IntegrationOptions& opt = {}) {
  RealizedReducedSystem sys(rom, mu);
  if (x0.size() != sys.dim()) throw std::invalid_argument("integrate_reduced: initial state has wrong size");
  Trajectory tr;
  OdeState x(x0.data(), x0.data() + x0.size());
  try {
    detail::integrateSampled(sys, x, 0.0, tEnd, opt, [&](double t, const OdeState& s) {
      tr.t.push_back(t);
      tr.x.push_back(Eigen::Map<const VecR>(s.data(), static_cast<Eigen::Index>(s.size())));
      return true;
    });
  } catch (const detail::Escape& e) {
    tr.escaped = true;
    tr.escapeTime = e.t;
  }
  return tr;
}

struct CycleOptions {
  double perturbation = 1e-4;
  double settleTol = 1e-4;
  int maxPeriods = 2000;
  int samplesPerPeriod = 200;
  double decayRatio = 1e-3;  // amplitude below this fraction of the first period counts as decay
  std::vector<int> settleCoordinates;  // coordinates judged by the settling test, all when empty
  IntegrationOptions integration;
};

struct LimitCycleMeasurement {
  double mu = 0.0;
  double parameter = 0.0;  // absolute
  VecR amplitude;          // max |coordinate| over the last period, per tracked coordinate
  std::vector<std::string> labels;
  double period = 0.0;
  bool converged = false;
  bool decayed = false;
  bool escaped = false;
  bool stalled = false;  // the phase signal stopped crossing zero
  double transient = 0.0;  // time at the start of the measured period
  int periods = 0;
};

namespace detail {

/// Splits a sampled signal into periods at upward zero crossings of a phase
/// signal and tracks the per-period maximum of |q_i|, refined by a parabola
/// through each sampled extremum.
class CycleTracker {
 public:
  CycleTracker(const CycleOptions& opt, double minPeriod) : opt_(opt), minPeriod_(minPeriod) {}

  /// Returns false once the run is finished.
  bool push(double t, double s, const VecR& q) {
    hist_.push_back(q);
    if (hist_.size() > 3) hist_.erase(hist_.begin());
    if (peak_.size() != q.size()) peak_ = VecR::Zero(q.size());
    peak_ = peak_.cwiseMax(q.cwiseAbs());
    if (hist_.size() == 3) refine();
    bool done = false;
    // no crossing for many expected periods: the orbit no longer winds around the phase origin
    if (t - lastCross_.value_or(0.0) > kStallPeriods * 2.0 * minPeriod_) {
      stalled_ = true;
      return false;
    }
    if (hasPrev_ && sPrev_ < 0.0 && s >= 0.0) {
      const double tc = tPrev_ + (t - tPrev_) * (-sPrev_) / (s - sPrev_);
      if (!lastCross_ || tc - *lastCross_ > minPeriod_) done = closePeriod(tc);
    }
    hasPrev_ = true;
    sPrev_ = s;
    tPrev_ = t;
    return !done;
  }

  void finish(LimitCycleMeasurement& out) const {
    out.periods = static_cast<int>(amps_.size());
    out.converged = converged_ && !stalled_;
    out.decayed = decayed_;
    out.stalled = stalled_;
    out.transient = start_;
    if (amps_.empty()) {
      out.amplitude = decayed_ ? VecR::Zero(peak_.size()) : peak_;
      return;
    }
    out.amplitude = decayed_ ? VecR::Zero(amps_.back().size()) : amps_.back();
    out.period = periods_.back();
  }

 private:
  void refine() {
    const VecR& a = hist_[0];
    const VecR& b = hist_[1];
    const VecR& c = hist_[2];
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (std::abs(b(i)) < std::abs(a(i)) || std::abs(b(i)) < std::abs(c(i))) continue;
      const double curv = a(i) - 2 * b(i) + c(i);
      const double v = curv != 0.0 ? b(i) - (c(i) - a(i)) * (c(i) - a(i)) / (8 * curv) : b(i);
      peak_(i) = std::max(peak_(i), std::abs(v));
    }
  }

  bool closePeriod(double tc) {
    if (lastCross_) {
      amps_.push_back(peak_);
      periods_.push_back(tc - *lastCross_);
      start_ = *lastCross_;
      const std::size_t k = amps_.size();
      const double scale = std::max(judged(peak_).maxCoeff(), 1e-300);
      if (scale < opt_.decayRatio * judged(amps_.front()).maxCoeff()) {
        decayed_ = converged_ = true;
        return true;
      }
      if (k >= 3) {
        const double d1 = judged(amps_[k - 1] - amps_[k - 2]).cwiseAbs().maxCoeff();
        const double d0 = judged(amps_[k - 2] - amps_[k - 3]).cwiseAbs().maxCoeff();
        const double change = d1 / scale;
        // a slowly growing or decaying transient also has a small change per
        // period, so the geometric tail of the remaining drift must be small too
        const double rho = d0 > 0 ? d1 / d0 : 0.0;
        const double tail = rho < 1.0 ? change * rho / (1.0 - rho) : std::numeric_limits<double>::infinity();
        if (change < opt_.settleTol && tail < opt_.settleTol) {
          converged_ = true;
          return true;
        }
      }
      if (static_cast<int>(k) >= opt_.maxPeriods) {
        decayed_ = judged(amps_.back()).maxCoeff() < judged(amps_.front()).maxCoeff() && judged(amps_.back()).maxCoeff() < judged(amps_[k - 2]).maxCoeff();
        return true;
      }
    }
    lastCross_ = tc;
    peak_ = hist_.back().cwiseAbs();
    return false;
  }

  VecR judged(const VecR& v) const {
    if (opt_.settleCoordinates.empty()) return v;
    VecR out(static_cast<Eigen::Index>(opt_.settleCoordinates.size()));
    for (std::size_t i = 0; i < opt_.settleCoordinates.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(opt_.settleCoordinates[i]);
    return out;
  }

  static constexpr double kStallPeriods = 50.0;
  CycleOptions opt_;
  double minPeriod_;
  bool stalled_ = false;
  std::vector<VecR> hist_;
  VecR peak_;
  bool hasPrev_ = false;
  double sPrev_ = 0, tPrev_ = 0;
  std::optional<double> lastCross_;
  std::vector<VecR> amps_;
  std::vector<double> periods_;
  double start_ = 0.0;
  bool converged_ = false, decayed_ = false;
};

}  // namespace detail

/// Leading eigenvalue (largest real part, non-negative imaginary part) of a pencil and its right vector.
inline std::pair<cplx, VecC> leading_mode(const LinearPencil& pen) {
  const auto sys = pencil_eigensystem(pen);
  int best = -1;
  for (std::size_t k = 0; k < sys.values.size(); ++k) {
    if (sys.values[k].imag() < 0) continue;
    if (best < 0 || sys.values[k].real() > sys.values[static_cast<std::size_t>(best)].real()) best = static_cast<int>(k);
  }
  if (best < 0) throw std::runtime_error("leading_mode: no eigenvalue with non-negative imaginary part");
  return {sys.values[static_cast<std::size_t>(best)], sys.right.col(best)};
}

/// Settled limit cycle of the reduced dynamics at parameter increment mu,
/// started from Re z1 = perturbation; amplitudes are max |W_i| over one period.
inline LimitCycleMeasurement measure_limit_cycle(const ParametrisationROM& rom, double mu, const CycleOptions& opt = {}) {
  RealizedReducedSystem sys(rom, mu);
  const double omega = std::abs(rom.spectrum.lambda.front().imag());
  if (!(omega > 0)) throw std::invalid_argument("measure_limit_cycle: leading master eigenvalue is not oscillatory");
  const double Test = 2 * std::numbers::pi / omega;
  LimitCycleMeasurement out;
  out.mu = mu;
  out.parameter = rom.mu0 + mu;
  out.labels = rom.stateLabels;
  IntegrationOptions io = opt.integration;
  io.sampleDt = Test / opt.samplesPerPeriod;
  detail::CycleTracker tracker(opt, 0.5 * Test);
  OdeState x(static_cast<std::size_t>(sys.dim()), 0.0);
  x[0] = opt.perturbation;
  try {
    detail::integrateSampled(sys, x, 0.0, 2.0 * opt.maxPeriods * Test, io, [&](double t, const OdeState& s) {
      const VecR xs = Eigen::Map<const VecR>(s.data(), static_cast<Eigen::Index>(s.size()));
      return tracker.push(t, xs(0), sys.physical(xs));
    });
  } catch (const detail::Escape&) {
    out.escaped = true;
  }
  tracker.finish(out);
  if (out.escaped) out.converged = false;
  return out;
}

/// First-order form y = [U; V] of M U'' + C U' + r(U, P) = 0.
class SecondOrderOde {
 public:
  SecondOrderOde(const SecondOrderModel& model, double P) : model_(&model), P_(P), lu_(model.M) {}
  void operator()(const OdeState& y, OdeState& dy, double) const {
    const int n = model_->nDof;
    const Eigen::Map<const VecR> U(y.data(), n), V(y.data() + n, n);
    const VecR a = lu_.solve(-(model_->C * V) - model_->staticResidual(U, P_));
    dy.resize(y.size());
    for (int i = 0; i < n; ++i) {
      dy[static_cast<std::size_t>(i)] = V(i);
      dy[static_cast<std::size_t>(n + i)] = a(i);
    }
  }

 private:
  const SecondOrderModel* model_;
  double P_;
  Eigen::PartialPivLU<MatR> lu_;
};

struct NewmarkOptions {
  double beta = 0.25, gamma = 0.5;
  double newtonTol = 1e-10;  // relative force residual
  int maxNewton = 25;
  int maxHalvings = 10;
};

/// Implicit Newmark integrator with Newton iterations on U_{n+1}.
class NewmarkIntegrator {
 public:
  NewmarkIntegrator(const SecondOrderModel& model, double P, NewmarkOptions opt = {})
      : model_(&model), P_(P), opt_(opt) {}

  VecR initialAcceleration(const VecR& U, const VecR& V) const {
    return model_->M.partialPivLu().solve(-(model_->C * V) - model_->staticResidual(U, P_));
  }

  /// Advances (U, V, A) by h, halving internally when Newton fails.
  void step(VecR& U, VecR& V, VecR& A, double h, int depth = 0) const {
    if (tryStep(U, V, A, h)) return;
    if (depth >= opt_.maxHalvings) throw std::runtime_error("newmark: Newton failed at the smallest step " + std::to_string(h));
    step(U, V, A, 0.5 * h, depth + 1);
    step(U, V, A, 0.5 * h, depth + 1);
  }

 private:
  bool tryStep(VecR& U, VecR& V, VecR& A, double h) const {
    const double b = opt_.beta, g = opt_.gamma;
    const VecR Upred = U + h * V + h * h * (0.5 - b) * A;
    const VecR Vpred = V + h * (1 - g) * A;
    VecR An = A;
    VecR Un = Upred + h * h * b * An;
    for (int it = 0; it < opt_.maxNewton; ++it) {
      const VecR Vn = Vpred + h * g * An;
      const VecR inertia = model_->M * An;
      const VecR internal = model_->staticResidual(Un, P_);
      const VecR r = inertia + model_->C * Vn + internal;
      const double scale = std::max({inertia.norm(), internal.norm(), (model_->C * Vn).norm()});
      if (r.norm() <= opt_.newtonTol * scale || scale == 0.0) {
        U = Un;
        V = Vn;
        A = An;
        return true;
      }
      const MatR J = model_->M / (b * h * h) + model_->C * (g / (b * h)) + model_->staticTangent(Un, P_);
      const VecR dU = J.partialPivLu().solve(-r);
      if (!dU.allFinite()) return false;
      Un += dU;
      An += dU / (b * h * h);
    }
    return false;
  }

  const SecondOrderModel* model_;
  double P_;
  NewmarkOptions opt_;
};

enum class FomMethod { Auto, RungeKutta, Newmark };

struct FomOptions {
  CycleOptions cycle;
  FomMethod method = FomMethod::Auto;
  NewmarkOptions newmark;
  std::optional<int> phaseCoordinate;  // displacement index used to cut periods
  std::optional<VecR> initialState;    // [U - U0; V], overrides the eigenvector perturbation
};

/// Full-order trajectory of [U - U0; V] at absolute load P from y0, sampled every dt.
inline Trajectory fom_trajectory(const SecondOrderModel& model, double P, const VecR& y0, double tEnd, double dt,
                                 FomMethod method = FomMethod::Auto, const IntegrationOptions& io = {},
                                 const NewmarkOptions& nmOpt = {}) {
  const SecondOrderModel m = at_load(model, P);
  const int n = m.nDof;
  Trajectory tr;
  const bool rk = method == FomMethod::RungeKutta || (method == FomMethod::Auto && !m.cubicTerms.empty());
  if (rk) {
    SecondOrderOde ode(m, P);
    OdeState y(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = m.U0(i) + y0(i);
      y[static_cast<std::size_t>(n + i)] = y0(n + i);
    }
    IntegrationOptions o = io;
    o.sampleDt = dt;
    try {
      detail::integrateSampled(ode, y, 0.0, tEnd, o, [&](double t, const OdeState& s) {
        VecR q = Eigen::Map<const VecR>(s.data(), 2 * n);
        q.head(n) -= m.U0;
        tr.t.push_back(t);
        tr.x.push_back(q);
        return true;
      });
    } catch (const detail::Escape& e) {
      tr.escaped = true;
      tr.escapeTime = e.t;
    }
    return tr;
  }
  NewmarkIntegrator nm(m, P, nmOpt);
  VecR U = m.U0 + y0.head(n), V = y0.tail(n);
  VecR A = nm.initialAcceleration(U, V);
  const int steps = static_cast<int>(std::llround(tEnd / dt));
  for (int k = 0; k <= steps; ++k) {
    VecR q(2 * n);
    q.head(n) = U - m.U0;
    q.tail(n) = V;
    tr.t.push_back(k * dt);
    tr.x.push_back(q);
    if (!(q.norm() <= io.escapeRadius)) {
      tr.escaped = true;
      tr.escapeTime = k * dt;
      break;
    }
    if (k < steps) nm.step(U, V, A, dt);
  }
  return tr;
}

/// Settled full-order limit cycle at absolute load P, measured like the ROM:
/// amplitudes of [U - U0; V] over one period.
inline LimitCycleMeasurement integrate_fom(const SecondOrderModel& model, double P, const FomOptions& opt = {}) {
  const SecondOrderModel m = at_load(model, P);
  const int n = m.nDof;
  const auto [lam, vec] = leading_mode(make_pencil(m));
  const double omega = std::abs(lam.imag());
  if (!(omega > 0)) throw std::invalid_argument("integrate_fom: leading eigenvalue is not oscillatory");
  const double Test = 2 * std::numbers::pi / omega;
  const double h = Test / opt.cycle.samplesPerPeriod;
  int phase = 0;
  if (opt.phaseCoordinate) {
    phase = *opt.phaseCoordinate;
  } else {
    vec.head(n).cwiseAbs().maxCoeff(&phase);
  }
  VecR y0;
  if (opt.initialState) {
    y0 = *opt.initialState;
  } else {
    const VecC v = vec / vec.head(n).cwiseAbs().maxCoeff();
    y0 = opt.cycle.perturbation * v.real();
  }
  LimitCycleMeasurement out;
  out.mu = P - model.p0;
  out.parameter = P;
  for (int i = 0; i < n; ++i) out.labels.push_back(i < static_cast<int>(m.dofLabels.size()) ? m.dofLabels[static_cast<std::size_t>(i)] : "u" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i) out.labels.push_back("v" + std::to_string(i + 1));
  detail::CycleTracker tracker(opt.cycle, 0.5 * Test);
  const double tEnd = 2.0 * opt.cycle.maxPeriods * Test;
  const bool rk = opt.method == FomMethod::RungeKutta || (opt.method == FomMethod::Auto && !m.cubicTerms.empty());
  const double escape = opt.cycle.integration.escapeRadius;
  if (rk) {
    SecondOrderOde ode(m, P);
    OdeState y(static_cast<std::size_t>(2 * n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = m.U0(i) + y0(i);
      y[static_cast<std::size_t>(n + i)] = y0(n + i);
    }
    IntegrationOptions io = opt.cycle.integration;
    io.sampleDt = h;
    io.escapeRadius = std::numeric_limits<double>::infinity();
    try {
      detail::integrateSampled(ode, y, 0.0, tEnd, io, [&](double t, const OdeState& s) {
        VecR q = Eigen::Map<const VecR>(s.data(), 2 * n);
        q.head(n) -= m.U0;
        if (!(q.norm() <= escape)) throw detail::Escape{t};
        return tracker.push(t, q(phase), q);
      });
    } catch (const detail::Escape&) {
      out.escaped = true;
    }
  } else {
    NewmarkIntegrator nm(m, P, opt.newmark);
    VecR U = m.U0 + y0.head(n), V = y0.tail(n);
    VecR A = nm.initialAcceleration(U, V);
    VecR q(2 * n);
    for (double t = 0.0; t < tEnd; t += h) {
      q.head(n) = U - m.U0;
      q.tail(n) = V;
      if (!(q.norm() <= escape)) {
        out.escaped = true;
        break;
      }
      if (!tracker.push(t, q(phase), q)) break;
      nm.step(U, V, A, h);
    }
  }
  tracker.finish(out);
  if (out.escaped) out.converged = false;
  return out;
}

/// Hand-built reduced model z' = (mu + i omega) z + c z |z|^2 with physical
/// state (Re z, Im z); the supercritical cycle has radius sqrt(-mu / Re c).
inline ParametrisationROM hopf_normal_form_rom(double omega = 1.0, cplx cubic = -1.0) {
  ParametrisationROM rom;
  rom.d = 2;
  rom.order = 3;
  rom.table = MonomialTable(3, 3);
  rom.stateDim = 2;
  rom.nDisplacement = 1;
  rom.modelName = "hopf-normal-form";
  rom.stateLabels = {"x", "y"};
  rom.spectrum.d = 2;
  rom.spectrum.lambda = {cplx(0, omega), cplx(0, -omega)};
  rom.spectrum.Lambda = MatC::Zero(2, 2);
  rom.spectrum.Lambda(0, 0) = rom.spectrum.lambda[0];
  rom.spectrum.Lambda(1, 1) = rom.spectrum.lambda[1];
  rom.spectrum.conjugate = {1, 0};
  rom.W.assign(static_cast<std::size_t>(rom.table.size()), VecC::Zero(2));
  rom.f.assign(static_cast<std::size_t>(rom.table.size()), VecC::Zero(3));
  auto at = [&](int a, int b, int m) { return static_cast<std::size_t>(rom.table.find({a, b, m})); };
  rom.W[at(1, 0, 0)] << 0.5, cplx(0, -0.5);
  rom.W[at(0, 1, 0)] << 0.5, cplx(0, 0.5);
  rom.f[at(1, 0, 0)](0) = cplx(0, omega);
  rom.f[at(0, 1, 0)](1) = cplx(0, -omega);
  rom.f[at(1, 0, 1)](0) = 1.0;
  rom.f[at(0, 1, 1)](1) = 1.0;
  rom.f[at(2, 1, 0)](0) = cubic;
  rom.f[at(1, 2, 0)](1) = std::conj(cubic);
  return rom;
}

struct ManifoldGrid {
  std::vector<double> radii{1e-3};
  int angles = 12;
  double tEnd = 100.0;
  double sampleDt = 0.1;
  std::vector<int> coordinates;  // state indices to emit; empty means all
};

struct ManifoldSample {
  int trajectory = 0;
  double t = 0.0;
  VecR q;
};

struct ManifoldSurface {
  std::vector<ManifoldSample> samples;
  std::vector<bool> escaped;  // per trajectory
  std::vector<VecR> initialReduced;
};

/// Trajectories from a polar grid z1 = r exp(i phi) in the leading master plane, mapped through W.
inline ManifoldSurface trace_unstable_manifold(const ParametrisationROM& rom, double mu, const ManifoldGrid& grid) {
  RealizedReducedSystem sys(rom, mu);
  ManifoldSurface out;
  IntegrationOptions io;
  io.sampleDt = grid.sampleDt;
  int id = 0;
  for (double r : grid.radii)
    for (int a = 0; a < grid.angles; ++a, ++id) {
      const double phi = 2 * std::numbers::pi * a / grid.angles;
      VecR x0 = VecR::Zero(sys.dim());
      x0(0) = r * std::cos(phi);
      x0(1) = r * std::sin(phi);
      out.initialReduced.push_back(x0);
      const Trajectory tr = integrate_reduced(rom, mu, x0, grid.tEnd, io);
      out.escaped.push_back(tr.escaped);
      for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const VecR full = sys.physical(tr.x[k]);
        VecR q;
        if (grid.coordinates.empty()) {
          q = full;
        } else {
          q.resize(static_cast<Eigen::Index>(grid.coordinates.size()));
          for (std::size_t c = 0; c < grid.coordinates.size(); ++c) q(static_cast<Eigen::Index>(c)) = full(grid.coordinates[c]);
        }
        out.samples.push_back({id, tr.t[k], q});
      }
    }
  return out;
}

}  // namespace hopfrom
