#pragma once
// Linear analysis: eigenproblems, parameter vector, sweeps, exceptional points, Jordan blocks.

#include <hopfrom/models.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace hopfrom {

/// Linearisation B y' = A_t y + A_0 mu about an expansion point.
/// For second-order models y = [U; V], B = diag(M, M), A_t = [[0, M], [-K_t, -C]].
struct LinearPencil {
  MatR B, At;
  VecR A0;
  int nDisplacement = 0;
  bool secondOrder = false;
  MatR M, C, Kt;  // second-order blocks

  int dim() const { return static_cast<int>(At.rows()); }
};

inline LinearPencil make_pencil(const FirstOrderDAE& dae) {
  LinearPencil p;
  p.B = dae.B;
  p.At = dae.At();
  p.A0 = dae.A0();
  p.nDisplacement = dae.nDisplacement;
  return p;
}

inline LinearPencil make_pencil(const SecondOrderModel& m) {
  const int n = m.nDof;
  LinearPencil p;
  p.secondOrder = true;
  p.nDisplacement = n;
  p.M = m.M;
  p.C = m.C;
  p.Kt = m.Kt();
  p.B = MatR::Zero(2 * n, 2 * n);
  p.B.topLeftCorner(n, n) = m.M;
  p.B.bottomRightCorner(n, n) = m.M;
  p.At = MatR::Zero(2 * n, 2 * n);
  p.At.topRightCorner(n, n) = m.M;
  p.At.bottomLeftCorner(n, n) = -p.Kt;
  p.At.bottomRightCorner(n, n) = -m.C;
  p.A0 = VecR::Zero(2 * n);
  p.A0.tail(n) = m.Rt();
  return p;
}

struct JordanPair {
  int i = 0, j = 0;
  double tau = 1.0;
};

/// Master modes of the augmented problem: the d physical eigenvalues plus the
/// parameter direction (eigenvalue 0, mu-component 1).
struct Spectrum {
  int d = 0;
  std::vector<cplx> lambda;
  MatC Lambda;  // d x d, diagonal plus imposed Jordan couplings
  MatC Y, X;    // D x d right / left vectors
  VecC paramVector;  // physical part of Y_{d+1}
  std::vector<JordanPair> jordanPairs;
  std::vector<int> conjugate;  // conjugate[s] = index of conj(lambda_s)
  int nDisplacement = 0;
  bool secondOrder = false;
};

/// Full eigen-decomposition of the finite part of the pencil.
struct EigenSystem {
  std::vector<cplx> values;
  MatC right;  // columns
  MatC left;   // columns, X_s^* A_t = lambda_s X_s^* B
};

namespace detail {

inline double finiteCut(const MatR& T) { return 1e-10 * std::max(1.0, T.cwiseAbs().maxCoeff()); }

// Standard-form operator whose eigenvalues map to those of the pencil:
// second-order: S = B^{-1} A_t (lambda = theta); otherwise T = A_t^{-1} B (lambda = 1/theta).
inline MatR operatorOf(const LinearPencil& p, bool& inverted) {
  if (p.secondOrder) {
    inverted = false;
    const int n = p.nDisplacement;
    Eigen::PartialPivLU<MatR> lu(p.M);
    MatR S = MatR::Zero(2 * n, 2 * n);
    S.topRightCorner(n, n).setIdentity();
    S.bottomLeftCorner(n, n) = -lu.solve(p.Kt);
    S.bottomRightCorner(n, n) = -lu.solve(p.C);
    return S;
  }
  inverted = true;
  Eigen::FullPivLU<MatR> lu(p.At);
  if (!lu.isInvertible()) throw std::runtime_error("spectral: A_t is singular at the expansion point");
  return lu.solve(p.B);
}

}  // namespace detail

/// Finite eigenvalues only.
inline std::vector<cplx> pencil_eigenvalues(const LinearPencil& p) {
  bool inverted = false;
  MatR T = detail::operatorOf(p, inverted);
  Eigen::EigenSolver<MatR> es(T, false);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral: eigenvalue solver failed");
  std::vector<cplx> out;
  const double cut = detail::finiteCut(T);
  for (int k = 0; k < T.rows(); ++k) {
    const cplx t = es.eigenvalues()(k);
    if (inverted) {
      if (std::abs(t) > cut) out.push_back(1.0 / t);
    } else {
      out.push_back(t);
    }
  }
  return out;
}

inline EigenSystem pencil_eigensystem(const LinearPencil& p) {
  bool inverted = false;
  MatR T = detail::operatorOf(p, inverted);
  Eigen::EigenSolver<MatR> es(T, true);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral: eigenvalue solver failed");
  const MatC V = es.eigenvectors();
  const MatC Vinv = V.fullPivLu().inverse();
  // Left vectors: rows w of V^{-1} satisfy w T = theta w.
  MatC Xall;
  if (inverted) {
    // X^* = w A_t^{-1}  =>  X = A_t^{-T} w^*.
    Xall = MatR(p.At.fullPivLu().inverse().transpose()).cast<cplx>() * Vinv.adjoint();
  } else {
    Xall = MatR(p.B.partialPivLu().inverse().transpose()).cast<cplx>() * Vinv.adjoint();
  }
  EigenSystem sys;
  const double cut = detail::finiteCut(T);
  std::vector<int> keep;
  for (int k = 0; k < T.rows(); ++k) {
    const cplx t = es.eigenvalues()(k);
    if (inverted && std::abs(t) <= cut) continue;
    sys.values.push_back(inverted ? 1.0 / t : t);
    keep.push_back(k);
  }
  sys.right.resize(p.dim(), static_cast<int>(keep.size()));
  sys.left.resize(p.dim(), static_cast<int>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    sys.right.col(static_cast<int>(c)) = V.col(keep[c]);
    sys.left.col(static_cast<int>(c)) = Xall.col(keep[c]);
  }
  return sys;
}

/// Largest real part among the finite eigenvalues.
inline double max_real_part(const LinearPencil& p) {
  double m = -std::numeric_limits<double>::infinity();
  for (cplx l : pencil_eigenvalues(p)) m = std::max(m, l.real());
  return m;
}

/// Indices (into values) of the master eigenvalues with positive imaginary part:
/// the largest-real-part oscillatory mode, and for two modes the distinct
/// oscillatory mode whose |Im| is closest to it.
inline std::vector<int> select_master_indices(const std::vector<cplx>& values, int nModes) {
  const double tiny = 1e-12;
  std::vector<int> osc;
  double scale = 1.0;
  for (cplx v : values) scale = std::max(scale, std::abs(v));
  for (int k = 0; k < static_cast<int>(values.size()); ++k)
    if (values[static_cast<std::size_t>(k)].imag() > tiny * scale) osc.push_back(k);
  if (osc.empty()) throw std::runtime_error("select_master_indices: no oscillatory eigenvalues");
  auto lead = *std::max_element(osc.begin(), osc.end(), [&](int a, int b) {
    const cplx va = values[static_cast<std::size_t>(a)], vb = values[static_cast<std::size_t>(b)];
    if (va.real() != vb.real()) return va.real() < vb.real();
    return va.imag() > vb.imag();
  });
  std::vector<int> out{lead};
  if (nModes >= 2) {
    const double w = values[static_cast<std::size_t>(lead)].imag();
    int best = -1;
    double bestGap = std::numeric_limits<double>::infinity();
    for (int k : osc) {
      if (k == lead) continue;
      const double gap = std::abs(values[static_cast<std::size_t>(k)].imag() - w);
      if (gap < bestGap) {
        bestGap = gap;
        best = k;
      }
    }
    if (best < 0) throw std::runtime_error("select_master_indices: no companion mode for the two-mode strategy");
    out.push_back(best);
  }
  if (nModes > 2) throw std::invalid_argument("select_master_indices: at most two master modes");
  return out;
}

/// Solves A_t Y = -A_0 (the parameter direction, mu-component fixed to 1).
inline VecR parameter_eigenvector(const LinearPencil& p) {
  Eigen::FullPivLU<MatR> lu(p.At);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    std::ostringstream os;
    os << "parameter_eigenvector: A_t is singular";
    try {
      cplx nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (cplx l : pencil_eigenvalues(p))
        if (std::abs(l) < best) {
          best = std::abs(l);
          nearest = l;
        }
      os << "; nearly resonant eigenvalue " << nearest.real() << (nearest.imag() < 0 ? "" : "+") << nearest.imag() << "i";
    } catch (const std::exception&) {
    }
    throw std::runtime_error(os.str());
  }
  VecR y = lu.solve(-p.A0);
  if (p.secondOrder) y.tail(p.nDisplacement).setZero();
  return y;
}

namespace detail {

// Displacement part scaled to unit norm with its largest entry real positive.
inline cplx normalisation(const VecC& y, int nDisp) {
  const VecC u = nDisp > 0 ? VecC(y.head(nDisp)) : y;
  int imax = 0;
  u.cwiseAbs().maxCoeff(&imax);
  const cplx phase = u(imax) / std::abs(u(imax));
  return 1.0 / (u.norm() * phase);
}

}  // namespace detail

/// Master spectrum with bi-normalised vectors X^* B Y = I, ordered
/// [lambda_1, conj(lambda_1), lambda_2, conj(lambda_2)].
inline Spectrum solve_master_eigen(const LinearPencil& p, int nModes) {
  if (nModes < 1 || 2 * nModes > p.dim()) throw std::invalid_argument("solve_master_eigen: invalid master count");
  const EigenSystem sys = pencil_eigensystem(p);
  const auto idx = select_master_indices(sys.values, nModes);
  Spectrum s;
  s.d = 2 * nModes;
  s.nDisplacement = p.nDisplacement;
  s.secondOrder = p.secondOrder;
  s.Y.resize(p.dim(), s.d);
  s.X.resize(p.dim(), s.d);
  for (int m = 0; m < nModes; ++m) {
    const int k = idx[static_cast<std::size_t>(m)];
    const cplx lam = sys.values[static_cast<std::size_t>(k)];
    VecC y = sys.right.col(k);
    VecC x = sys.left.col(k);
    y *= detail::normalisation(y, p.nDisplacement);
    if (p.secondOrder) y.tail(p.nDisplacement) = lam * y.head(p.nDisplacement);
    const cplx xby = x.dot(p.B * y);  // x^* B y
    x /= std::conj(xby);
    s.lambda.push_back(lam);
    s.lambda.push_back(std::conj(lam));
    s.Y.col(2 * m) = y;
    s.Y.col(2 * m + 1) = y.conjugate();
    s.X.col(2 * m) = x;
    s.X.col(2 * m + 1) = x.conjugate();
    s.conjugate.push_back(2 * m + 1);
    s.conjugate.push_back(2 * m);
  }
  s.Lambda = MatC::Zero(s.d, s.d);
  for (int k = 0; k < s.d; ++k) s.Lambda(k, k) = s.lambda[static_cast<std::size_t>(k)];
  s.paramVector = parameter_eigenvector(p).cast<cplx>();
  return s;
}

/// ||X^* B Y - I|| and ||X^* A_t Y - Lambda|| (max-abs).
inline std::pair<double, double> biorthogonality_error(const Spectrum& s, const LinearPencil& p) {
  const MatC XBY = s.X.adjoint() * p.B.cast<cplx>() * s.Y;
  const MatC XAY = s.X.adjoint() * p.At.cast<cplx>() * s.Y;
  return {(XBY - MatC::Identity(s.d, s.d)).cwiseAbs().maxCoeff(), (XAY - s.Lambda).cwiseAbs().maxCoeff()};
}

/// Imposes Jordan couplings Lambda_ij = tau on nearly coalescing pairs (i < j):
/// Ybar = Y mu, Xbar = X nu with nu = ((X^* B Y mu)^*)^{-1}.
namespace detail {

// Rebuilds a coalesced pair as a two-link Jordan chain at the pair mean.
// Right chain: T y1 = 0, T y2 = tau B y1. Left chain: x2^* T = 0,
// x1^* T = tau x2^* B. Normalised so that the 2x2 block of X^* B Y is I.
inline void jordanChain(Spectrum& s, const LinearPencil& p, const JordanPair& jp) {
  const std::size_t i = static_cast<std::size_t>(jp.i), j = static_cast<std::size_t>(jp.j);
  const cplx lm = 0.5 * (s.lambda[i] + s.lambda[j]);
  const MatC Bc = p.B.cast<cplx>();
  const MatC T = p.At.cast<cplx>() - lm * Bc;
  Eigen::JacobiSVD<MatC> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const int last = static_cast<int>(T.cols()) - 1;
  VecC y1 = svd.matrixV().col(last);
  VecC x2 = svd.matrixU().col(last);
  // keep the phase of the incoming eigenvector
  const cplx ph = y1.dot(s.Y.col(jp.i));
  if (std::abs(ph) > 0) y1 *= ph / std::abs(ph);
  y1 *= s.Y.col(jp.i).norm();
  Eigen::CompleteOrthogonalDecomposition<MatC> cod(T);
  cod.setThreshold(1e-12);
  VecC y2 = cod.solve(VecC(jp.tau * Bc * y1));
  const cplx sc = x2.dot(Bc * y2);
  if (std::abs(sc) == 0) throw std::runtime_error("enforce_jordan: degenerate chain normalisation");
  x2 /= std::conj(sc);
  Eigen::CompleteOrthogonalDecomposition<MatC> codH(MatC(T.adjoint()));
  codH.setThreshold(1e-12);
  VecC x1 = codH.solve(VecC(std::conj(jp.tau) * Bc.adjoint() * x2));
  y2 -= x1.dot(Bc * y2) * y1;
  // x1^* B y1 is one by construction; fix the residual drift from the solves
  x1 /= std::conj(x1.dot(Bc * y1));
  s.Y.col(jp.i) = y1;
  s.Y.col(jp.j) = y2;
  s.X.col(jp.i) = x1;
  s.X.col(jp.j) = x2;
  s.lambda[i] = s.lambda[j] = lm;
  s.Lambda(jp.i, jp.i) = s.Lambda(jp.j, jp.j) = lm;
  s.Lambda(jp.i, jp.j) = jp.tau;
}

}  // namespace detail

/// Imposes Jordan couplings Lambda(i,j) = tau on nearly coalesced pairs and
/// rebuilds the right/left vectors so that X^* B Y = I and X^* A_t Y = Lambda.
/// Pairs whose eigenvalues agree to chainTol (relative) are rebuilt as an
/// explicit Jordan chain; the others use the two-column recombination.
inline Spectrum enforce_jordan(const Spectrum& s, const LinearPencil& p, const std::vector<JordanPair>& pairs,
                               double chainTol = 1e-7) {
  if (pairs.empty()) return s;
  Spectrum base = s;
  MatC mu = MatC::Identity(s.d, s.d);
  std::vector<JordanPair> chained;
  for (const auto& jp : pairs) {
    if (jp.i < 0 || jp.j >= s.d || jp.i >= jp.j) throw std::invalid_argument("enforce_jordan: need i < j");
    const cplx li = s.lambda[static_cast<std::size_t>(jp.i)], lj = s.lambda[static_cast<std::size_t>(jp.j)];
    const cplx diff = li - lj;
    const VecC Yi = s.Y.col(jp.i), Yj = s.Y.col(jp.j);
    const cplx gamma = Yi.dot(Yj) / Yi.dot(Yi);
    if (std::abs(gamma) < 1e-3 * Yj.norm() / Yi.norm())
      throw std::runtime_error("enforce_jordan: eigenvectors are not nearly aligned (gamma ~ 0); not an exceptional point");
    if (std::abs(diff) <= chainTol * std::max(1.0, std::abs(li))) {
      chained.push_back(jp);
      continue;
    }
    mu(jp.i, jp.j) = jp.tau / diff;
    mu(jp.j, jp.j) = -jp.tau / (gamma * diff);
    base.Lambda(jp.i, jp.j) = jp.tau;
  }
  for (const auto& jp : chained) {
    const bool mirrored = !s.conjugate.empty() && std::any_of(chained.begin(), chained.end(), [&](const JordanPair& q) {
      return q.i == s.conjugate[static_cast<std::size_t>(jp.i)] && q.j == s.conjugate[static_cast<std::size_t>(jp.j)] &&
             q.i < jp.i;
    });
    if (!mirrored) {
      detail::jordanChain(base, p, jp);
      continue;
    }
    const int ci = s.conjugate[static_cast<std::size_t>(jp.i)], cj = s.conjugate[static_cast<std::size_t>(jp.j)];
    base.Y.col(jp.i) = base.Y.col(ci).conjugate();
    base.Y.col(jp.j) = base.Y.col(cj).conjugate();
    base.X.col(jp.i) = base.X.col(ci).conjugate();
    base.X.col(jp.j) = base.X.col(cj).conjugate();
    base.lambda[static_cast<std::size_t>(jp.i)] = std::conj(base.lambda[static_cast<std::size_t>(ci)]);
    base.lambda[static_cast<std::size_t>(jp.j)] = std::conj(base.lambda[static_cast<std::size_t>(cj)]);
    base.Lambda(jp.i, jp.i) = std::conj(base.Lambda(ci, ci));
    base.Lambda(jp.j, jp.j) = std::conj(base.Lambda(cj, cj));
    base.Lambda(jp.i, jp.j) = std::conj(base.Lambda(ci, cj));
  }
  Spectrum out = base;
  const MatC Bc = p.B.cast<cplx>();
  out.Y = base.Y * mu;
  const MatC nu = (base.X.adjoint() * Bc * base.Y * mu).adjoint().inverse();
  out.X = base.X * nu;
  out.jordanPairs = pairs;
  if (p.secondOrder) {
    // Velocity part follows from Ybar^V = Ybar^U Lambda.
    const int n = p.nDisplacement;
    out.Y.bottomRows(n) = out.Y.topRows(n) * out.Lambda;
  }
  return out;
}

/// Jordan pairs for the master set: mode 1 with mode 2 and their conjugates.
inline std::vector<JordanPair> master_jordan_pairs(const Spectrum& s, double tau = 1.0) {
  if (s.d != 4) return {};
  return {{0, 2, tau}, {1, 3, tau}};
}

/// Relative gap between the two master oscillatory eigenvalues.
inline double master_gap(const Spectrum& s) {
  if (s.d != 4) return std::numeric_limits<double>::infinity();
  return std::abs(s.lambda[0] - s.lambda[2]) / std::max(1e-300, std::abs(s.lambda[0]));
}

/// Condition number (2-norm) of a set of columns.
inline double column_condition(const MatC& V) {
  Eigen::JacobiSVD<MatC> svd(V);
  const auto& sv = svd.singularValues();
  return sv(0) / sv(sv.size() - 1);
}

// ---------------------------------------------------------------------------
// Parameter sweeps

struct TrackedMode {
  int id = 0;
  std::vector<cplx> values;  // one per grid point
};

struct EigenTrajectory {
  std::vector<double> grid;
  std::vector<TrackedMode> modes;
  std::optional<double> Pc, PH, Pd;
  std::optional<double> omegaC;
  std::vector<std::string> warnings;
};

/// Returns the linear pencil of a model at absolute load P.
using PencilFactory = std::function<LinearPencil(double)>;

inline PencilFactory pencil_factory(const SecondOrderModel& model, bool viaRecast) {
  if (viaRecast)
    return [model](double P) { return make_pencil(recast_to_dae(at_load(model, P))); };
  return [model](double P) { return make_pencil(at_load(model, P)); };
}

struct SweepOptions {
  double macThreshold = 0.8;
  int maxTracked = 6;          // oscillatory modes with smallest |lambda| kept per grid point
  double stabilityTol = 1e-9;  // Re(lambda) above tol * max(1, |lambda|) counts as unstable
  double bisectionTol = 1e-8;  // relative
  double epGapTol = 1e-6;
};

namespace detail {

inline double mac(const VecC& a, const VecC& b) {
  const double num = std::norm(a.dot(b));
  return num / (a.squaredNorm() * b.squaredNorm());
}

inline bool isUnstable(const std::vector<cplx>& vals, double tol) {
  for (cplx l : vals)
    if (l.real() > tol * std::max(1.0, std::abs(l))) return true;
  return false;
}

template <class Pred>
double bisect(Pred unstable, double a, double b, double relTol) {
  // unstable(a) == false, unstable(b) == true
  while (std::abs(b - a) > relTol * std::max(1.0, std::abs(b))) {
    const double m = 0.5 * (a + b);
    if (unstable(m))
      b = m;
    else
      a = m;
  }
  return 0.5 * (a + b);
}

// Oscillatory mode with the largest real part.
inline cplx leadingOscillatory(const std::vector<cplx>& vals) {
  cplx best(-std::numeric_limits<double>::infinity(), 0);
  for (cplx l : vals)
    if (l.imag() >= 0 && l.real() > best.real()) best = l;
  return best;
}

}  // namespace detail

/// Sweep over an absolute-parameter grid with MAC-based tracking; events:
/// P_c (exceptional point, when present), P_H (first loss of stability),
/// P_d (imaginary part of the unstable mode vanishes).
inline EigenTrajectory eigen_sweep(const PencilFactory& factory, double pMin, double pMax, int nPoints,
                                   const SweepOptions& opt = {}) {
  if (nPoints < 2 || !(pMax > pMin)) throw std::invalid_argument("eigen_sweep: invalid grid");
  EigenTrajectory traj;
  std::vector<MatC> prevVecs;
  std::vector<std::vector<cplx>> allValues;
  for (int g = 0; g < nPoints; ++g) {
    const double P = pMin + (pMax - pMin) * g / (nPoints - 1);
    traj.grid.push_back(P);
    const LinearPencil pen = factory(P);
    const EigenSystem sys = pencil_eigensystem(pen);
    allValues.push_back(sys.values);
    // candidates: upper half plane (Im >= 0), smallest |lambda| first
    std::vector<int> cand;
    for (int k = 0; k < static_cast<int>(sys.values.size()); ++k)
      if (sys.values[static_cast<std::size_t>(k)].imag() >= -1e-12) cand.push_back(k);
    std::sort(cand.begin(), cand.end(), [&](int a, int b) {
      return std::abs(sys.values[static_cast<std::size_t>(a)]) < std::abs(sys.values[static_cast<std::size_t>(b)]);
    });
    if (static_cast<int>(cand.size()) > opt.maxTracked) cand.resize(static_cast<std::size_t>(opt.maxTracked));
    const int nd = pen.nDisplacement > 0 ? pen.nDisplacement : pen.dim();
    std::vector<VecC> vecs;
    for (int k : cand) vecs.push_back(sys.right.col(k).head(nd));
    if (g == 0) {
      for (std::size_t c = 0; c < cand.size(); ++c) {
        traj.modes.push_back({static_cast<int>(c), {sys.values[static_cast<std::size_t>(cand[c])]}});
      }
    } else {
      // greedy MAC matching against previous vectors
      std::vector<std::tuple<double, int, int>> scores;
      for (std::size_t a = 0; a < traj.modes.size(); ++a)
        for (std::size_t b = 0; b < vecs.size(); ++b)
          scores.emplace_back(detail::mac(prevVecs[0].col(static_cast<int>(a)), vecs[b]), static_cast<int>(a), static_cast<int>(b));
      std::sort(scores.begin(), scores.end(), [](auto& x, auto& y) { return std::get<0>(x) > std::get<0>(y); });
      std::vector<int> assign(traj.modes.size(), -1);
      std::vector<bool> used(vecs.size(), false);
      for (auto& [sc, a, b] : scores) {
        if (assign[static_cast<std::size_t>(a)] >= 0 || used[static_cast<std::size_t>(b)]) continue;
        if (sc < opt.macThreshold) {
          std::ostringstream os;
          os << "tracking lost for mode " << a << " at P=" << P << " (MAC " << sc << ")";
          traj.warnings.push_back(os.str());
        }
        assign[static_cast<std::size_t>(a)] = b;
        used[static_cast<std::size_t>(b)] = true;
      }
      for (std::size_t a = 0; a < traj.modes.size(); ++a) {
        const int b = assign[a];
        traj.modes[a].values.push_back(b >= 0 ? sys.values[static_cast<std::size_t>(cand[static_cast<std::size_t>(b)])]
                                              : cplx(std::nan(""), std::nan("")));
      }
      // keep vector order aligned with mode ids
      std::vector<VecC> ordered(traj.modes.size());
      for (std::size_t a = 0; a < traj.modes.size(); ++a)
        ordered[a] = assign[a] >= 0 ? vecs[static_cast<std::size_t>(assign[a])] : VecC(prevVecs[0].col(static_cast<int>(a)));
      vecs = ordered;
    }
    MatC V(nd, static_cast<int>(vecs.size()));
    for (std::size_t c = 0; c < vecs.size(); ++c) V.col(static_cast<int>(c)) = vecs[c];
    prevVecs.assign(1, V);
  }

  auto unstableAt = [&](double P) { return detail::isUnstable(pencil_eigenvalues(factory(P)), opt.stabilityTol); };
  for (int g = 0; g + 1 < nPoints; ++g) {
    if (!detail::isUnstable(allValues[static_cast<std::size_t>(g)], opt.stabilityTol) &&
        detail::isUnstable(allValues[static_cast<std::size_t>(g + 1)], opt.stabilityTol)) {
      traj.PH = detail::bisect(unstableAt, traj.grid[static_cast<std::size_t>(g)], traj.grid[static_cast<std::size_t>(g + 1)],
                               opt.bisectionTol);
      break;
    }
  }
  if (traj.PH) {
    // divergence: the leading unstable oscillatory mode turns real
    auto realAt = [&](double P) {
      const auto vals = pencil_eigenvalues(factory(P));
      const cplx lead = detail::leadingOscillatory(vals);
      double maxRe = -std::numeric_limits<double>::infinity();
      for (cplx l : vals) maxRe = std::max(maxRe, l.real());
      // leading mode is real when no oscillatory mode carries the largest real part
      return lead.real() < maxRe - 1e-12 * std::max(1.0, std::abs(maxRe)) ||
             std::abs(lead.imag()) <= 1e-9 * std::max(1.0, std::abs(lead));
    };
    double last = *traj.PH;
    bool lastReal = false;
    for (int g = 0; g < nPoints; ++g) {
      const double P = traj.grid[static_cast<std::size_t>(g)];
      if (P <= *traj.PH) continue;
      const bool r = realAt(P);
      if (r && !lastReal) {
        traj.Pd = detail::bisect(realAt, last, P, opt.bisectionTol);
        break;
      }
      last = P;
      lastReal = r;
    }
  }
  return traj;
}

struct ExceptionalPoint {
  double P = 0.0;
  double relativeGap = 0.0;
  cplx lambda;
  int modeA = 0, modeB = 0;
};

/// Golden-section refinement of the minimal gap |lambda_a - lambda_b| between
/// tracked modes; an EP is declared when the relative gap is below tolerance.
inline std::optional<ExceptionalPoint> detect_exceptional_point(const EigenTrajectory& traj, const PencilFactory& factory,
                                                                const SweepOptions& opt = {}) {
  const int nm = static_cast<int>(traj.modes.size());
  const int ng = static_cast<int>(traj.grid.size());
  double bestGap = std::numeric_limits<double>::infinity();
  int ba = -1, bb = -1, bg = -1;
  for (int a = 0; a < nm; ++a)
    for (int b = a + 1; b < nm; ++b)
      for (int g = 0; g < ng; ++g) {
        const cplx va = traj.modes[static_cast<std::size_t>(a)].values[static_cast<std::size_t>(g)];
        const cplx vb = traj.modes[static_cast<std::size_t>(b)].values[static_cast<std::size_t>(g)];
        if (std::isnan(va.real()) || std::isnan(vb.real())) continue;
        if (va.imag() <= 1e-9 || vb.imag() <= 1e-9) continue;
        const double gap = std::abs(va - vb) / std::max(1e-300, std::abs(va));
        if (gap < bestGap) {
          bestGap = gap;
          ba = a;
          bb = b;
          bg = g;
        }
      }
  if (bg < 0) return std::nullopt;
  // gap function: distance between the two closest oscillatory eigenvalues near the tracked value
  const cplx ref = traj.modes[static_cast<std::size_t>(ba)].values[static_cast<std::size_t>(bg)];
  auto gapAt = [&](double P, cplx* where) {
    auto vals = pencil_eigenvalues(factory(P));
    std::vector<cplx> osc;
    for (cplx l : vals)
      if (l.imag() > 1e-9 * std::max(1.0, std::abs(l))) osc.push_back(l);
    std::sort(osc.begin(), osc.end(), [&](cplx x, cplx y) { return std::abs(x - ref) < std::abs(y - ref); });
    if (osc.size() < 2) return std::numeric_limits<double>::infinity();
    if (where) *where = 0.5 * (osc[0] + osc[1]);
    return std::abs(osc[0] - osc[1]) / std::max(1e-300, std::abs(osc[0]));
  };
  double lo = traj.grid[static_cast<std::size_t>(std::max(bg - 1, 0))];
  double hi = traj.grid[static_cast<std::size_t>(std::min(bg + 1, ng - 1))];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = gapAt(x1, nullptr), f2 = gapAt(x2, nullptr);
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = gapAt(x1, nullptr);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = gapAt(x2, nullptr);
    }
  }
  ExceptionalPoint ep;
  ep.P = 0.5 * (lo + hi);
  ep.relativeGap = gapAt(ep.P, &ep.lambda);
  ep.modeA = ba;
  ep.modeB = bb;
  if (ep.relativeGap >= opt.epGapTol) return std::nullopt;
  return ep;
}

/// Sweep plus EP detection, filling P_c and the coalescence frequency.
inline EigenTrajectory analyse_stability(const PencilFactory& factory, double pMin, double pMax, int nPoints,
                                         const SweepOptions& opt = {}) {
  EigenTrajectory t = eigen_sweep(factory, pMin, pMax, nPoints, opt);
  if (auto ep = detect_exceptional_point(t, factory, opt)) {
    t.Pc = ep->P;
    t.omegaC = std::abs(ep->lambda.imag());
  }
  return t;
}

}  // namespace hopfrom
