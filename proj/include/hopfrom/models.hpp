#pragma once
// Benchmark systems: second-order mechanical models and first-order quadratic DAEs.

#include <hopfrom/polytensor.hpp>

#include <Eigen/LU>

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopfrom {

/// Coefficients of a polynomial displacement field, filled one monomial at a time.
/// nonlinear(id) returns the order-|alpha| coefficient of
/// f(U0 + U(z)) - f(U0) - f'(U0) U(z) using only coefficients already set.
class ForceSeries {
 public:
  virtual ~ForceSeries() = default;
  virtual void set(int id, const VecC& coeff) = 0;
  virtual VecC nonlinear(int id) = 0;
};

/// Geometric nonlinearity f(U) = G(U,U) + H(U,U,U) of a second-order model.
class NonlinearForce {
 public:
  virtual ~NonlinearForce() = default;
  virtual int dim() const = 0;
  virtual VecR quadratic(const VecR& a, const VecR& b) const = 0;
  virtual VecR cubic(const VecR& a, const VecR& b, const VecR& c) const = 0;
  virtual VecR force(const VecR& U) const { return quadratic(U, U) + cubic(U, U, U); }
  virtual MatR jacobian(const VecR& U) const = 0;
  virtual std::unique_ptr<ForceSeries> series(const MonomialTable& table, const VecR& U0) const = 0;
};

/// Series of the nonlinear part of sparse G/H forms expanded about U0.
class SparseForceSeries final : public ForceSeries {
 public:
  SparseForceSeries(const MonomialTable& table, const SparseBilinearForm<double>& G, const SparseTrilinearForm<double>& H,
                    const VecR& U0)
      : table_(&table), splits_(table), H_(H), n_(G.dimOut > 0 ? G.dimOut : H.dim) {
    Geff_ = G;
    if (Geff_.dimOut == 0) Geff_ = SparseBilinearForm<double>(n_);
    for (const auto& e : H.entries) {
      if (U0(e.i) != 0.0) Geff_.add(e.p, e.j, e.k, e.value * U0(e.i));
      if (U0(e.j) != 0.0) Geff_.add(e.p, e.i, e.k, e.value * U0(e.j));
      if (U0(e.k) != 0.0) Geff_.add(e.p, e.i, e.j, e.value * U0(e.k));
    }
    for (const auto& e : H.entries) pairSlot(e.j, e.k);
    coeffs_.assign(static_cast<std::size_t>(table.size()), VecC::Zero(n_));
    pairs_.assign(pairIndex_.size(), std::vector<cplx>(static_cast<std::size_t>(table.size()), cplx(0)));
    pairDone_.assign(static_cast<std::size_t>(table.size()), false);
  }

  void set(int id, const VecC& coeff) override { coeffs_[static_cast<std::size_t>(id)] = coeff; }

  VecC nonlinear(int id) override {
    const auto& sp = splits_.splits(id);
    VecC out = VecC::Zero(n_);
    for (const auto& e : Geff_.entries) {
      cplx s = 0;
      for (auto [b, c] : sp) s += coef(b, e.i) * coef(c, e.j);
      out(e.p) += e.value * s;
    }
    if (!H_.empty()) {
      for (auto [b, c] : sp) ensurePairs(c);
      for (const auto& e : H_.entries) {
        const auto& pj = pairs_[static_cast<std::size_t>(pairSlotConst(e.j, e.k))];
        cplx s = 0;
        for (auto [b, c] : sp) s += coef(b, e.i) * pj[static_cast<std::size_t>(c)];
        out(e.p) += e.value * s;
      }
    }
    return out;
  }

 private:
  cplx coef(int id, int i) const { return coeffs_[static_cast<std::size_t>(id)](i); }

  int pairSlot(int j, int k) {
    for (std::size_t s = 0; s < pairIndex_.size(); ++s)
      if (pairIndex_[s] == std::make_pair(j, k)) return static_cast<int>(s);
    pairIndex_.emplace_back(j, k);
    return static_cast<int>(pairIndex_.size() - 1);
  }
  int pairSlotConst(int j, int k) const {
    for (std::size_t s = 0; s < pairIndex_.size(); ++s)
      if (pairIndex_[s] == std::make_pair(j, k)) return static_cast<int>(s);
    throw std::logic_error("SparseForceSeries: missing pair");
  }

  // Product series U_j U_k at monomial id; valid once all its factors are set.
  void ensurePairs(int id) {
    if (pairDone_[static_cast<std::size_t>(id)]) return;
    const auto& sp = splits_.splits(id);
    for (std::size_t s = 0; s < pairIndex_.size(); ++s) {
      auto [j, k] = pairIndex_[s];
      cplx v = 0;
      for (auto [b, c] : sp) v += coef(b, j) * coef(c, k);
      pairs_[s][static_cast<std::size_t>(id)] = v;
    }
    pairDone_[static_cast<std::size_t>(id)] = true;
  }

  const MonomialTable* table_;
  SplitCache splits_;
  SparseBilinearForm<double> Geff_;
  SparseTrilinearForm<double> H_;
  int n_;
  std::vector<VecC> coeffs_;
  std::vector<std::pair<int, int>> pairIndex_;
  std::vector<std::vector<cplx>> pairs_;
  std::vector<bool> pairDone_;
};

/// G and H stored as coordinate lists.
class SparseNonlinearForce final : public NonlinearForce {
 public:
  SparseNonlinearForce(SparseBilinearForm<double> G, SparseTrilinearForm<double> H) : G_(std::move(G)), H_(std::move(H)) {
    n_ = G_.dimOut > 0 ? G_.dimOut : H_.dim;
    if (G_.dimOut == 0) G_ = SparseBilinearForm<double>(n_);
    if (H_.dim == 0) H_ = SparseTrilinearForm<double>(n_);
  }
  int dim() const override { return n_; }
  VecR quadratic(const VecR& a, const VecR& b) const override { return apply_bilinear(G_, a, b); }
  VecR cubic(const VecR& a, const VecR& b, const VecR& c) const override { return apply_trilinear(H_, a, b, c); }
  MatR jacobian(const VecR& U) const override { return bilinear_jacobian(G_, U) + trilinear_jacobian(H_, U); }
  std::unique_ptr<ForceSeries> series(const MonomialTable& table, const VecR& U0) const override {
    return std::make_unique<SparseForceSeries>(table, G_, H_, U0);
  }
  const SparseBilinearForm<double>& G() const { return G_; }
  const SparseTrilinearForm<double>& H() const { return H_; }

 private:
  SparseBilinearForm<double> G_;
  SparseTrilinearForm<double> H_;
  int n_ = 0;
};

/// A cubic force term coefficient * (direction . U)^3 acting on one row,
/// optionally multiplied by the absolute load parameter.
struct CubicTerm {
  int row = 0;
  VecR direction;
  double coefficient = 0.0;
  bool parametric = false;
};

/// M U'' + C U' + f_int(U) - P (R0 + Ru U) + P h(U) = 0, with
/// f_int(U) = K U + G(U,U) + H(U,U,U) and h the load-proportional cubic.
struct SecondOrderModel {
  std::string name;
  int nDof = 0;
  MatR M, C, K;
  std::shared_ptr<const NonlinearForce> nonlinear;
  std::vector<CubicTerm> cubicTerms;  // analytic form of the cubic forces (lumped models)
  SparseTrilinearForm<double> paramCubic;  // h, empty for the FE model
  VecR R0;
  MatR Ru;
  double p0 = 0.0;
  VecR U0;
  std::vector<std::string> dofLabels;

  bool hasParametricCubic() const { return !paramCubic.empty(); }

  VecR internalForce(const VecR& U) const {
    VecR f = K * U;
    if (nonlinear) f += nonlinear->force(U);
    return f;
  }

  /// Static part of the equation of motion at absolute load P.
  VecR staticResidual(const VecR& U, double P) const {
    VecR r = internalForce(U) - P * (R0 + Ru * U);
    if (hasParametricCubic()) r += P * apply_trilinear(paramCubic, U, U, U);
    return r;
  }

  MatR staticTangent(const VecR& U, double P) const {
    MatR J = K - P * Ru;
    if (nonlinear) J += nonlinear->jacobian(U);
    if (hasParametricCubic()) J += P * trilinear_jacobian(paramCubic, U);
    return J;
  }

  /// Tangent stiffness at the expansion point (U0, p0).
  MatR Kt() const { return staticTangent(U0, p0); }
  /// Load vector multiplying the parameter increment: d/dP of P (R0 + Ru U) at U0.
  VecR Rt() const { return R0 + Ru * U0; }

  /// G_t(a,b) = G(a,b) + H(U0,a,b) + H(a,U0,b) + H(a,b,U0).
  VecR Gt(const VecR& a, const VecR& b) const {
    if (!nonlinear) return VecR::Zero(nDof);
    return nonlinear->quadratic(a, b) + nonlinear->cubic(U0, a, b) + nonlinear->cubic(a, U0, b) + nonlinear->cubic(a, b, U0);
  }
};

/// B y' = A y + Q1(y,y) + Q2(y,P) + q3 P^2 in absolute variables; the engine
/// expands about (y0, mu0).
struct FirstOrderDAE {
  std::string name;
  int D = 0;
  MatR B, A;
  SparseBilinearForm<double> Q1;  // D x D x D
  SparseBilinearForm<double> Q2;  // D x D x 1
  VecR q3;                        // Q3(a,b) = a b q3
  VecR y0;
  double mu0 = 0.0;
  int nDisplacement = 0;  // y = [U; V; auxiliaries]
  std::vector<std::string> stateLabels;

  VecR residual(const VecR& y, double P) const {
    VecR r = A * y + apply_bilinear(Q1, y, y);
    if (!Q2.empty()) r += apply_bilinear(Q2, y, VecR::Constant(1, P));
    if (q3.size() == D) r += P * P * q3;
    return r;
  }

  MatR jacobian(const VecR& y, double P) const {
    MatR J = A + bilinear_jacobian(Q1, y);
    if (!Q2.empty()) J += apply_bilinear_matrix(Q2, MatR::Identity(D, D), VecR::Constant(1, P));
    return J;
  }

  /// A_t = A + Q1(y0,I) + Q1(I,y0) + Q2(I,mu0).
  MatR At() const { return jacobian(y0, mu0); }

  /// A_0 = Q2(y0,1) + Q3(mu0,1) + Q3(1,mu0).
  VecR A0() const {
    VecR a = VecR::Zero(D);
    if (!Q2.empty()) a += apply_bilinear(Q2, y0, VecR::Constant(1, 1.0));
    if (q3.size() == D) a += 2.0 * mu0 * q3;
    return a;
  }

  /// Q(y,y) + Q2(y,mu) + Q3(mu,mu) in perturbation variables.
  VecR quadraticPart(const VecR& y, double mu) const {
    VecR r = apply_bilinear(Q1, y, y);
    if (!Q2.empty()) r += apply_bilinear(Q2, y, VecR::Constant(1, mu));
    if (q3.size() == D) r += mu * mu * q3;
    return r;
  }
};

struct ZieglerParams {
  std::vector<double> m, k;
  double L = 1.0;
  double xi_m = 0.0, xi_k = 0.0;

  static ZieglerParams unit2(double xm = 0.0, double xk = 0.0) { return {{1.0, 1.0}, {1.0, 1.0}, 1.0, xm, xk}; }
  /// k1 = delta^2 k2, m1 = gamma^2 m2, k2 = m2 = 1.
  static ZieglerParams tuned2(double xm = 0.0, double xk = 0.0) {
    return {{25.0 / 4.0, 1.0}, {41.0 / 4.0, 1.0}, 1.0, xm, xk};
  }
  /// k1 = delta^2 k2, k2 = delta^2 k3, m1 = gamma^2 m2, m2 = gamma^2 m3, k3 = m3 = 1.
  static ZieglerParams tuned3(double xm = 0.0, double xk = 0.0) {
    const double g2 = 25.0 / 4.0, d2 = 41.0 / 4.0;
    return {{g2 * g2, g2, 1.0}, {d2 * d2, d2, 1.0}, 1.0, xm, xk};
  }
  static ZieglerParams unit3(double xm = 0.0, double xk = 0.0) { return {{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, 1.0, xm, xk}; }
};

namespace detail {

inline void checkZiegler(const ZieglerParams& p, std::size_t n) {
  if (p.m.size() != n || p.k.size() != n) throw std::invalid_argument("ziegler: wrong number of masses/stiffnesses");
  for (double v : p.m)
    if (!(v > 0)) throw std::invalid_argument("ziegler: masses must be positive");
  for (double v : p.k)
    if (!(v > 0)) throw std::invalid_argument("ziegler: stiffnesses must be positive");
  if (!(p.L > 0)) throw std::invalid_argument("ziegler: bar length must be positive");
  if (p.xi_m < 0 || p.xi_k < 0) throw std::invalid_argument("ziegler: damping ratios must be non-negative");
}

inline SparseTrilinearForm<double> cubicFromTerms(int n, const std::vector<CubicTerm>& terms, bool parametric) {
  SparseTrilinearForm<double> H(n);
  for (const auto& t : terms) {
    if (t.parametric != parametric) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double v = t.coefficient * t.direction(i) * t.direction(j) * t.direction(k);
          if (v != 0.0) H.add(t.row, i, j, k, v);
        }
  }
  return H;
}

inline SecondOrderModel finishZiegler(std::string name, MatR M, MatR K, MatR Kg1, std::vector<CubicTerm> terms,
                                      const ZieglerParams& p) {
  SecondOrderModel m;
  m.name = std::move(name);
  m.nDof = static_cast<int>(M.rows());
  m.M = std::move(M);
  m.K = std::move(K);
  m.C = 2.0 * (p.xi_k * m.K + p.xi_m * m.M);
  m.Ru = -Kg1;
  m.R0 = VecR::Zero(m.nDof);
  m.cubicTerms = std::move(terms);
  m.paramCubic = cubicFromTerms(m.nDof, m.cubicTerms, true);
  m.U0 = VecR::Zero(m.nDof);
  for (int i = 0; i < m.nDof; ++i) m.dofLabels.push_back("theta" + std::to_string(i + 1));
  return m;
}

}  // namespace detail

/// 2-DOF Ziegler pendulum; the follower load enters through Ru = -Kg/P and the
/// load-proportional cubic (P L / 6) (theta1 - theta2)^3 on the first row.
inline SecondOrderModel build_ziegler2(const ZieglerParams& p) {
  detail::checkZiegler(p, 2);
  const double L = p.L, m1 = p.m[0], m2 = p.m[1], k1 = p.k[0], k2 = p.k[1];
  MatR M(2, 2), K(2, 2), Kg1(2, 2);
  M << m1 + m2, m2, m2, m2;
  M *= L * L;
  K << k1 + k2, -k2, -k2, k2;
  Kg1 << -1, 1, 0, 0;
  Kg1 *= L;
  VecR d(2);
  d << 1, -1;
  return detail::finishZiegler("ziegler2", M, K, Kg1, {{0, d, L / 6.0, true}}, p);
}

inline SecondOrderModel build_ziegler3(const ZieglerParams& p) {
  detail::checkZiegler(p, 3);
  const double L = p.L;
  const double m1 = p.m[0], m2 = p.m[1], m3 = p.m[2], k1 = p.k[0], k2 = p.k[1], k3 = p.k[2];
  MatR M(3, 3), K(3, 3), Kg1(3, 3);
  M << m1 + m2 + m3, m2 + m3, m3, m2 + m3, m2 + m3, m3, m3, m3, m3;
  M *= L * L;
  K << k1 + k2, -k2, 0, -k2, k2 + k3, -k3, 0, -k3, k3;
  Kg1 << -1, 0, 1, 0, -1, 1, 0, 0, 0;
  Kg1 *= L;
  VecR d13(3), d23(3);
  d13 << 1, 0, -1;
  d23 << 0, 1, -1;
  return detail::finishZiegler("ziegler3", M, K, Kg1, {{0, d13, L / 6.0, true}, {1, d23, L / 6.0, true}}, p);
}

/// Freezes the load-proportional cubic at load P: the result has a fixed cubic
/// force H = P h and keeps the linear follower term.
inline SecondOrderModel freeze_parametric_cubic(const SecondOrderModel& model, double P) {
  SecondOrderModel m = model;
  m.name = model.name + "-frozen";
  for (auto& t : m.cubicTerms)
    if (t.parametric) {
      t.parametric = false;
      t.coefficient *= P;
    }
  m.paramCubic = SparseTrilinearForm<double>(m.nDof);
  m.nonlinear = std::make_shared<SparseNonlinearForce>(SparseBilinearForm<double>(m.nDof),
                                                       detail::cubicFromTerms(m.nDof, m.cubicTerms, false));
  return m;
}

/// Newton with load stepping from zero load to p_target.
inline VecR static_equilibrium(const SecondOrderModel& model, double p_target, int steps = 10, int maxIter = 50) {
  VecR U = VecR::Zero(model.nDof);
  const double scale = std::max(std::abs(p_target) * model.R0.norm(), 0.0);
  const double tol = scale > 0 ? 1e-10 * scale : 1e-12;
  for (int s = 1; s <= steps; ++s) {
    const double P = p_target * s / steps;
    double res = 0;
    int it = 0;
    for (; it < maxIter; ++it) {
      VecR r = model.staticResidual(U, P);
      res = r.norm();
      if (res < (s == steps ? tol : 1e-9 * std::max(1.0, scale))) break;
      Eigen::PartialPivLU<MatR> lu(model.staticTangent(U, P));
      U -= lu.solve(r);
    }
    if (it == maxIter) {
      std::ostringstream os;
      os << "static_equilibrium: Newton diverged at load " << P << " (residual " << res << ")";
      throw std::runtime_error(os.str());
    }
  }
  return U;
}

/// Sets p0 and U0 of a copy of the model.
inline SecondOrderModel at_load(const SecondOrderModel& model, double p0) {
  SecondOrderModel m = model;
  m.p0 = p0;
  m.U0 = (m.R0.norm() == 0.0 && !m.nonlinear) ? VecR::Zero(m.nDof) : static_equilibrium(model, p0);
  return m;
}

/// Quadratic recast of a lumped model with cubic terms coefficient (d.U)^3:
/// w1 = (d.U)^2 for every term, and w2 = P (d.U) for load-proportional terms.
/// State: [U; V; w1...; w2...], B = diag(I, M, 0, 0).
inline FirstOrderDAE recast_to_dae(const SecondOrderModel& model) {
  if (model.hasParametricCubic() && model.cubicTerms.empty())
    throw std::invalid_argument("recast_to_dae: load-proportional cubic without analytic terms");
  if (model.R0.size() == model.nDof && model.R0.norm() != 0.0)
    throw std::invalid_argument("recast_to_dae: parameter-only loads are not representable; use the second-order engine");
  if (model.nonlinear && model.cubicTerms.empty())
    throw std::invalid_argument("recast_to_dae: recast is defined for lumped cubic terms only");
  const int n = model.nDof;
  int nw1 = 0, nw2 = 0;
  for (const auto& t : model.cubicTerms) {
    ++nw1;
    if (t.parametric) ++nw2;
  }
  const int D = 2 * n + nw1 + nw2;
  FirstOrderDAE dae;
  dae.name = model.name + "-recast";
  dae.D = D;
  dae.nDisplacement = n;
  dae.B = MatR::Zero(D, D);
  dae.A = MatR::Zero(D, D);
  dae.Q1 = SparseBilinearForm<double>(D, D, D);
  dae.Q2 = SparseBilinearForm<double>(D, D, 1);
  dae.B.topLeftCorner(n, n).setIdentity();
  dae.B.block(n, n, n, n) = model.M;
  dae.A.block(0, n, n, n).setIdentity();
  dae.A.block(n, 0, n, n) = -model.K;
  dae.A.block(n, n, n, n) = -model.C;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (model.Ru(r, c) != 0.0) dae.Q2.add(n + r, c, 0, model.Ru(r, c));
  int w1 = 2 * n, w2 = 2 * n + nw1;
  for (const auto& t : model.cubicTerms) {
    dae.A(w1, w1) = -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (t.direction(i) * t.direction(j) != 0.0) dae.Q1.add(w1, i, j, t.direction(i) * t.direction(j));
    if (t.parametric) {
      dae.A(w2, w2) = -1.0;
      for (int i = 0; i < n; ++i)
        if (t.direction(i) != 0.0) dae.Q2.add(w2, i, 0, t.direction(i));
      dae.Q1.add(n + t.row, w1, w2, -t.coefficient);
      ++w2;
    } else {
      for (int i = 0; i < n; ++i)
        if (t.direction(i) != 0.0) dae.Q1.add(n + t.row, w1, i, -t.coefficient * t.direction(i));
    }
    ++w1;
  }
  dae.y0 = VecR::Zero(D);
  dae.y0.head(n) = model.U0;
  dae.y0.segment(n, n).setZero();
  w1 = 2 * n;
  w2 = 2 * n + nw1;
  for (const auto& t : model.cubicTerms) {
    const double s = t.direction.dot(model.U0);
    dae.y0(w1++) = s * s;
    if (t.parametric) dae.y0(w2++) = model.p0 * s;
  }
  dae.mu0 = model.p0;
  for (int i = 0; i < n; ++i) dae.stateLabels.push_back(i < static_cast<int>(model.dofLabels.size()) ? model.dofLabels[static_cast<std::size_t>(i)] : "u" + std::to_string(i));
  for (int i = 0; i < n; ++i) dae.stateLabels.push_back("v" + std::to_string(i + 1));
  for (int i = 0; i < nw1; ++i) dae.stateLabels.push_back("w1_" + std::to_string(i + 1));
  for (int i = 0; i < nw2; ++i) dae.stateLabels.push_back("w2_" + std::to_string(i + 1));
  return dae;
}

}  // namespace hopfrom
