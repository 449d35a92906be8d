#pragma once
// Parametrisation of parameter-dependent invariant manifolds: recursive
// solution of the homological equations in complex normal form style.

#include <hopfrom/models.hpp>
#include <hopfrom/polytensor.hpp>
#include <hopfrom/spectral.hpp>

#include <Eigen/LU>

#include <list>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopfrom {

struct ResonanceOptions {
  double rTol = 0.05;     // tolerance on imaginary parts, relative to max(1, |Im lambda_r|)
  bool oneToOne = true;   // two-mode runs classify with the averaged master frequency
};

/// sigma = alpha . diag(Lambda) per monomial and the master indices it is resonant with.
struct ResonanceSet {
  std::vector<cplx> sigma;
  std::vector<std::vector<int>> resonant;
};

/// Imaginary parts used for classification; with the 1:1 rule the two master
/// frequencies of a two-mode run are replaced by their average.
inline std::vector<double> classification_frequencies(const std::vector<cplx>& lambda, const ResonanceOptions& opt) {
  std::vector<double> w(lambda.size());
  for (std::size_t k = 0; k < lambda.size(); ++k) w[k] = lambda[k].imag();
  if (opt.oneToOne && lambda.size() == 4) {
    const double avg = 0.5 * (std::abs(w[0]) + std::abs(w[2]));
    for (double& v : w) v = v < 0 ? -avg : avg;
  }
  return w;
}

inline ResonanceSet classify_resonances(const MonomialTable& table, const std::vector<cplx>& lambda,
                                        const ResonanceOptions& opt = {}) {
  const int d = static_cast<int>(lambda.size());
  if (table.numVariables() != d + 1) throw std::invalid_argument("classify_resonances: table must have d+1 variables");
  const auto w = classification_frequencies(lambda, opt);
  ResonanceSet rs;
  rs.sigma.resize(static_cast<std::size_t>(table.size()));
  rs.resonant.resize(static_cast<std::size_t>(table.size()));
  for (int id = 0; id < table.size(); ++id) {
    cplx s = 0;
    double sw = 0;
    for (int k = 0; k < d; ++k) {
      s += static_cast<double>(table.exponent(id, k)) * lambda[static_cast<std::size_t>(k)];
      sw += table.exponent(id, k) * w[static_cast<std::size_t>(k)];
    }
    rs.sigma[static_cast<std::size_t>(id)] = s;
    for (int r = 0; r < d; ++r) {
      const double wr = w[static_cast<std::size_t>(r)];
      if (std::abs(sw - wr) <= opt.rTol * std::max(1.0, std::abs(wr))) rs.resonant[static_cast<std::size_t>(id)].push_back(r);
    }
  }
  return rs;
}

struct ParametrisationROM {
  int d = 0;      // number of master eigenvalues (conjugates included)
  int order = 0;
  MonomialTable table;     // d + 1 variables, the parameter last
  std::vector<VecC> W;     // mapping coefficient per monomial (full state)
  std::vector<VecC> f;     // reduced dynamics per monomial, length d + 1
  Spectrum spectrum;
  ResonanceOptions resonance;
  double mu0 = 0.0;        // absolute parameter at the expansion point
  int stateDim = 0;
  int nDisplacement = 0;
  bool secondOrder = false;
  std::string modelName;
  std::vector<std::string> stateLabels;

  int paramVar() const { return d; }

  int conjugateVariable(int k) const {
    if (k == d) return d;
    return spectrum.conjugate.empty() ? k : spectrum.conjugate[static_cast<std::size_t>(k)];
  }

  /// Coordinates (z, conj z, ..., mu) from real/imaginary parts x = (Re z1, Im z1, Re z2, Im z2, ...).
  VecC fromRealified(const VecR& x, double mu) const {
    if (x.size() != d) throw std::invalid_argument("fromRealified: expected d real coordinates");
    VecC zt(d + 1);
    for (int m = 0; 2 * m < d; ++m) {
      const cplx z(x(2 * m), x(2 * m + 1));
      zt(2 * m) = z;
      zt(conjugateVariable(2 * m)) = std::conj(z);
    }
    zt(d) = mu;
    return zt;
  }

  VecC mapping(const VecC& zt) const { return polynomial_eval(table, W, zt); }

  VecC reducedDynamics(const VecC& zt) const { return polynomial_eval(table, f, zt); }

  /// d x d Jacobian of the reduced dynamics with respect to z at fixed mu.
  MatC reducedJacobian(const VecC& zt) const {
    const auto vals = table.monomialValues<cplx>(zt);
    MatC J = MatC::Zero(d, d);
    for (int id = 0; id < table.size(); ++id) {
      const VecC& fa = f[static_cast<std::size_t>(id)];
      if (fa.head(d).squaredNorm() == 0.0) continue;
      for (int k = 0; k < d; ++k) {
        const int e = table.exponent(id, k);
        if (e == 0) continue;
        const int low = table.lowered(id, k);
        const cplx m = static_cast<double>(e) * (low == MonomialTable::kConstant ? cplx(1) : vals[static_cast<std::size_t>(low)]);
        J.col(k) += m * fa.head(d);
      }
    }
    return J;
  }

  /// Directional derivative (dW/dz) v, used for the invariance residual.
  VecC mappingDerivative(const VecC& zt, const VecC& dz) const {
    const auto vals = table.monomialValues<cplx>(zt);
    VecC out = VecC::Zero(stateDim);
    for (int id = 0; id < table.size(); ++id) {
      cplx c = 0;
      for (int k = 0; k < d; ++k) {
        const int e = table.exponent(id, k);
        if (e == 0 || dz(k) == cplx(0)) continue;
        const int low = table.lowered(id, k);
        c += static_cast<double>(e) * (low == MonomialTable::kConstant ? cplx(1) : vals[static_cast<std::size_t>(low)]) * dz(k);
      }
      if (c != cplx(0)) out += c * W[static_cast<std::size_t>(id)];
    }
    return out;
  }

  /// Exponent vector with every master variable swapped for its conjugate.
  int conjugateMonomial(int id) const {
    std::vector<int> e(static_cast<std::size_t>(d + 1));
    for (int k = 0; k <= d; ++k) e[static_cast<std::size_t>(conjugateVariable(k))] = table.exponent(id, k);
    return table.find(e);
  }

  /// max |W(conj alpha) - conj W(alpha)| relative to the largest coefficient, same for f.
  double conjugateAsymmetry() const {
    double num = 0, scale = 0;
    for (int id = 0; id < table.size(); ++id) {
      const int c = conjugateMonomial(id);
      const VecC& a = W[static_cast<std::size_t>(id)];
      const VecC& b = W[static_cast<std::size_t>(c)];
      num = std::max(num, (b - a.conjugate()).cwiseAbs().maxCoeff());
      scale = std::max(scale, a.cwiseAbs().maxCoeff());
      const VecC& fa = f[static_cast<std::size_t>(id)];
      const VecC& fb = f[static_cast<std::size_t>(c)];
      for (int s = 0; s < d; ++s) {
        num = std::max(num, std::abs(fb(conjugateVariable(s)) - std::conj(fa(s))));
        scale = std::max(scale, std::abs(fa(s)));
      }
    }
    return scale > 0 ? num / scale : 0.0;
  }
};

struct BuildOptions {
  int order = 3;
  ResonanceOptions resonance;
  std::size_t cacheBytes = std::size_t(512) << 20;  // bound on cached bordered factorizations
};

namespace detail {

inline std::string describeMonomial(const MonomialTable& t, int id) {
  std::ostringstream os;
  os << "(";
  for (int k = 0; k < t.numVariables(); ++k) os << (k ? "," : "") << t.exponent(id, k);
  os << ")";
  return os.str();
}

/// Bordered factorizations keyed by the parameter-free part of the exponent
/// (sigma and the resonant set depend only on it), with LRU eviction.
class BorderedCache {
 public:
  explicit BorderedCache(std::size_t budget) : budget_(budget) {}

  const Eigen::PartialPivLU<MatC>* find(const std::vector<int>& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.pos);
    return it->second.lu.get();
  }

  const Eigen::PartialPivLU<MatC>* insert(const std::vector<int>& key, std::unique_ptr<Eigen::PartialPivLU<MatC>> lu) {
    const std::size_t bytes = static_cast<std::size_t>(lu->matrixLU().size()) * sizeof(cplx);
    while (!order_.empty() && used_ + bytes > budget_) {
      auto victim = map_.find(order_.back());
      used_ -= victim->second.bytes;
      map_.erase(victim);
      order_.pop_back();
    }
    ++factorizations;
    order_.push_front(key);
    auto* raw = lu.get();
    map_[key] = Entry{std::move(lu), order_.begin(), bytes};
    used_ += bytes;
    return raw;
  }

  int factorizations = 0;

 private:
  struct Entry {
    std::unique_ptr<Eigen::PartialPivLU<MatC>> lu;
    std::list<std::vector<int>>::iterator pos;
    std::size_t bytes = 0;
  };
  std::size_t budget_;
  std::size_t used_ = 0;
  std::map<std::vector<int>, Entry> map_;
  std::list<std::vector<int>> order_;
};

inline void checkFactorization(const Eigen::PartialPivLU<MatC>& lu, const ParametrisationROM& rom, int id, cplx sigma) {
  if (lu.rcond() > 1e-14 && std::isfinite(lu.rcond())) return;
  std::ostringstream os;
  cplx nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (cplx l : rom.spectrum.lambda)
    if (std::abs(l - sigma) < best) {
      best = std::abs(l - sigma);
      nearest = l;
    }
  os << "homological equation singular at monomial " << describeMonomial(rom.table, id) << ": sigma = " << sigma
     << ", nearest master eigenvalue " << nearest << " (unflagged resonance?)";
  throw std::runtime_error(os.str());
}

/// Order-one coefficients: master eigenvectors with f = Lambda, and the parameter direction with f = 0.
inline void initialiseOrderOne(ParametrisationROM& rom) {
  const int d = rom.d;
  const Spectrum& s = rom.spectrum;
  rom.W.assign(static_cast<std::size_t>(rom.table.size()), VecC::Zero(rom.stateDim));
  rom.f.assign(static_cast<std::size_t>(rom.table.size()), VecC::Zero(d + 1));
  for (int k = 0; k < d; ++k) {
    std::vector<int> e(static_cast<std::size_t>(d + 1), 0);
    e[static_cast<std::size_t>(k)] = 1;
    const int id = rom.table.find(e);
    rom.W[static_cast<std::size_t>(id)] = s.Y.col(k);
    rom.f[static_cast<std::size_t>(id)].head(d) = s.Lambda.col(k);
  }
  std::vector<int> e(static_cast<std::size_t>(d + 1), 0);
  e[static_cast<std::size_t>(d)] = 1;
  rom.W[static_cast<std::size_t>(rom.table.find(e))] = s.paramVector;
}

/// Known part of (grad W) f at monomial id: products of order >= 2 mapping and
/// reduced-dynamics coefficients, plus the Jordan off-diagonal contribution.
inline VecC knownGradientTerms(const ParametrisationROM& rom, int id, const std::vector<int>& nonzeroF) {
  const int d = rom.d, n = d + 1;
  const MonomialTable& t = rom.table;
  const int p = t.orderOf(id);
  VecC L = VecC::Zero(rom.stateDim);
  std::vector<int> beta(static_cast<std::size_t>(n));
  for (int g : nonzeroF) {
    const int pg = t.orderOf(g);
    if (pg < 2 || pg > p - 1) continue;
    const VecC& fg = rom.f[static_cast<std::size_t>(g)];
    for (int s = 0; s < d; ++s) {
      if (fg(s) == cplx(0)) continue;
      bool ok = true;
      for (int k = 0; k < n && ok; ++k) {
        beta[static_cast<std::size_t>(k)] = t.exponent(id, k) - t.exponent(g, k) + (k == s ? 1 : 0);
        ok = beta[static_cast<std::size_t>(k)] >= 0;
      }
      if (!ok || beta[static_cast<std::size_t>(s)] == 0) continue;
      const int b = t.find(beta);
      L += static_cast<double>(beta[static_cast<std::size_t>(s)]) * fg(s) * rom.W[static_cast<std::size_t>(b)];
    }
  }
  for (const auto& jp : rom.spectrum.jordanPairs) {
    const cplx tau = rom.spectrum.Lambda(jp.i, jp.j);
    if (t.exponent(id, jp.j) == 0 || tau == cplx(0)) continue;
    for (int k = 0; k < n; ++k) beta[static_cast<std::size_t>(k)] = t.exponent(id, k);
    ++beta[static_cast<std::size_t>(jp.i)];
    --beta[static_cast<std::size_t>(jp.j)];
    const int b = t.find(beta);
    if (b >= id) throw std::logic_error("Jordan cross term refers to a monomial not yet solved");
    L += static_cast<double>(beta[static_cast<std::size_t>(jp.i)]) * tau * rom.W[static_cast<std::size_t>(b)];
  }
  return L;
}

inline std::vector<int> parameterFreeKey(const MonomialTable& t, int id, int d) {
  std::vector<int> key(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) key[static_cast<std::size_t>(k)] = t.exponent(id, k);
  return key;
}

inline void checkSpectrum(const Spectrum& s, int stateDim) {
  if (s.d < 1 || s.Y.rows() != stateDim || s.X.rows() != stateDim || s.Y.cols() != s.d)
    throw std::invalid_argument("dpim: spectrum does not match the system dimension");
  if (s.paramVector.size() != stateDim) throw std::invalid_argument("dpim: spectrum lacks the parameter direction");
}

}  // namespace detail

/// Generic engine for B y' = A y + Q1(y,y) + Q2(y,mu) + q3 mu^2 expanded about (y0, mu0).
inline ParametrisationROM build_rom_firstorder(const FirstOrderDAE& dae, const Spectrum& spectrum, const BuildOptions& opt) {
  if (opt.order < 1) throw std::invalid_argument("build_rom_firstorder: order must be >= 1");
  detail::checkSpectrum(spectrum, dae.D);
  ParametrisationROM rom;
  rom.d = spectrum.d;
  rom.order = opt.order;
  rom.table = MonomialTable(rom.d + 1, opt.order);
  rom.spectrum = spectrum;
  rom.resonance = opt.resonance;
  rom.mu0 = dae.mu0;
  rom.stateDim = dae.D;
  rom.nDisplacement = dae.nDisplacement;
  rom.modelName = dae.name;
  rom.stateLabels = dae.stateLabels;
  detail::initialiseOrderOne(rom);

  const int d = rom.d, D = dae.D;
  const MonomialTable& t = rom.table;
  const ResonanceSet rs = classify_resonances(t, spectrum.lambda, opt.resonance);
  const MatC Bc = dae.B.cast<cplx>(), Atc = dae.At().cast<cplx>();
  const MatC BY = Bc * spectrum.Y;
  const MatC XB = spectrum.X.adjoint() * Bc;
  const VecC one = VecC::Ones(1);
  SplitCache splits(t);
  detail::BorderedCache cache(opt.cacheBytes);
  std::vector<int> nonzeroF;

  for (int p = 2; p <= opt.order; ++p) {
    for (int id = t.begin(p); id < t.end(p); ++id) {
      VecC rhs = VecC::Zero(D);
      const auto& sp = splits.splits(id);
      for (const auto& e : dae.Q1.entries) {
        cplx s = 0;
        for (auto [b, c] : sp) s += rom.W[static_cast<std::size_t>(b)](e.i) * rom.W[static_cast<std::size_t>(c)](e.j);
        rhs(e.p) += e.value * s;
      }
      if (t.exponent(id, d) > 0) {
        const int low = t.lowered(id, d);
        if (low >= 0 && !dae.Q2.empty()) rhs += apply_bilinear(dae.Q2, rom.W[static_cast<std::size_t>(low)], one);
        if (p == 2 && t.exponent(id, d) == 2 && dae.q3.size() == D) rhs += dae.q3.cast<cplx>();
      }
      rhs -= Bc * detail::knownGradientTerms(rom, id, nonzeroF);

      const cplx sigma = rs.sigma[static_cast<std::size_t>(id)];
      const auto& R = rs.resonant[static_cast<std::size_t>(id)];
      const int nr = static_cast<int>(R.size());
      const auto key = detail::parameterFreeKey(t, id, d);
      const Eigen::PartialPivLU<MatC>* lu = cache.find(key);
      if (!lu) {
        MatC K = MatC::Zero(D + nr, D + nr);
        K.topLeftCorner(D, D) = sigma * Bc - Atc;
        for (int q = 0; q < nr; ++q) {
          K.block(0, D + q, D, 1) = BY.col(R[static_cast<std::size_t>(q)]);
          K.block(D + q, 0, 1, D) = XB.row(R[static_cast<std::size_t>(q)]);
        }
        auto fresh = std::make_unique<Eigen::PartialPivLU<MatC>>(K);
        detail::checkFactorization(*fresh, rom, id, sigma);
        lu = cache.insert(key, std::move(fresh));
      }
      VecC full = VecC::Zero(D + nr);
      full.head(D) = rhs;
      VecC sol = lu->solve(full);
      rom.W[static_cast<std::size_t>(id)] = sol.head(D);
      bool any = false;
      for (int q = 0; q < nr; ++q) {
        rom.f[static_cast<std::size_t>(id)](R[static_cast<std::size_t>(q)]) = sol(D + q);
        any = any || sol(D + q) != cplx(0);
      }
      if (any) nonzeroF.push_back(id);
    }
  }
  return rom;
}

/// Displacement-sized engine for M U'' + C U' + K_t U = p R_t + p R_u U - G_t(U,U) - H(U,U,U);
/// velocity coefficients are recovered from the kinematic relation.
inline ParametrisationROM build_rom_secondorder(const SecondOrderModel& model, const Spectrum& spectrum, const BuildOptions& opt) {
  if (opt.order < 1) throw std::invalid_argument("build_rom_secondorder: order must be >= 1");
  if (model.hasParametricCubic())
    throw std::invalid_argument("build_rom_secondorder: load-proportional cubic forces need the recast engine");
  if (!spectrum.secondOrder) throw std::invalid_argument("build_rom_secondorder: spectrum must come from the second-order pencil");
  const int n = model.nDof;
  detail::checkSpectrum(spectrum, 2 * n);
  ParametrisationROM rom;
  rom.d = spectrum.d;
  rom.order = opt.order;
  rom.table = MonomialTable(rom.d + 1, opt.order);
  rom.spectrum = spectrum;
  rom.resonance = opt.resonance;
  rom.mu0 = model.p0;
  rom.stateDim = 2 * n;
  rom.nDisplacement = n;
  rom.secondOrder = true;
  rom.modelName = model.name;
  for (int i = 0; i < n; ++i)
    rom.stateLabels.push_back(i < static_cast<int>(model.dofLabels.size()) ? model.dofLabels[static_cast<std::size_t>(i)]
                                                                            : "u" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i) rom.stateLabels.push_back("v" + std::to_string(i + 1));
  detail::initialiseOrderOne(rom);

  const int d = rom.d;
  const MonomialTable& t = rom.table;
  const ResonanceSet rs = classify_resonances(t, spectrum.lambda, opt.resonance);
  const MatC M = model.M.cast<cplx>(), C = model.C.cast<cplx>(), Kt = model.Kt().cast<cplx>(), Ru = model.Ru.cast<cplx>();
  const MatC YU = spectrum.Y.topRows(n), YV = spectrum.Y.bottomRows(n);
  const MatC XUM = spectrum.X.topRows(n).adjoint() * M;     // X^U* M
  const MatC XVM = spectrum.X.bottomRows(n).adjoint() * M;  // X^V* M
  const MatC MYV = M * YV, CYU = C * YU, MYU = M * YU;
  const MatC XVMYU = XVM * YU;

  std::unique_ptr<ForceSeries> series;
  if (model.nonlinear) {
    series = model.nonlinear->series(t, model.U0);
    for (int id = 0; id < t.end(1); ++id) series->set(id, rom.W[static_cast<std::size_t>(id)].head(n));
  }
  detail::BorderedCache cache(opt.cacheBytes);
  std::vector<int> nonzeroF;

  for (int p = 2; p <= opt.order; ++p) {
    for (int id = t.begin(p); id < t.end(p); ++id) {
      const VecC L = detail::knownGradientTerms(rom, id, nonzeroF);
      const VecC muVec = -L.head(n);
      VecC nu = -(M * L.tail(n));
      if (series) nu -= series->nonlinear(id);
      if (t.exponent(id, d) > 0) {
        const int low = t.lowered(id, d);
        if (low >= 0) nu += Ru * rom.W[static_cast<std::size_t>(low)].head(n);
      }
      const cplx sigma = rs.sigma[static_cast<std::size_t>(id)];
      const auto& R = rs.resonant[static_cast<std::size_t>(id)];
      const int nr = static_cast<int>(R.size());
      const auto key = detail::parameterFreeKey(t, id, d);
      const Eigen::PartialPivLU<MatC>* lu = cache.find(key);
      if (!lu) {
        MatC K = MatC::Zero(n + nr, n + nr);
        K.topLeftCorner(n, n) = sigma * sigma * M + sigma * C + Kt;
        for (int q = 0; q < nr; ++q) {
          const int r = R[static_cast<std::size_t>(q)];
          K.block(0, n + q, n, 1) = sigma * MYU.col(r) + CYU.col(r) + MYV.col(r);
          K.block(n + q, 0, 1, n) = XUM.row(r) + sigma * XVM.row(r);
          for (int q2 = 0; q2 < nr; ++q2) K(n + q, n + q2) = XVMYU(r, R[static_cast<std::size_t>(q2)]);
        }
        auto fresh = std::make_unique<Eigen::PartialPivLU<MatC>>(K);
        detail::checkFactorization(*fresh, rom, id, sigma);
        lu = cache.insert(key, std::move(fresh));
      }
      VecC full(n + nr);
      full.head(n) = nu + sigma * (M * muVec) + C * muVec;
      for (int q = 0; q < nr; ++q) full(n + q) = (XVM.row(R[static_cast<std::size_t>(q)]) * muVec)(0);
      VecC sol = lu->solve(full);
      VecC U = sol.head(n);
      VecC V = sigma * U - muVec;
      bool any = false;
      for (int q = 0; q < nr; ++q) {
        const int r = R[static_cast<std::size_t>(q)];
        rom.f[static_cast<std::size_t>(id)](r) = sol(n + q);
        V += sol(n + q) * YU.col(r);
        any = any || sol(n + q) != cplx(0);
      }
      rom.W[static_cast<std::size_t>(id)].head(n) = U;
      rom.W[static_cast<std::size_t>(id)].tail(n) = V;
      if (series) series->set(id, U);
      if (any) nonzeroF.push_back(id);
    }
  }
  return rom;
}

/// Norm of B (dW/dz) f - A_t W - A_0 mu - Q1(W,W) - Q2(W,mu) - q3 mu^2 at zt.
inline double invariance_residual(const ParametrisationROM& rom, const FirstOrderDAE& dae, const VecC& zt) {
  const int d = rom.d;
  const VecC W = rom.mapping(zt);
  const VecC f = rom.reducedDynamics(zt);
  const VecC lhs = dae.B.cast<cplx>() * rom.mappingDerivative(zt, f);
  const cplx mu = zt(d);
  VecC rhs = dae.At().cast<cplx>() * W + mu * dae.A0().cast<cplx>() + apply_bilinear(dae.Q1, W, W);
  if (!dae.Q2.empty()) rhs += apply_bilinear(dae.Q2, W, VecC::Constant(1, mu));
  if (dae.q3.size() == dae.D) rhs += mu * mu * dae.q3.cast<cplx>();
  return (lhs - rhs).norm();
}

/// Residual of the kinematic and dynamic rows on the second-order model; zt must be
/// conjugate-consistent with real mu so that the mapped state is real.
inline double invariance_residual(const ParametrisationROM& rom, const SecondOrderModel& model, const VecC& zt) {
  const int n = model.nDof, d = rom.d;
  const VecC W = rom.mapping(zt);
  const VecC dW = rom.mappingDerivative(zt, rom.reducedDynamics(zt));
  const VecR U = W.head(n).real(), V = W.tail(n).real();
  const double mu = zt(d).real();
  VecR kin = dW.head(n).real() - V;
  VecR dyn = model.M * dW.tail(n).real() + model.C * V + model.staticResidual(model.U0 + U, model.p0 + mu);
  return std::sqrt(kin.squaredNorm() + dyn.squaredNorm() + W.imag().squaredNorm());
}

/// Least-squares slope of log residual against log radius for samples
/// r in [rmin, rmax], along a fixed direction of the master plane with mu = r / 2.
template <class Model>
double residual_slope(const ParametrisationROM& rom, const Model& model, double rmin, double rmax, int samples = 9) {
  if (!(rmin > 0) || !(rmax > rmin) || samples < 2) throw std::invalid_argument("residual_slope: bad sampling window");
  VecR dir(rom.d);
  for (int k = 0; k < rom.d; ++k) dir(k) = 0.6 + 0.3 * k * (k % 2 ? -1 : 1);
  dir.normalize();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int s = 0; s < samples; ++s) {
    const double r = rmin * std::pow(rmax / rmin, s / double(samples - 1));
    const double x = std::log(r);
    const double y = std::log(std::max(invariance_residual(rom, model, rom.fromRealified(r * dir, 0.5 * r)), 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = samples;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace hopfrom
