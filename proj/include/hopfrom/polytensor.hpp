#pragma once
// Multi-index bookkeeping and sparse multilinear forms.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hopfrom {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecR = Eigen::VectorXd;
using MatR = Eigen::MatrixXd;

/// Exponent vector of a monomial in (z_1, ..., z_d, mu).
struct MultiIndex {
  std::vector<int> exponents;

  int order() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }
  int size() const { return static_cast<int>(exponents.size()); }
  int operator[](int k) const { return exponents[static_cast<std::size_t>(k)]; }
  bool operator==(const MultiIndex&) const = default;
};

/// All monomials of orders 1..maxOrder in nvars variables.
///
/// Within an order, monomials are sorted in descending lexicographic order,
/// so z_1 has the highest priority and mu (the last variable) the lowest.
/// For s < j, the monomial alpha + e_s - e_j therefore precedes alpha.
class MonomialTable {
 public:
  static constexpr int kConstant = -1;  // id of the order-0 monomial
  static constexpr int kAbsent = -2;

  MonomialTable() = default;

  MonomialTable(int nvars, int maxOrder) : nvars_(nvars), maxOrder_(maxOrder) {
    if (nvars < 2) throw std::invalid_argument("MonomialTable: need at least 2 variables");
    if (maxOrder < 1) throw std::invalid_argument("MonomialTable: order must be >= 1");
    if (nvars > 8 || maxOrder > 255) throw std::invalid_argument("MonomialTable: size out of range");
    orderBegin_.assign(static_cast<std::size_t>(maxOrder + 2), 0);
    std::vector<int> current(static_cast<std::size_t>(nvars), 0);
    for (int p = 1; p <= maxOrder; ++p) {
      orderBegin_[static_cast<std::size_t>(p)] = size();
      generate(0, p, current);
    }
    orderBegin_[static_cast<std::size_t>(maxOrder + 1)] = size();
    lower_.assign(static_cast<std::size_t>(size() * nvars_), kAbsent);
    for (int id = 0; id < size(); ++id) {
      for (int k = 0; k < nvars_; ++k) {
        if (exponent(id, k) == 0) continue;
        if (orderOf(id) == 1) {
          lower_[static_cast<std::size_t>(id * nvars_ + k)] = kConstant;
        } else {
          std::vector<int> e = exponents(id);
          --e[static_cast<std::size_t>(k)];
          lower_[static_cast<std::size_t>(id * nvars_ + k)] = find(e);
        }
      }
    }
  }

  int numVariables() const { return nvars_; }
  int maxOrder() const { return maxOrder_; }
  int size() const { return static_cast<int>(orders_.size()); }

  int begin(int p) const { return orderBegin_[static_cast<std::size_t>(p)]; }
  int end(int p) const { return orderBegin_[static_cast<std::size_t>(p + 1)]; }
  int countOfOrder(int p) const { return end(p) - begin(p); }

  int orderOf(int id) const { return orders_[static_cast<std::size_t>(id)]; }
  int exponent(int id, int k) const { return exps_[static_cast<std::size_t>(id * nvars_ + k)]; }

  std::vector<int> exponents(int id) const {
    auto first = exps_.begin() + id * nvars_;
    return {first, first + nvars_};
  }
  MultiIndex multiIndex(int id) const { return {exponents(id)}; }

  /// Id of an exponent vector; kConstant for the zero vector, kAbsent when
  /// the order exceeds the table or the vector is malformed.
  int find(const std::vector<int>& e) const {
    if (static_cast<int>(e.size()) != nvars_) return kAbsent;
    int p = 0;
    for (int v : e) {
      if (v < 0) return kAbsent;
      p += v;
    }
    if (p == 0) return kConstant;
    if (p > maxOrder_) return kAbsent;
    auto it = lookup_.find(key(e));
    return it == lookup_.end() ? kAbsent : it->second;
  }
  int find(const MultiIndex& m) const { return find(m.exponents); }

  /// Id of alpha(id) - e_k (kConstant for order one, kAbsent if exponent is zero).
  int lowered(int id, int k) const { return lower_[static_cast<std::size_t>(id * nvars_ + k)]; }

  /// Id of alpha(id) + e_k, or kAbsent beyond the maximal order.
  int raised(int id, int k) const {
    std::vector<int> e = exponents(id);
    ++e[static_cast<std::size_t>(k)];
    return find(e);
  }

  /// Values of all monomials at z (one entry per id).
  template <class Scalar>
  std::vector<Scalar> monomialValues(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z) const {
    if (z.size() != nvars_) throw std::invalid_argument("monomialValues: dimension mismatch");
    std::vector<Scalar> v(static_cast<std::size_t>(size()));
    for (int id = 0; id < size(); ++id) {
      int k = 0;
      while (exponent(id, k) == 0) ++k;
      const int low = lowered(id, k);
      v[static_cast<std::size_t>(id)] = (low == kConstant ? Scalar(1) : v[static_cast<std::size_t>(low)]) * z(k);
    }
    return v;
  }

 private:
  static std::uint64_t key(const std::vector<int>& e) {
    std::uint64_t k = 0;
    for (int v : e) k = (k << 8) | static_cast<std::uint64_t>(v);
    return k;
  }

  void generate(int var, int remaining, std::vector<int>& current) {
    if (var == nvars_ - 1) {
      current[static_cast<std::size_t>(var)] = remaining;
      const int id = size();
      exps_.insert(exps_.end(), current.begin(), current.end());
      orders_.push_back(std::accumulate(current.begin(), current.end(), 0));
      lookup_.emplace(key(current), id);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[static_cast<std::size_t>(var)] = e;
      generate(var + 1, remaining - e, current);
    }
    current[static_cast<std::size_t>(var)] = 0;
  }

  int nvars_ = 0;
  int maxOrder_ = 0;
  std::vector<int> exps_;
  std::vector<int> orders_;
  std::vector<int> orderBegin_;
  std::vector<int> lower_;
  std::unordered_map<std::uint64_t, int> lookup_;
};

inline MonomialTable enumerate_monomials(int nvars, int maxOrder) { return MonomialTable(nvars, maxOrder); }

/// Splits alpha = beta + gamma with both parts non-constant, cached per id.
class SplitCache {
 public:
  explicit SplitCache(const MonomialTable& table) : table_(&table), cache_(static_cast<std::size_t>(table.size())) {}

  const std::vector<std::pair<int, int>>& splits(int id) const {
    auto& slot = cache_[static_cast<std::size_t>(id)];
    if (!slot.done) {
      const int n = table_->numVariables();
      const std::vector<int> a = table_->exponents(id);
      std::vector<int> b(static_cast<std::size_t>(n), 0), c(static_cast<std::size_t>(n));
      while (true) {
        int k = 0;
        while (k < n && b[static_cast<std::size_t>(k)] == a[static_cast<std::size_t>(k)]) {
          b[static_cast<std::size_t>(k)] = 0;
          ++k;
        }
        if (k == n) break;
        ++b[static_cast<std::size_t>(k)];
        for (int i = 0; i < n; ++i) c[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
        const int ib = table_->find(b), ic = table_->find(c);
        if (ib >= 0 && ic >= 0) slot.items.emplace_back(ib, ic);
      }
      slot.done = true;
    }
    return slot.items;
  }

 private:
  struct Slot {
    bool done = false;
    std::vector<std::pair<int, int>> items;
  };
  const MonomialTable* table_;
  mutable std::vector<Slot> cache_;
};

/// Coordinate-list bilinear form: [Q(u,v)]_p = sum Q_pij u_i v_j.
template <class T = double>
struct SparseBilinearForm {
  struct Entry {
    int p, i, j;
    T value;
  };
  int dimOut = 0, dimIn1 = 0, dimIn2 = 0;
  std::vector<Entry> entries;

  SparseBilinearForm() = default;
  SparseBilinearForm(int out, int in1, int in2) : dimOut(out), dimIn1(in1), dimIn2(in2) {}
  explicit SparseBilinearForm(int n) : SparseBilinearForm(n, n, n) {}

  void add(int p, int i, int j, T value) {
    if (p < 0 || p >= dimOut || i < 0 || i >= dimIn1 || j < 0 || j >= dimIn2)
      throw std::out_of_range("SparseBilinearForm::add index out of range");
    entries.push_back({p, i, j, value});
  }
  bool empty() const { return entries.empty(); }
};

/// Coordinate-list trilinear form: [H(u,v,w)]_p = sum H_pijk u_i v_j w_k.
template <class T = double>
struct SparseTrilinearForm {
  struct Entry {
    int p, i, j, k;
    T value;
  };
  int dim = 0;
  std::vector<Entry> entries;

  SparseTrilinearForm() = default;
  explicit SparseTrilinearForm(int n) : dim(n) {}

  void add(int p, int i, int j, int k, T value) {
    if (p < 0 || p >= dim || i < 0 || i >= dim || j < 0 || j >= dim || k < 0 || k >= dim)
      throw std::out_of_range("SparseTrilinearForm::add index out of range");
    entries.push_back({p, i, j, k, value});
  }
  bool empty() const { return entries.empty(); }
};

namespace detail {
template <class A, class B>
using Promote = decltype(std::declval<A>() * std::declval<B>());
}

template <class T, class Du, class Dv>
auto apply_bilinear(const SparseBilinearForm<T>& Q, const Eigen::MatrixBase<Du>& u, const Eigen::MatrixBase<Dv>& v) {
  using S = detail::Promote<detail::Promote<T, typename Du::Scalar>, typename Dv::Scalar>;
  if (u.size() != Q.dimIn1 || v.size() != Q.dimIn2) throw std::invalid_argument("apply_bilinear: dimension mismatch");
  Eigen::Matrix<S, Eigen::Dynamic, 1> out = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(Q.dimOut);
  for (const auto& e : Q.entries) out(e.p) += e.value * u(e.i) * v(e.j);
  return out;
}

/// [Q(A,v)]_pq = Q_pij A_iq v_j.
template <class T, class DA, class Dv>
auto apply_bilinear_matrix(const SparseBilinearForm<T>& Q, const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<Dv>& v) {
  using S = detail::Promote<detail::Promote<T, typename DA::Scalar>, typename Dv::Scalar>;
  if (A.rows() != Q.dimIn1 || v.size() != Q.dimIn2) throw std::invalid_argument("apply_bilinear_matrix: dimension mismatch");
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(Q.dimOut, A.cols());
  for (const auto& e : Q.entries) out.row(e.p) += (e.value * v(e.j)) * A.row(e.i);
  return out;
}

/// [Q(u,B)]_pq = Q_pij u_i B_jq.
template <class T, class Du, class DB>
auto apply_bilinear_matrix_right(const SparseBilinearForm<T>& Q, const Eigen::MatrixBase<Du>& u, const Eigen::MatrixBase<DB>& B) {
  using S = detail::Promote<detail::Promote<T, typename Du::Scalar>, typename DB::Scalar>;
  if (u.size() != Q.dimIn1 || B.rows() != Q.dimIn2) throw std::invalid_argument("apply_bilinear_matrix_right: dimension mismatch");
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> out = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(Q.dimOut, B.cols());
  for (const auto& e : Q.entries) out.row(e.p) += (e.value * u(e.i)) * B.row(e.j);
  return out;
}

template <class T, class Du, class Dv, class Dw>
auto apply_trilinear(const SparseTrilinearForm<T>& H, const Eigen::MatrixBase<Du>& u, const Eigen::MatrixBase<Dv>& v,
                     const Eigen::MatrixBase<Dw>& w) {
  using S = detail::Promote<detail::Promote<detail::Promote<T, typename Du::Scalar>, typename Dv::Scalar>, typename Dw::Scalar>;
  if (u.size() != H.dim || v.size() != H.dim || w.size() != H.dim) throw std::invalid_argument("apply_trilinear: dimension mismatch");
  Eigen::Matrix<S, Eigen::Dynamic, 1> out = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(H.dim);
  for (const auto& e : H.entries) out(e.p) += e.value * u(e.i) * v(e.j) * w(e.k);
  return out;
}

/// Symmetrised-slot tangent: d/du H(u,u,u) = H(I,u,u) + H(u,I,u) + H(u,u,I).
template <class T, class Du>
auto trilinear_jacobian(const SparseTrilinearForm<T>& H, const Eigen::MatrixBase<Du>& u) {
  using S = detail::Promote<T, typename Du::Scalar>;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> J = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(H.dim, H.dim);
  for (const auto& e : H.entries) {
    J(e.p, e.i) += e.value * u(e.j) * u(e.k);
    J(e.p, e.j) += e.value * u(e.i) * u(e.k);
    J(e.p, e.k) += e.value * u(e.i) * u(e.j);
  }
  return J;
}

/// d/du Q(u,u) = Q(I,u) + Q(u,I).
template <class T, class Du>
auto bilinear_jacobian(const SparseBilinearForm<T>& Q, const Eigen::MatrixBase<Du>& u) {
  using S = detail::Promote<T, typename Du::Scalar>;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> J = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(Q.dimOut, Q.dimIn1);
  for (const auto& e : Q.entries) {
    J(e.p, e.i) += e.value * u(e.j);
    J(e.p, e.j) += e.value * u(e.i);
  }
  return J;
}

/// Evaluates sum_k coeffs[k] * z^alpha(k); coefficients are indexed by table id.
inline VecC polynomial_eval(const MonomialTable& table, const std::vector<VecC>& coeffs, const VecC& z) {
  if (static_cast<int>(coeffs.size()) > table.size()) throw std::out_of_range("polynomial_eval: more coefficients than monomials");
  if (coeffs.empty()) return VecC();
  const auto values = table.monomialValues<cplx>(z);
  VecC out = VecC::Zero(coeffs.front().size());
  for (std::size_t id = 0; id < coeffs.size(); ++id) {
    if (coeffs[id].size() == 0) continue;
    out += values[id] * coeffs[id];
  }
  return out;
}

}  // namespace hopfrom
