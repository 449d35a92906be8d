#include <hopfrom/polytensor.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace hopfrom;

namespace {

long binomial(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Brute force: count exponent vectors of length n summing to p.
long bruteCount(int n, int p) {
  if (n == 1) return 1;
  long c = 0;
  for (int e = 0; e <= p; ++e) c += bruteCount(n - 1, p - e);
  return c;
}

template <class T>
std::vector<T> denseBilinear(const SparseBilinearForm<double>& Q, const std::vector<T>& u, const std::vector<T>& v) {
  std::vector<double> dense(static_cast<std::size_t>(Q.dimOut * Q.dimIn1 * Q.dimIn2), 0.0);
  for (const auto& e : Q.entries) dense[static_cast<std::size_t>((e.p * Q.dimIn1 + e.i) * Q.dimIn2 + e.j)] += e.value;
  std::vector<T> out(static_cast<std::size_t>(Q.dimOut), T(0));
  for (int p = 0; p < Q.dimOut; ++p)
    for (int i = 0; i < Q.dimIn1; ++i)
      for (int j = 0; j < Q.dimIn2; ++j) out[p] += dense[static_cast<std::size_t>((p * Q.dimIn1 + i) * Q.dimIn2 + j)] * u[i] * v[j];
  return out;
}

SparseBilinearForm<double> randomForm(int n, int nnz, std::mt19937& rng) {
  std::uniform_int_distribution<int> idx(0, n - 1);
  std::normal_distribution<double> val;
  SparseBilinearForm<double> Q(n);
  for (int k = 0; k < nnz; ++k) Q.add(idx(rng), idx(rng), idx(rng), val(rng));
  return Q;
}

}  // namespace

TEST(MonomialTable, SmallCounts) {
  MonomialTable t(3, 2);
  EXPECT_EQ(t.countOfOrder(1), 3);
  EXPECT_EQ(t.countOfOrder(2), 6);
  MonomialTable s(2, 1);
  ASSERT_EQ(s.size(), 2);
  EXPECT_EQ(s.exponents(0), (std::vector<int>{1, 0}));
  EXPECT_EQ(s.exponents(1), (std::vector<int>{0, 1}));
}

TEST(MonomialTable, BruteForceOrderNineFiveVariables) {
  MonomialTable t(5, 9);
  EXPECT_EQ(bruteCount(5, 9), 715);
  EXPECT_EQ(t.countOfOrder(9), 715);
}

TEST(MonomialTable, CountsMatchBinomialUpToSixTen) {
  for (int n = 2; n <= 6; ++n)
    for (int o = 1; o <= 10; ++o) {
      MonomialTable t(n, o);
      for (int p = 1; p <= o; ++p) EXPECT_EQ(t.countOfOrder(p), binomial(p + n - 1, n - 1)) << n << " " << o << " " << p;
    }
}

TEST(MonomialTable, LookupIsBijective) {
  MonomialTable t(5, 7);
  for (int id = 0; id < t.size(); ++id) {
    EXPECT_EQ(t.find(t.exponents(id)), id);
    EXPECT_EQ(t.multiIndex(id).order(), t.orderOf(id));
  }
  EXPECT_EQ(t.find(std::vector<int>{0, 0, 0, 0, 0}), MonomialTable::kConstant);
  EXPECT_EQ(t.find(std::vector<int>{8, 0, 0, 0, 0}), MonomialTable::kAbsent);
}

TEST(MonomialTable, RejectsInvalidSizes) {
  EXPECT_THROW(MonomialTable(1, 3), std::invalid_argument);
  EXPECT_THROW(MonomialTable(3, 0), std::invalid_argument);
}

TEST(MonomialTable, JordanShiftPrecedesWithinOrder) {
  MonomialTable t(5, 5);
  for (int id = 0; id < t.size(); ++id)
    for (int s = 0; s < 5; ++s)
      for (int j = s + 1; j < 5; ++j) {
        if (t.exponent(id, j) == 0) continue;
        auto e = t.exponents(id);
        ++e[s];
        --e[j];
        const int kw = t.find(e);
        ASSERT_GE(kw, 0);
        EXPECT_LT(kw, id);
      }
}

TEST(MonomialTable, SplitsCoverAllDecompositions) {
  MonomialTable t(3, 4);
  SplitCache cache(t);
  const int id = t.find(std::vector<int>{2, 1, 1});
  // (3)(2)(2) sub-indices minus the two trivial ones.
  EXPECT_EQ(cache.splits(id).size(), 10u);
  for (auto [b, c] : cache.splits(id))
    for (int k = 0; k < 3; ++k) EXPECT_EQ(t.exponent(b, k) + t.exponent(c, k), t.exponent(id, k));
}

TEST(SparseBilinear, SingleEntry) {
  SparseBilinearForm<double> Q(3);
  Q.add(0, 0, 1, 2.0);
  VecR e0 = VecR::Unit(3, 0), e1 = VecR::Unit(3, 1);
  VecR r = apply_bilinear(Q, e0, e1);
  EXPECT_DOUBLE_EQ(r(0), 2.0);
  EXPECT_DOUBLE_EQ(r(1), 0.0);
  EXPECT_DOUBLE_EQ(apply_bilinear(Q, e0, VecR::Zero(3)).norm(), 0.0);
  EXPECT_THROW(apply_bilinear(Q, VecR::Zero(2), e1), std::invalid_argument);
}

TEST(SparseBilinear, DenseOracleAndLinearity) {
  std::mt19937 rng(7);
  std::normal_distribution<double> g;
  for (int n = 2; n <= 8; ++n) {
    auto Q = randomForm(n, 3 * n, rng);
    VecC u(n), v(n), w(n);
    for (int i = 0; i < n; ++i) {
      u(i) = {g(rng), g(rng)};
      v(i) = {g(rng), g(rng)};
      w(i) = {g(rng), g(rng)};
    }
    std::vector<cplx> us(u.data(), u.data() + n), vs(v.data(), v.data() + n);
    auto oracle = denseBilinear(Q, us, vs);
    VecC r = apply_bilinear(Q, u, v);
    for (int p = 0; p < n; ++p) EXPECT_NEAR(std::abs(r(p) - oracle[p]), 0.0, 1e-12);
    const cplx a(0.3, -1.2), b(2.0, 0.5);
    VecC lhs = apply_bilinear(Q, VecC(a * u + b * w), v);
    VecC rhs = a * apply_bilinear(Q, u, v) + b * apply_bilinear(Q, w, v);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * (1 + rhs.norm()));
  }
}

TEST(SparseBilinear, MatrixVariantsMatchColumnwise) {
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  const int n = 6;
  auto Q = randomForm(n, 20, rng);
  MatR A = MatR::NullaryExpr(n, 4, [&] { return g(rng); });
  VecR v = VecR::NullaryExpr(n, [&] { return g(rng); });
  MatR left = apply_bilinear_matrix(Q, A, v);
  MatR right = apply_bilinear_matrix_right(Q, v, A);
  for (int q = 0; q < 4; ++q) {
    EXPECT_LT((left.col(q) - apply_bilinear(Q, A.col(q), v)).norm(), 1e-12);
    EXPECT_LT((right.col(q) - apply_bilinear(Q, v, A.col(q))).norm(), 1e-12);
  }
  // Identity pulls the linear part out: Q(I,v) y = Q(y,v).
  VecR y = VecR::NullaryExpr(n, [&] { return g(rng); });
  MatR I = MatR::Identity(n, n);
  EXPECT_LT((apply_bilinear_matrix(Q, I, v) * y - apply_bilinear(Q, y, v)).norm(), 1e-12);
  EXPECT_LT((apply_bilinear_matrix_right(Q, v, I) * y - apply_bilinear(Q, v, y)).norm(), 1e-12);
  SparseBilinearForm<double> zero(n);
  EXPECT_DOUBLE_EQ(apply_bilinear_matrix(zero, A, v).norm(), 0.0);
}

TEST(SparseTrilinear, DenseOracleAndJacobian) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> idx(0, 4);
  const int n = 5;
  SparseTrilinearForm<double> H(n);
  for (int k = 0; k < 15; ++k) H.add(idx(rng), idx(rng), idx(rng), idx(rng), g(rng));
  VecR u = VecR::NullaryExpr(n, [&] { return g(rng); });
  VecR v = VecR::NullaryExpr(n, [&] { return g(rng); });
  VecR w = VecR::NullaryExpr(n, [&] { return g(rng); });
  VecR oracle = VecR::Zero(n);
  for (const auto& e : H.entries) oracle(e.p) += e.value * u(e.i) * v(e.j) * w(e.k);
  EXPECT_LT((apply_trilinear(H, u, v, w) - oracle).norm(), 1e-12);
  const double h = 1e-6;
  MatR J = trilinear_jacobian(H, u);
  for (int c = 0; c < n; ++c) {
    VecR up = u, um = u;
    up(c) += h;
    um(c) -= h;
    VecR fd = (apply_trilinear(H, up, up, up) - apply_trilinear(H, um, um, um)) / (2 * h);
    EXPECT_LT((fd - J.col(c)).norm(), 1e-7);
  }
}

TEST(PolynomialEval, OrderOneIsMatrixVectorProduct) {
  MonomialTable t(3, 3);
  std::vector<VecC> coeffs(static_cast<std::size_t>(t.size()), VecC::Zero(2));
  MatC W(2, 3);
  W << cplx(1, 2), cplx(0, 1), cplx(3, 0), cplx(-1, 0), cplx(2, -2), cplx(0.5, 0);
  for (int k = 0; k < 3; ++k) coeffs[static_cast<std::size_t>(k)] = W.col(k);
  VecC z(3);
  z << cplx(0.1, 0.2), cplx(-0.3, 0.0), cplx(0.05, -0.1);
  EXPECT_LT((polynomial_eval(t, coeffs, z) - W * z).norm(), 1e-14);
  EXPECT_LT(polynomial_eval(t, coeffs, VecC::Zero(3)).norm(), 1e-300);
}

TEST(PolynomialEval, NaiveMonomialOracle) {
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  MonomialTable t(4, 3);
  std::vector<VecC> coeffs;
  for (int id = 0; id < t.size(); ++id) coeffs.push_back(VecC::NullaryExpr(3, [&] { return cplx(g(rng), g(rng)); }));
  VecC z = VecC::NullaryExpr(4, [&] { return cplx(g(rng), g(rng)) * 0.5; });
  VecC naive = VecC::Zero(3);
  for (int id = 0; id < t.size(); ++id) {
    cplx m = 1;
    for (int k = 0; k < 4; ++k) m *= std::pow(z(k), t.exponent(id, k));
    naive += m * coeffs[static_cast<std::size_t>(id)];
  }
  EXPECT_LT((polynomial_eval(t, coeffs, z) - naive).norm(), 1e-12 * naive.norm());
  coeffs.push_back(coeffs.front());
  EXPECT_THROW(polynomial_eval(t, coeffs, z), std::out_of_range);
}
