#pragma once
// Plane-strain Saint Venant-Kirchhoff cantilever with a follower tip traction,
// discretised with 6-node triangles.

#include <hopfrom/models.hpp>
#include <hopfrom/spectral.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hopfrom {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat2C = Eigen::Matrix2cd;

/// Structured triangulation of a rectangle with quadratic triangles.
/// Triangle nodes: three corners counterclockwise, then the midsides 01, 12, 20.
/// Tip line elements: (start, mid, end) in counterclockwise boundary order.
struct FEMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 6>> triangles;
  std::vector<std::array<int, 3>> tipEdges;
  std::vector<int> constrainedDofs;  // full numbering, x and y alternating per node
  std::vector<int> freeDofs;         // model dof -> full dof
  std::vector<int> fullToFree;       // full dof -> model dof or -1
  int tipNode = 0;                   // node on the tip section at mid height

  int numFullDofs() const { return 2 * static_cast<int>(nodes.size()); }
  int numFreeDofs() const { return static_cast<int>(freeDofs.size()); }
  /// Model dof of the vertical displacement of the tip observation node.
  int tipVerticalDof() const { return fullToFree[static_cast<std::size_t>(2 * tipNode + 1)]; }
};

struct BeckParams {
  double length = 30.0, height = 2.0;
  double young = 1000.0, poisson = 0.0, density = 0.1;
  int nx = 25, ny = 1;  // cells along the length and the height, two triangles per cell
  double xiMass = 0.0, xiStiff = 0.0;
  double omegaRef = 0.68;  // reference frequency of the Rayleigh relations
};

inline FEMesh mesh_rectangle(double length, double height, int nx, int ny) {
  if (!(length > 0) || !(height > 0) || nx < 1 || ny < 1) throw std::invalid_argument("mesh_rectangle: invalid geometry");
  FEMesh mesh;
  const int cols = 2 * nx + 1, rows = 2 * ny + 1;
  auto id = [rows](int i, int j) { return i * rows + j; };
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j < rows; ++j) mesh.nodes.emplace_back(length * i / (cols - 1), height * j / (rows - 1));
  for (int cx = 0; cx < nx; ++cx)
    for (int cy = 0; cy < ny; ++cy) {
      const int i = 2 * cx, j = 2 * cy;
      const int a = id(i, j), b = id(i + 2, j), c = id(i + 2, j + 2), d = id(i, j + 2);
      // alternate the diagonal so the pattern has no preferred direction
      if ((cx + cy) % 2 == 0) {
        mesh.triangles.push_back({a, b, c, id(i + 1, j), id(i + 2, j + 1), id(i + 1, j + 1)});
        mesh.triangles.push_back({a, c, d, id(i + 1, j + 1), id(i + 1, j + 2), id(i, j + 1)});
      } else {
        mesh.triangles.push_back({a, b, d, id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
        mesh.triangles.push_back({b, c, d, id(i + 2, j + 1), id(i + 1, j + 2), id(i + 1, j + 1)});
      }
    }
  for (int cy = 0; cy < ny; ++cy) {
    const int j = 2 * cy;
    mesh.tipEdges.push_back({id(cols - 1, j), id(cols - 1, j + 1), id(cols - 1, j + 2)});
  }
  for (int j = 0; j < rows; ++j) {
    mesh.constrainedDofs.push_back(2 * id(0, j));
    mesh.constrainedDofs.push_back(2 * id(0, j) + 1);
  }
  mesh.fullToFree.assign(static_cast<std::size_t>(mesh.numFullDofs()), -1);
  std::vector<bool> fixed(static_cast<std::size_t>(mesh.numFullDofs()), false);
  for (int d : mesh.constrainedDofs) fixed[static_cast<std::size_t>(d)] = true;
  for (int d = 0; d < mesh.numFullDofs(); ++d)
    if (!fixed[static_cast<std::size_t>(d)]) {
      mesh.fullToFree[static_cast<std::size_t>(d)] = mesh.numFreeDofs();
      mesh.freeDofs.push_back(d);
    }
  mesh.tipNode = id(cols - 1, ny);
  return mesh;
}

namespace detail {

// 7-point degree-5 rule on the reference triangle (area 1/2): (xi, eta, weight).
inline const std::array<std::array<double, 3>, 7>& triangleRule() {
  static const std::array<std::array<double, 3>, 7> rule = [] {
    const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
    const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
    std::array<std::array<double, 3>, 7> r{};
    r[0] = {1.0 / 3.0, 1.0 / 3.0, 0.225};
    r[1] = {b1, b1, w1};
    r[2] = {a1, b1, w1};
    r[3] = {b1, a1, w1};
    r[4] = {b2, b2, w2};
    r[5] = {a2, b2, w2};
    r[6] = {b2, a2, w2};
    for (auto& p : r) p[2] *= 0.5;
    return r;
  }();
  return rule;
}

// Shape functions and parametric derivatives of the 6-node triangle.
inline void t6Shape(double xi, double eta, Eigen::Matrix<double, 6, 1>& N, Eigen::Matrix<double, 6, 2>& dN) {
  const double l1 = 1 - xi - eta, l2 = xi, l3 = eta;
  N << l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1;
  // d/dxi: dl1 = -1, dl2 = 1, dl3 = 0; d/deta: dl1 = -1, dl2 = 0, dl3 = 1
  dN << -(4 * l1 - 1), -(4 * l1 - 1),
        4 * l2 - 1, 0.0,
        0.0, 4 * l3 - 1,
        4 * (l1 - l2), -4 * l2,
        4 * l3, 4 * l2,
        -4 * l3, 4 * (l1 - l3);
}

/// Per quadrature point: shape values, reference gradients and weight * det J.
struct QuadPoint {
  Eigen::Matrix<double, 6, 1> N;
  Eigen::Matrix<double, 6, 2> dN;  // d N_a / d X_J
  double weight = 0;
};

struct ElementData {
  std::array<int, 12> fullDofs{};
  std::vector<QuadPoint> points;
};

inline std::vector<ElementData> elementData(const FEMesh& mesh) {
  std::vector<ElementData> out;
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const auto& tri = mesh.triangles[e];
    ElementData ed;
    for (int a = 0; a < 6; ++a) {
      ed.fullDofs[static_cast<std::size_t>(2 * a)] = 2 * tri[static_cast<std::size_t>(a)];
      ed.fullDofs[static_cast<std::size_t>(2 * a + 1)] = 2 * tri[static_cast<std::size_t>(a)] + 1;
    }
    Eigen::Matrix<double, 6, 2> X;
    for (int a = 0; a < 6; ++a) X.row(a) = mesh.nodes[static_cast<std::size_t>(tri[static_cast<std::size_t>(a)])].transpose();
    for (const auto& q : triangleRule()) {
      QuadPoint qp;
      Eigen::Matrix<double, 6, 2> dNref;
      t6Shape(q[0], q[1], qp.N, dNref);
      const Mat2 J = X.transpose() * dNref;  // dX_I / dxi_J
      const double det = J.determinant();
      if (!(det > 0)) throw std::invalid_argument("fem: non-positive Jacobian in element " + std::to_string(e));
      qp.dN = dNref * J.inverse();
      qp.weight = q[2] * det;
      ed.points.push_back(qp);
    }
    out.push_back(std::move(ed));
  }
  return out;
}

/// Isotropic plane-strain material: S = lambda tr(E) I + 2 mu E.
struct Lame {
  double lambda = 0, mu = 0;
  template <class M>
  M stress(const M& E) const {
    return lambda * E.trace() * M::Identity() + 2.0 * mu * E;
  }
};

inline Lame planeStrain(double young, double poisson) {
  if (!(young > 0) || !(poisson >= 0) || !(poisson < 0.5)) throw std::invalid_argument("fem: invalid material constants");
  return {young * poisson / ((1 + poisson) * (1 - 2 * poisson)), young / (2 * (1 + poisson))};
}

template <class Scalar>
using ElemVec = Eigen::Matrix<Scalar, 12, 1>;

// Displacement gradient H_iJ = sum_a u_{a,i} dN_a/dX_J.
template <class Scalar>
Eigen::Matrix<Scalar, 2, 2> gradient(const QuadPoint& qp, const ElemVec<Scalar>& ue) {
  Eigen::Matrix<Scalar, 2, 2> H = Eigen::Matrix<Scalar, 2, 2>::Zero();
  for (int a = 0; a < 6; ++a)
    for (int i = 0; i < 2; ++i) H.row(i) += ue(2 * a + i) * qp.dN.row(a).template cast<Scalar>();
  return H;
}

// Adds weight * dN_a/dX_J P_iJ to the element force.
template <class Scalar>
void scatterStress(const QuadPoint& qp, const Eigen::Matrix<Scalar, 2, 2>& P, ElemVec<Scalar>& fe) {
  for (int a = 0; a < 6; ++a)
    for (int i = 0; i < 2; ++i) fe(2 * a + i) += qp.weight * (P.row(i) * qp.dN.row(a).transpose().template cast<Scalar>())(0);
}

template <class M>
M symProduct(const M& A, const M& B) {
  return 0.5 * (A.transpose() * B + B.transpose() * A);
}

}  // namespace detail

/// Series of the nonlinear SVK force about U0 evaluated at quadrature points:
/// per monomial the displacement gradient H_a and the stress S_a are stored, and
/// P = (I + H) S is expanded with Cauchy products.
class FeForceSeries final : public ForceSeries {
 public:
  FeForceSeries(const MonomialTable& table, std::shared_ptr<const std::vector<detail::ElementData>> elements,
                std::shared_ptr<const FEMesh> mesh, detail::Lame mat, const VecR& U0)
      : splits_(table), elements_(std::move(elements)), mesh_(std::move(mesh)), mat_(mat) {
    for (const auto& ed : *elements_) nq_ += static_cast<int>(ed.points.size());
    F0_.reserve(static_cast<std::size_t>(nq_));
    S0_.reserve(static_cast<std::size_t>(nq_));
    for (const auto& ed : *elements_) {
      const detail::ElemVec<double> ue = gather(ed, U0);
      for (const auto& qp : ed.points) {
        const Mat2 H = detail::gradient(qp, ue);
        const Mat2 E = 0.5 * (H + H.transpose() + H.transpose() * H);
        F0_.push_back((Mat2::Identity() + H).cast<cplx>());
        S0_.push_back(mat_.stress(E).cast<cplx>());
      }
    }
    H_.resize(static_cast<std::size_t>(table.size()));
    S_.resize(static_cast<std::size_t>(table.size()));
    Q_.resize(static_cast<std::size_t>(table.size()));
  }

  void set(int id, const VecC& coeff) override {
    auto& H = H_[static_cast<std::size_t>(id)];
    auto& S = S_[static_cast<std::size_t>(id)];
    H.resize(static_cast<std::size_t>(nq_));
    S.resize(static_cast<std::size_t>(nq_));
    const auto& Q = quadraticStrain(id);
    int q = 0;
    for (const auto& ed : *elements_) {
      const detail::ElemVec<cplx> ue = gather(ed, coeff);
      for (const auto& qp : ed.points) {
        const Mat2C h = detail::gradient(qp, ue);
        const Mat2C E = detail::symProduct(F0_[static_cast<std::size_t>(q)], h) + Q[static_cast<std::size_t>(q)];
        H[static_cast<std::size_t>(q)] = h;
        S[static_cast<std::size_t>(q)] = mat_.stress(E);
        ++q;
      }
    }
    Q_[static_cast<std::size_t>(id)].clear();
    Q_[static_cast<std::size_t>(id)].shrink_to_fit();
  }

  VecC nonlinear(int id) override {
    const auto& sp = splits_.splits(id);
    const auto& Q = quadraticStrain(id);
    VecC full = VecC::Zero(mesh_->numFullDofs());
    int q = 0;
    for (const auto& ed : *elements_) {
      detail::ElemVec<cplx> fe = detail::ElemVec<cplx>::Zero();
      for (const auto& qp : ed.points) {
        const std::size_t sq = static_cast<std::size_t>(q);
        Mat2C P = F0_[sq] * mat_.stress(Q[sq]);
        for (auto [b, c] : sp) P += H_[static_cast<std::size_t>(b)][sq] * S_[static_cast<std::size_t>(c)][sq];
        detail::scatterStress(qp, P, fe);
        ++q;
      }
      for (int k = 0; k < 12; ++k) full(ed.fullDofs[static_cast<std::size_t>(k)]) += fe(k);
    }
    VecC out(mesh_->numFreeDofs());
    for (int k = 0; k < mesh_->numFreeDofs(); ++k) out(k) = full(mesh_->freeDofs[static_cast<std::size_t>(k)]);
    return out;
  }

 private:
  template <class Scalar>
  detail::ElemVec<Scalar> gather(const detail::ElementData& ed, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& U) const {
    detail::ElemVec<Scalar> ue;
    for (int k = 0; k < 12; ++k) {
      const int f = mesh_->fullToFree[static_cast<std::size_t>(ed.fullDofs[static_cast<std::size_t>(k)])];
      ue(k) = f < 0 ? Scalar(0) : U(f);
    }
    return ue;
  }

  // Order-|alpha| coefficient of (1/2) H^T H from lower coefficients, cached until set().
  const std::vector<Mat2C>& quadraticStrain(int id) {
    auto& Q = Q_[static_cast<std::size_t>(id)];
    if (!Q.empty()) return Q;
    Q.assign(static_cast<std::size_t>(nq_), Mat2C::Zero());
    for (auto [b, c] : splits_.splits(id)) {
      const auto& Hb = H_[static_cast<std::size_t>(b)];
      const auto& Hc = H_[static_cast<std::size_t>(c)];
      for (int q = 0; q < nq_; ++q)
        Q[static_cast<std::size_t>(q)] += 0.5 * Hb[static_cast<std::size_t>(q)].transpose() * Hc[static_cast<std::size_t>(q)];
    }
    return Q;
  }

  SplitCache splits_;
  std::shared_ptr<const std::vector<detail::ElementData>> elements_;
  std::shared_ptr<const FEMesh> mesh_;
  detail::Lame mat_;
  int nq_ = 0;
  std::vector<Mat2C> F0_, S0_;
  std::vector<std::vector<Mat2C>> H_, S_, Q_;
};

/// Quadratic and cubic parts of the SVK internal force as evaluable forms on the
/// free dofs: G(U,U) + H(U,U,U) = f_int(U) - K U.
class FeNonlinearForce final : public NonlinearForce {
 public:
  FeNonlinearForce(std::shared_ptr<const FEMesh> mesh, detail::Lame mat)
      : mesh_(std::move(mesh)), elements_(std::make_shared<const std::vector<detail::ElementData>>(detail::elementData(*mesh_))), mat_(mat) {}

  int dim() const override { return mesh_->numFreeDofs(); }

  VecR quadratic(const VecR& a, const VecR& b) const override {
    return assemble([&](const detail::QuadPoint& qp, const detail::ElementData& ed) {
      const Mat2 Ha = detail::gradient(qp, gather(ed, a)), Hb = detail::gradient(qp, gather(ed, b));
      const Mat2 Sa = mat_.stress(Mat2(0.5 * (Ha + Ha.transpose()))), Sb = mat_.stress(Mat2(0.5 * (Hb + Hb.transpose())));
      return Mat2(0.5 * mat_.stress(detail::symProduct(Ha, Hb)) + 0.5 * (Ha * Sb + Hb * Sa));
    });
  }

  VecR cubic(const VecR& a, const VecR& b, const VecR& c) const override {
    return assemble([&](const detail::QuadPoint& qp, const detail::ElementData& ed) {
      const Mat2 Ha = detail::gradient(qp, gather(ed, a)), Hb = detail::gradient(qp, gather(ed, b));
      const Mat2 Hc = detail::gradient(qp, gather(ed, c));
      return Mat2((Ha * mat_.stress(Mat2(0.5 * detail::symProduct(Hb, Hc))) + Hb * mat_.stress(Mat2(0.5 * detail::symProduct(Ha, Hc))) +
                   Hc * mat_.stress(Mat2(0.5 * detail::symProduct(Ha, Hb)))) /
                  3.0);
    });
  }

  VecR force(const VecR& U) const override {
    return assemble([&](const detail::QuadPoint& qp, const detail::ElementData& ed) {
      const Mat2 H = detail::gradient(qp, gather(ed, U));
      const Mat2 S = mat_.stress(Mat2(0.5 * (H + H.transpose() + H.transpose() * H)));
      const Mat2 Slin = mat_.stress(Mat2(0.5 * (H + H.transpose())));
      return Mat2((Mat2::Identity() + H) * S - Slin);
    });
  }

  /// Full SVK internal force K U + G(U,U) + H(U,U,U).
  VecR internalForce(const VecR& U) const {
    return assemble([&](const detail::QuadPoint& qp, const detail::ElementData& ed) {
      const Mat2 H = detail::gradient(qp, gather(ed, U));
      return Mat2((Mat2::Identity() + H) * mat_.stress(Mat2(0.5 * (H + H.transpose() + H.transpose() * H))));
    });
  }

  /// Total strain energy of the displacement U.
  double strainEnergy(const VecR& U) const {
    double w = 0;
    for (const auto& ed : *elements_) {
      const auto ue = gather(ed, U);
      for (const auto& qp : ed.points) {
        const Mat2 H = detail::gradient(qp, ue);
        const Mat2 E = 0.5 * (H + H.transpose() + H.transpose() * H);
        w += qp.weight * 0.5 * (E.cwiseProduct(mat_.stress(E))).sum();
      }
    }
    return w;
  }

  /// Tangent of the full internal force at U.
  MatR tangent(const VecR& U) const {
    const int nf = mesh_->numFullDofs();
    MatR Kf = MatR::Zero(nf, nf);
    for (const auto& ed : *elements_) {
      const auto ue = gather(ed, U);
      Eigen::Matrix<double, 12, 12> ke = Eigen::Matrix<double, 12, 12>::Zero();
      for (const auto& qp : ed.points) {
        const Mat2 H = detail::gradient(qp, ue);
        const Mat2 F = Mat2::Identity() + H;
        const Mat2 S = mat_.stress(Mat2(0.5 * (H + H.transpose() + H.transpose() * H)));
        for (int b = 0; b < 6; ++b)
          for (int k = 0; k < 2; ++k) {
            Mat2 dH = Mat2::Zero();
            dH.row(k) = qp.dN.row(b);
            const Mat2 dP = dH * S + F * mat_.stress(Mat2(0.5 * (F.transpose() * dH + dH.transpose() * F)));
            for (int a = 0; a < 6; ++a)
              for (int i = 0; i < 2; ++i) ke(2 * a + i, 2 * b + k) += qp.weight * dP.row(i).dot(qp.dN.row(a));
          }
      }
      for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 12; ++c) Kf(ed.fullDofs[static_cast<std::size_t>(r)], ed.fullDofs[static_cast<std::size_t>(c)]) += ke(r, c);
    }
    return restrict(Kf);
  }

  MatR jacobian(const VecR& U) const override { return tangent(U) - tangent(VecR::Zero(dim())); }

  std::unique_ptr<ForceSeries> series(const MonomialTable& table, const VecR& U0) const override {
    return std::make_unique<FeForceSeries>(table, elements_, mesh_, mat_, U0);
  }

  const FEMesh& mesh() const { return *mesh_; }
  const std::vector<detail::ElementData>& elements() const { return *elements_; }

  /// Restriction of a full-numbering matrix to the free dofs.
  MatR restrict(const MatR& full) const {
    const int n = dim();
    MatR out(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) out(r, c) = full(mesh_->freeDofs[static_cast<std::size_t>(r)], mesh_->freeDofs[static_cast<std::size_t>(c)]);
    return out;
  }

 private:
  detail::ElemVec<double> gather(const detail::ElementData& ed, const VecR& U) const {
    detail::ElemVec<double> ue;
    for (int k = 0; k < 12; ++k) {
      const int f = mesh_->fullToFree[static_cast<std::size_t>(ed.fullDofs[static_cast<std::size_t>(k)])];
      ue(k) = f < 0 ? 0.0 : U(f);
    }
    return ue;
  }

  // Assembles sum over elements and points of weight * dN^T P(qp) on the free dofs.
  template <class Stress>
  VecR assemble(Stress stressAt) const {
    VecR full = VecR::Zero(mesh_->numFullDofs());
    for (const auto& ed : *elements_) {
      detail::ElemVec<double> fe = detail::ElemVec<double>::Zero();
      for (const auto& qp : ed.points) detail::scatterStress(qp, stressAt(qp, ed), fe);
      for (int k = 0; k < 12; ++k) full(ed.fullDofs[static_cast<std::size_t>(k)]) += fe(k);
    }
    VecR out(dim());
    for (int k = 0; k < dim(); ++k) out(k) = full(mesh_->freeDofs[static_cast<std::size_t>(k)]);
    return out;
  }

  std::shared_ptr<const FEMesh> mesh_;
  std::shared_ptr<const std::vector<detail::ElementData>> elements_;
  detail::Lame mat_;
};

namespace detail {

// Consistent mass on the full numbering.
inline MatR massMatrix(const FEMesh& mesh, const std::vector<ElementData>& elements, double density) {
  MatR Mf = MatR::Zero(mesh.numFullDofs(), mesh.numFullDofs());
  for (const auto& ed : elements)
    for (const auto& qp : ed.points)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          const double m = density * qp.weight * qp.N(a) * qp.N(b);
          for (int i = 0; i < 2; ++i) Mf(ed.fullDofs[static_cast<std::size_t>(2 * a + i)], ed.fullDofs[static_cast<std::size_t>(2 * b + i)]) += m;
        }
  return Mf;
}

// Follower traction on the tip edges: R0 = int N^T E3 N_,a X da and
// Ru = int N^T E3 N_,a da with E3 the counterclockwise quarter turn.
inline void followerLoad(const FEMesh& mesh, VecR& R0full, MatR& RuFull) {
  R0full = VecR::Zero(mesh.numFullDofs());
  RuFull = MatR::Zero(mesh.numFullDofs(), mesh.numFullDofs());
  const double g = std::sqrt(3.0 / 5.0);
  const std::array<std::array<double, 2>, 3> rule{{{-g, 5.0 / 9.0}, {0.0, 8.0 / 9.0}, {g, 5.0 / 9.0}}};
  Mat2 E3;
  E3 << 0, -1, 1, 0;
  for (const auto& edge : mesh.tipEdges) {
    Eigen::Matrix<double, 6, 1> X;
    for (int a = 0; a < 3; ++a) X.segment<2>(2 * a) = mesh.nodes[static_cast<std::size_t>(edge[static_cast<std::size_t>(a)])];
    Eigen::Matrix<double, 6, 1> r0 = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 6> ru = Eigen::Matrix<double, 6, 6>::Zero();
    for (const auto& [a, w] : rule) {
      const Eigen::Vector3d N(0.5 * a * (a - 1), 1 - a * a, 0.5 * a * (a + 1));
      const Eigen::Vector3d dN(a - 0.5, -2 * a, a + 0.5);
      Eigen::Matrix<double, 2, 6> Nm = Eigen::Matrix<double, 2, 6>::Zero(), dNm = Eigen::Matrix<double, 2, 6>::Zero();
      for (int k = 0; k < 3; ++k) {
        Nm(0, 2 * k) = Nm(1, 2 * k + 1) = N(k);
        dNm(0, 2 * k) = dNm(1, 2 * k + 1) = dN(k);
      }
      const Eigen::Matrix<double, 6, 6> block = w * Nm.transpose() * E3 * dNm;
      ru += block;
      r0 += block * X;
    }
    for (int a = 0; a < 6; ++a) {
      const int fa = 2 * edge[static_cast<std::size_t>(a / 2)] + a % 2;
      R0full(fa) += r0(a);
      for (int b = 0; b < 6; ++b) RuFull(fa, 2 * edge[static_cast<std::size_t>(b / 2)] + b % 2) += ru(a, b);
    }
  }
}

}  // namespace detail

struct BeckModel {
  SecondOrderModel model;
  std::shared_ptr<const FEMesh> mesh;
  std::shared_ptr<const FeNonlinearForce> force;
  double referenceLoad = 0.0;  // load at which the stiffness-proportional damping tangent is taken
};

/// Undamped assembly; apply_rayleigh sets the damping.
inline BeckModel assemble_beck(const BeckParams& p) {
  if (!(p.density > 0)) throw std::invalid_argument("assemble_beck: density must be positive");
  if (!(p.xiMass >= 0) || !(p.xiStiff >= 0) || !(p.omegaRef > 0)) throw std::invalid_argument("assemble_beck: invalid damping");
  BeckModel b;
  b.mesh = std::make_shared<const FEMesh>(mesh_rectangle(p.length, p.height, p.nx, p.ny));
  auto force = std::make_shared<const FeNonlinearForce>(b.mesh, detail::planeStrain(p.young, p.poisson));
  b.force = force;
  SecondOrderModel& m = b.model;
  m.name = "beck";
  m.nDof = force->dim();
  m.M = force->restrict(detail::massMatrix(*b.mesh, force->elements(), p.density));
  m.K = force->tangent(VecR::Zero(m.nDof));
  m.K = 0.5 * (m.K + m.K.transpose());
  if (Eigen::FullPivLU<MatR>(m.K).rank() < m.nDof) throw std::invalid_argument("assemble_beck: singular stiffness after constraints");
  m.C = MatR::Zero(m.nDof, m.nDof);
  m.nonlinear = force;
  VecR R0f;
  MatR Ruf;
  detail::followerLoad(*b.mesh, R0f, Ruf);
  m.R0.resize(m.nDof);
  for (int k = 0; k < m.nDof; ++k) m.R0(k) = R0f(b.mesh->freeDofs[static_cast<std::size_t>(k)]);
  m.Ru = force->restrict(Ruf);
  m.U0 = VecR::Zero(m.nDof);
  m.paramCubic = SparseTrilinearForm<double>(m.nDof);
  for (int k = 0; k < m.nDof; ++k) {
    const int full = b.mesh->freeDofs[static_cast<std::size_t>(k)];
    m.dofLabels.push_back((full % 2 == 0 ? "ux" : "uy") + std::to_string(full / 2));
  }
  return b;
}

/// C = alpha M + beta K_t(P) with alpha = omegaRef xiMass / 2, beta = xiStiff / (2 omegaRef).
inline void apply_rayleigh(BeckModel& b, const BeckParams& p, double P) {
  const double alpha = 0.5 * p.omegaRef * p.xiMass, beta = p.xiStiff / (2 * p.omegaRef);
  b.model.C = alpha * b.model.M;
  if (beta != 0.0) b.model.C += beta * at_load(b.model, P).Kt();
  b.referenceLoad = P;
}

struct HopfLocation {
  double P = 0.0;
  double omega = 0.0;
  int evaluations = 0;
};

/// First loss of stability of the linearised model in [pMin, pMax]: coarse scan of
/// the largest real part, then regula falsi (Illinois) on it.
inline HopfLocation locate_hopf_load(const SecondOrderModel& model, double pMin, double pMax, int scan = 12, double tol = 1e-9) {
  HopfLocation out;
  auto growth = [&](double P) {
    ++out.evaluations;
    return max_real_part(make_pencil(at_load(model, P)));
  };
  double a = pMin, fa = growth(a);
  if (fa > 0) throw std::runtime_error("locate_hopf_load: unstable at the lower bound");
  double b = a, fb = fa;
  for (int k = 1; k <= scan; ++k) {
    b = pMin + (pMax - pMin) * k / scan;
    fb = growth(b);
    if (fb > 0) break;
    a = b;
    fa = fb;
  }
  if (!(fb > 0)) throw std::runtime_error("locate_hopf_load: no loss of stability in range");
  int side = 0;
  for (int it = 0; it < 100 && b - a > tol * std::max(1.0, std::abs(b)); ++it) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = growth(c);
    if (fc > 0) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
    if (fc == 0.0) {
      a = b = c;
      break;
    }
  }
  out.P = std::abs(fa) < std::abs(fb) ? a : b;
  double omega = 0, best = -std::numeric_limits<double>::infinity();
  for (cplx l : pencil_eigenvalues(make_pencil(at_load(model, out.P))))
    if (l.imag() > 0 && l.real() > best) {
      best = l.real();
      omega = l.imag();
    }
  out.omega = omega;
  return out;
}

/// Rayleigh damping with the stiffness tangent taken at the Hopf load, iterated
/// until the Hopf load moves by less than tol.
inline HopfLocation damp_at_hopf(BeckModel& b, const BeckParams& p, double pMin, double pMax, double tol = 1e-6,
                                 int maxPasses = 10) {
  apply_rayleigh(b, p, 0.5 * (pMin + pMax));
  HopfLocation h = locate_hopf_load(b.model, pMin, pMax);
  if (p.xiStiff == 0.0) return h;
  for (int pass = 0; pass < maxPasses; ++pass) {
    const double prev = h.P;
    apply_rayleigh(b, p, h.P);
    h = locate_hopf_load(b.model, pMin, pMax);
    if (std::abs(h.P - prev) < tol) return h;
  }
  throw std::runtime_error("damp_at_hopf: fixed point on the Hopf load did not converge");
}

}  // namespace hopfrom
