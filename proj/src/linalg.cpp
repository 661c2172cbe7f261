#include "macrobs/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "macrobs/errors.hpp"

namespace macrobs {

bool is_unitary(const CMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  CMatrix id = CMatrix::Identity(u.rows(), u.cols());
  return ((u.adjoint() * u) - id).cwiseAbs().maxCoeff() <= tol;
}

bool is_hermitian(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

CMatrix psd_sqrt(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  RVector ev = es.eigenvalues();
  const double floor = 1e-14 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (auto& x : ev) x = x > floor ? std::sqrt(x) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double min_eigenvalue(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()),
                                            Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double uhlmann_fidelity(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError("fidelity: dimension mismatch");
  CMatrix sa = psd_sqrt(a);
  CMatrix m = sa * b * sa;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()),
                                            Eigen::EigenvaluesOnly);
  // Eigenvalues at rounding level would contribute O(sqrt(eps)) each.
  const RVector& ev = es.eigenvalues();
  const double floor = 1e-14 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  double tr = 0.0;
  for (double x : ev)
    if (x > floor) tr += std::sqrt(x);
  return std::clamp(tr * tr, 0.0, 1.0);
}

double overlap_fidelity(const CVector& psi, const CMatrix& rho) {
  double f = std::real(psi.dot(rho * psi));
  return std::clamp(f, 0.0, 1.0);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double operator_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

TwoLevelDecomposition decompose_two_level(const CMatrix& u) {
  if (!is_unitary(u, 1e-9)) throw ValidationError("decompose_two_level: matrix is not unitary");
  const int n = static_cast<int>(u.rows());
  CMatrix w = u;
  // Left-multiplying by G_k ... G_1 reduces w to a diagonal; then
  // u = G_1^dag ... G_k^dag diag.
  TwoLevelDecomposition dec;
  for (int c = 0; c < n; ++c) {
    for (int r = c + 1; r < n; ++r) {
      cplx y = w(r, c);
      if (std::abs(y) < 1e-300) continue;
      cplx x = w(c, c);
      double nrm = std::hypot(std::abs(x), std::abs(y));
      Eigen::Matrix2cd g;
      g << std::conj(x) / nrm, std::conj(y) / nrm, -y / nrm, x / nrm;
      Eigen::RowVectorXcd rc = w.row(c), rr = w.row(r);
      w.row(c) = g(0, 0) * rc + g(0, 1) * rr;
      w.row(r) = g(1, 0) * rc + g(1, 1) * rr;
      w(r, c) = 0.0;
      dec.rotations.push_back({c, r, g.adjoint()});
    }
  }
  dec.phases = w.diagonal();
  for (Eigen::Index i = 0; i < dec.phases.size(); ++i) dec.phases(i) /= std::abs(dec.phases(i));
  return dec;
}

CMatrix compose_two_level(const TwoLevelDecomposition& dec) {
  CMatrix out = dec.phases.asDiagonal().toDenseMatrix();
  for (auto it = dec.rotations.rbegin(); it != dec.rotations.rend(); ++it) {
    Eigen::RowVectorXcd ra = out.row(it->a), rb = out.row(it->b);
    out.row(it->a) = it->g(0, 0) * ra + it->g(0, 1) * rb;
    out.row(it->b) = it->g(1, 0) * ra + it->g(1, 1) * rb;
  }
  return out;
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw ValidationError("gauss_hermite: need at least one node");
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.weights = es.eigenvectors().row(0).transpose().cwiseAbs2();
  return gh;
}

}  // namespace macrobs
