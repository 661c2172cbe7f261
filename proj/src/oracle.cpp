#include "macrobs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "macrobs/errors.hpp"

namespace macrobs::oracle {

std::size_t dense_dim(int N, int d, const Limits& lim) {
  if (N < 0 || d < 1) throw ValidationError("need N >= 0 and d >= 1");
  const std::size_t cap = lim.allow_large ? kHardCap : lim.cap;
  double dim = std::pow(static_cast<double>(d), N);
  if (dim > static_cast<double>(cap))
    throw ResourceError("dense oracle: d^N = " + std::to_string(static_cast<long double>(dim)) + " exceeds cap " +
                        std::to_string(cap));
  return static_cast<std::size_t>(std::llround(dim));
}

std::size_t dense_matrix_dim(int N, int d, const Limits& lim) {
  std::size_t dim = dense_dim(N, d, lim);
  if (dim > kMatrixCap) throw ResourceError("dense oracle: d^N x d^N matrix exceeds the matrix cap");
  return dim;
}

std::vector<int> string_letters(std::size_t idx, int N, int d) {
  std::vector<int> x(N);
  for (int k = N - 1; k >= 0; --k) {
    x[k] = static_cast<int>(idx % d);
    idx /= d;
  }
  return x;
}

TypeVector string_type(std::size_t idx, int N, int d) {
  TypeVector L(d, 0);
  for (int k = 0; k < N; ++k) {
    ++L[idx % d];
    idx /= d;
  }
  return L;
}

void apply_local(CVector& v, const CMatrix& w, int site, int N) {
  const int d = static_cast<int>(w.rows());
  std::size_t post = 1;
  for (int k = site + 1; k < N; ++k) post *= d;
  const std::size_t block = post * d;
  const std::size_t pre = static_cast<std::size_t>(v.size()) / block;
  std::vector<cplx> tmp(d);
  for (std::size_t h = 0; h < pre; ++h) {
    for (std::size_t r = 0; r < post; ++r) {
      const std::size_t base = h * block + r;
      for (int a = 0; a < d; ++a) tmp[a] = v(base + a * post);
      for (int a = 0; a < d; ++a) {
        cplx s = 0.0;
        for (int b = 0; b < d; ++b) s += w(a, b) * tmp[b];
        v(base + a * post) = s;
      }
    }
  }
}

void apply_local_all(CVector& v, const CMatrix& w, int N) {
  for (int k = 0; k < N; ++k) apply_local(v, w, k, N);
}

CMatrix conjugate_all(const CMatrix& rho, const CMatrix& w, int N) {
  CMatrix out = rho;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    CVector col = out.col(c);
    apply_local_all(col, w, N);
    out.col(c) = col;
  }
  CMatrix t = out.adjoint();
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    CVector col = t.col(c);
    apply_local_all(col, w, N);
    t.col(c) = col;
  }
  return t.adjoint();
}

CVector product_vector(const std::vector<CVector>& psis) {
  CVector v = CVector::Ones(1);
  for (const auto& p : psis) {
    CVector nv(v.size() * p.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) nv.segment(i * p.size(), p.size()) = v(i) * p;
    v = std::move(nv);
  }
  return v;
}

CMatrix product_density(const std::vector<CMatrix>& nus) {
  CMatrix r = CMatrix::Ones(1, 1);
  for (const auto& n : nus) r = kron(r, n);
  return r;
}

CMatrix tensor_power(const CMatrix& w, int N) {
  CMatrix r = CMatrix::Ones(1, 1);
  for (int k = 0; k < N; ++k) r = kron(r, w);
  return r;
}

CMatrix symmetric_embedding(int N, const ObservableBasis& basis, const Limits& lim) {
  const int d = basis.d();
  const std::size_t dim = dense_dim(N, d, lim);
  TypeBasis types(N, d);
  CMatrix V = CMatrix::Zero(dim, types.size());
  for (std::size_t x = 0; x < dim; ++x) {
    TypeVector L = string_type(x, N, d);
    V(x, types.index(L)) = std::exp(-0.5 * log_type_class_size(L));
  }
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    CVector col = V.col(c);
    apply_local_all(col, basis.u, N);
    V.col(c) = col;
  }
  return V;
}

CVector embed(const SymmetricPureState& psi, const Limits& lim) {
  return symmetric_embedding(psi.N(), psi.basis(), lim) * psi.amplitudes();
}

CMatrix embed(const SymmetricDensity& rho, const Limits& lim) {
  dense_matrix_dim(rho.N(), rho.d(), lim);
  CMatrix V = symmetric_embedding(rho.N(), rho.basis(), lim);
  return V * rho.matrix() * V.adjoint();
}

CMatrix DiagonalOperator::matrix() const {
  CMatrix U = tensor_power(basis.u, N);
  return U * values.cast<cplx>().asDiagonal() * U.adjoint();
}

void DiagonalOperator::apply(CVector& v) const {
  apply_local_all(v, basis.u.adjoint(), N);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) *= values(i);
  apply_local_all(v, basis.u, N);
}

CMatrix DiagonalOperator::sandwich(const CMatrix& rho) const {
  CMatrix e = conjugate_all(rho, basis.u.adjoint(), N);
  for (Eigen::Index j = 0; j < e.cols(); ++j)
    for (Eigen::Index i = 0; i < e.rows(); ++i) e(i, j) *= values(i) * values(j);
  return conjugate_all(e, basis.u, N);
}

double DiagonalOperator::expectation(const CMatrix& rho) const {
  CMatrix e = conjugate_all(rho, basis.u.adjoint(), N);
  double s = 0.0;
  for (Eigen::Index i = 0; i < e.rows(); ++i) s += values(i) * e(i, i).real();
  return s;
}

double DiagonalOperator::rank(double tol) const {
  return static_cast<double>((values.array().abs() > tol).count());
}

namespace {

// Per-string values f(type of string), evaluated once per distinct type.
template <class F>
RVector per_string(int N, int d, std::size_t dim, F f) {
  std::map<TypeVector, double> memo;
  RVector v(dim);
  for (std::size_t x = 0; x < dim; ++x) {
    TypeVector L = string_type(x, N, d);
    auto it = memo.find(L);
    if (it == memo.end()) it = memo.emplace(L, f(L)).first;
    v(x) = it->second;
  }
  return v;
}

}  // namespace

DiagonalOperator type_projector(int N, const ObservableBasis& basis, const TypeVector& L, const Limits& lim) {
  const int d = basis.d();
  if (static_cast<int>(L.size()) != d || type_total(L) != N) throw ValidationError("type does not match (N, d)");
  std::size_t dim = dense_dim(N, d, lim);
  return {basis, N, per_string(N, d, dim, [&](const TypeVector& X) { return X == L ? 1.0 : 0.0; })};
}

DiagonalOperator coarse_povm(int N, const ObservableBasis& basis, const SmoothingKernel& k, const Outcome& l,
                             const Limits& lim) {
  const int d = basis.d();
  std::size_t dim = dense_dim(N, d, lim);
  return {basis, N, per_string(N, d, dim, [&](const TypeVector& X) {
            return std::sqrt(k.weight(k.readout().center(X.data(), d), l));
          })};
}

DiagonalOperator povm_element(int N, const ObservableBasis& basis, const SmoothingKernel& k, const Outcome& l,
                              const Limits& lim) {
  const int d = basis.d();
  std::size_t dim = dense_dim(N, d, lim);
  return {basis, N,
          per_string(N, d, dim, [&](const TypeVector& X) { return k.weight(k.readout().center(X.data(), d), l); })};
}

namespace {

RVector event_kraus(int N, const Event& e, std::size_t dim) {
  const int d = e.basis.d();
  return per_string(N, d, dim, [&](const TypeVector& X) {
    double c = e.kernel.readout().center(X.data(), d)[0];
    return std::sqrt(e.kernel.bin_mass(c, e.lo, e.hi));
  });
}

}  // namespace

double history_probability(const CVector& psi, int N, const std::vector<Event>& events, const Limits& lim) {
  if (events.empty()) return psi.squaredNorm();
  const std::size_t dim = dense_dim(N, events.front().basis.d(), lim);
  if (static_cast<std::size_t>(psi.size()) != dim) throw ValidationError("history: vector length != d^N");
  CVector v = psi;
  for (const auto& e : events) {
    DiagonalOperator{e.basis, N, event_kraus(N, e, dim)}.apply(v);
  }
  return v.squaredNorm();
}

double history_probability(const CMatrix& rho, int N, const std::vector<Event>& events, const Limits& lim) {
  if (events.empty()) return rho.trace().real();
  const std::size_t dim = dense_matrix_dim(N, events.front().basis.d(), lim);
  if (static_cast<std::size_t>(rho.rows()) != dim) throw ValidationError("history: matrix size != d^N");
  CMatrix r = rho;
  for (const auto& e : events) r = DiagonalOperator{e.basis, N, event_kraus(N, e, dim)}.sandwich(r);
  return r.trace().real();
}

double outcome_density(const CMatrix& rho, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                       const Outcome& l) {
  return povm_element(N, basis, k, l).expectation(rho);
}

CMatrix conditional_post(const CMatrix& rho, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                         const Outcome& l) {
  CMatrix out = coarse_povm(N, basis, k, l).sandwich(rho);
  double P = out.trace().real();
  if (!(P > 0.0)) throw ZeroProbabilityError("oracle: zero-probability outcome");
  return out / P;
}

CMatrix averaged_post(const CMatrix& rho, int N, const ObservableBasis& basis, const SmoothingKernel& k) {
  const int d = basis.d();
  const std::size_t dim = dense_matrix_dim(N, d);
  std::vector<std::vector<double>> centers(dim);
  for (std::size_t x = 0; x < dim; ++x) {
    TypeVector L = string_type(x, N, d);
    centers[x] = k.readout().center(L.data(), d);
  }
  CMatrix e = conjugate_all(rho, basis.u.adjoint(), N);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < dim; ++i) e(i, j) *= k.overlap(centers[i], centers[j]);
  return conjugate_all(e, basis.u, N);
}

CMatrix reduce_to_molecule(const CMatrix& rho, int N, int d, int site) {
  std::size_t post = 1;
  for (int k = site + 1; k < N; ++k) post *= d;
  const std::size_t block = post * d;
  const std::size_t pre = static_cast<std::size_t>(rho.rows()) / block;
  CMatrix r1 = CMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (std::size_t h = 0; h < pre; ++h)
        for (std::size_t r = 0; r < post; ++r) r1(a, b) += rho(h * block + a * post + r, h * block + b * post + r);
  return r1;
}

double fidelity(const CMatrix& a, const CMatrix& b) {
  if (min_eigenvalue(a) < -1e-8 || min_eigenvalue(b) < -1e-8) throw ValidationError("fidelity: input not PSD");
  return uhlmann_fidelity(a, b);
}

double fidelity_via_product(const CMatrix& a, const CMatrix& b) {
  Eigen::ComplexEigenSolver<CMatrix> es(a * b, false);
  double s = 0.0;
  const double floor = 1e-14 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i).real() > floor) s += std::sqrt(es.eigenvalues()(i).real());
  return std::clamp(s * s, 0.0, 1.0);
}

CMatrix macroscopic_observable(const CMatrix& a, int N, const Limits& lim) {
  const int d = static_cast<int>(a.rows());
  const std::size_t dim = dense_matrix_dim(N, d, lim);
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int k = 0; k < N; ++k) {
    CMatrix term = CMatrix::Ones(1, 1);
    for (int s = 0; s < N; ++s) term = kron(term, s == k ? a : CMatrix::Identity(d, d).eval());
    out += term;
  }
  return out;
}

}  // namespace macrobs::oracle
