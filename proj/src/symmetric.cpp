#include "macrobs/symmetric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>

#include "macrobs/errors.hpp"

namespace macrobs {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double wrap_angle(double x) {
  x = std::fmod(x, kTwoPi);
  if (x < 0) x += kTwoPi;
  return x;
}

void require_frame(const ObservableBasis& state, const ObservableBasis& meas) {
  if (!state.same_frame(meas))
    throw BasisMismatchError("state and measurement are expressed in different eigenbases; rotate first");
}

}  // namespace

// ---------------------------------------------------------------- bases

ObservableBasis ObservableBasis::computational(int d) {
  if (d < 1) throw ValidationError("basis dimension must be >= 1");
  std::vector<double> alpha(d);
  for (int j = 0; j < d; ++j) alpha[j] = 0.5 * (d - 1) - j;
  return {CMatrix::Identity(d, d), alpha};
}

ObservableBasis ObservableBasis::from_unitary(const CMatrix& u, std::vector<double> alpha) {
  if (!is_unitary(u, 1e-10)) throw ValidationError("basis matrix is not unitary");
  const int d = static_cast<int>(u.rows());
  if (alpha.empty()) alpha = computational(d).alpha;
  if (static_cast<int>(alpha.size()) != d) throw ValidationError("eigenvalue count != dimension");
  return {u, std::move(alpha)};
}

ObservableBasis ObservableBasis::from_observable(const CMatrix& a) {
  if (!is_hermitian(a, 1e-10)) throw ValidationError("observable is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
  const int d = static_cast<int>(a.rows());
  CMatrix u(d, d);
  std::vector<double> alpha(d);
  for (int j = 0; j < d; ++j) {
    int src = d - 1 - j;  // descending eigenvalues
    alpha[j] = es.eigenvalues()(src);
    CVector col = es.eigenvectors().col(src);
    for (int r = 0; r < d; ++r) {
      if (std::abs(col(r)) > 1e-9) {
        col *= std::conj(col(r)) / std::abs(col(r));
        break;
      }
    }
    u.col(j) = col;
  }
  return {u, alpha};
}

CMatrix pauli(char axis) {
  CMatrix p(2, 2);
  switch (axis) {
    case 'x': p << 0, 1, 1, 0; break;
    case 'y': p << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'z': p << 1, 0, 0, -1; break;
    default: throw ValidationError(std::string("unknown Pauli axis '") + axis + "'");
  }
  return p;
}

ObservableBasis ObservableBasis::spin(char axis) {
  if (axis == 'z') return computational(2);
  return from_observable(0.5 * pauli(axis));
}

CMatrix ObservableBasis::observable() const {
  RVector a = Eigen::Map<const RVector>(alpha.data(), alpha.size());
  return u * a.cast<cplx>().asDiagonal() * u.adjoint();
}

bool ObservableBasis::same_frame(const ObservableBasis& other, double tol) const {
  if (u.rows() != other.u.rows()) return false;
  return (u - other.u).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------- molecules

MoleculeState MoleculeState::pure(const CVector& psi) {
  double n = psi.norm();
  if (std::abs(n - 1.0) > 1e-10) throw ValidationError("molecule vector is not normalized");
  return {psi * psi.adjoint()};
}

MoleculeState MoleculeState::maximally_mixed(int d) {
  return {CMatrix::Identity(d, d) / static_cast<double>(d)};
}

MoleculeState MoleculeState::bloch(double x, double y, double z) {
  if (x * x + y * y + z * z > 1.0 + 1e-12) throw ValidationError("Bloch vector longer than 1");
  CMatrix rho = 0.5 * (CMatrix::Identity(2, 2) + x * pauli('x') + y * pauli('y') + z * pauli('z'));
  return {rho};
}

void MoleculeState::validate(double tol) const {
  if (!is_hermitian(rho, tol)) throw ValidationError("molecule state is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > tol) throw ValidationError("molecule state trace != 1");
  if (min_eigenvalue(rho) < -tol) throw ValidationError("molecule state is not PSD");
}

CMatrix MoleculeState::in_basis(const ObservableBasis& basis) const {
  if (basis.d() != d()) throw ValidationError("molecule/basis dimension mismatch");
  return basis.u.adjoint() * rho * basis.u;
}

ProbVector MoleculeState::letter_probabilities(const ObservableBasis& basis) const {
  CMatrix m = in_basis(basis);
  ProbVector R(d());
  double s = 0.0;
  for (int j = 0; j < d(); ++j) s += (R[j] = std::max(0.0, m(j, j).real()));
  for (double& r : R) r /= s;
  return R;
}

std::vector<double> MoleculeState::bloch_vector() const {
  if (d() != 2) throw ValidationError("Bloch vector needs a qubit");
  return {(rho * pauli('x')).trace().real(), (rho * pauli('y')).trace().real(), (rho * pauli('z')).trace().real()};
}

double trace_distance(const MoleculeState& a, const MoleculeState& b) {
  CMatrix diff = a.rho - b.rho;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ---------------------------------------------------------------- states

std::shared_ptr<const TypeBasis> shared_type_basis(int N, int d) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const TypeBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(N, d);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto tb = std::make_shared<const TypeBasis>(N, d);
  // Keep small bases only; large ones are owned by their users.
  if (tb->size() <= 200000) cache.emplace(key, tb);
  return tb;
}

SymmetricPureState::SymmetricPureState(int N, ObservableBasis basis, std::vector<double> logmag,
                                       std::vector<double> phase)
    : n_(N), basis_(std::move(basis)), logmag_(std::move(logmag)), phase_(std::move(phase)) {
  types_ = shared_type_basis(N, basis_.d());
  if (logmag_.size() != types_->size() || phase_.size() != types_->size())
    throw ValidationError("amplitude table length != number of types");
  double n2 = norm_squared();
  if (std::abs(n2 - 1.0) > 1e-9) throw ValidationError("symmetric state is not normalized");
}

SymmetricPureState SymmetricPureState::from_amplitudes(int N, ObservableBasis basis, const CVector& c) {
  std::vector<double> lm(c.size()), ph(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    double a = std::abs(c(i));
    lm[i] = a > 0 ? std::log(a) : kNegInf;
    ph[i] = a > 0 ? wrap_angle(std::arg(c(i))) : 0.0;
  }
  return SymmetricPureState(N, std::move(basis), std::move(lm), std::move(ph));
}

CVector SymmetricPureState::amplitudes() const {
  CVector c(size());
  for (std::size_t i = 0; i < size(); ++i) c(i) = std::polar(std::exp(logmag_[i]), phase_[i]);
  return c;
}

std::vector<double> SymmetricPureState::probabilities() const {
  std::vector<double> p(size());
  for (std::size_t i = 0; i < size(); ++i) p[i] = std::exp(2.0 * logmag_[i]);
  return p;
}

double SymmetricPureState::norm_squared() const {
  std::vector<double> twice(logmag_.size());
  for (std::size_t i = 0; i < logmag_.size(); ++i) twice[i] = 2.0 * logmag_[i];
  return std::exp(log_sum_exp(twice));
}

SymmetricDensity::SymmetricDensity(int N, ObservableBasis basis, CMatrix rho, std::size_t cap)
    : n_(N), basis_(std::move(basis)), rho_(std::move(rho)) {
  if (type_count(N, basis_.d()) > static_cast<double>(cap))
    throw ResourceError("symmetric density would exceed the T x T cap (T <= " + std::to_string(cap) + ")");
  types_ = shared_type_basis(N, basis_.d());
  if (static_cast<std::size_t>(rho_.rows()) != types_->size() || rho_.rows() != rho_.cols())
    throw ValidationError("density matrix size != number of types");
}

SymmetricDensity SymmetricDensity::from_pure(const SymmetricPureState& psi, std::size_t cap) {
  if (static_cast<double>(psi.size()) > static_cast<double>(cap))
    throw ResourceError("symmetric density would exceed the T x T cap");
  CVector c = psi.amplitudes();
  return SymmetricDensity(psi.N(), psi.basis(), c * c.adjoint(), cap);
}

void SymmetricDensity::validate(double tol, double psd_tol) const {
  if (!is_hermitian(rho_, tol)) throw ValidationError("density is not Hermitian");
  if (std::abs(rho_.trace().real() - 1.0) > tol) throw ValidationError("density trace != 1");
  if (min_eigenvalue(rho_) < -psd_tol) throw ValidationError("density is not PSD");
}

SymmetricPureState product_state(const std::vector<cplx>& beta, int N, const ObservableBasis& basis) {
  const int d = basis.d();
  if (static_cast<int>(beta.size()) != d) throw ValidationError("beta length != basis dimension");
  if (N < 0) throw ValidationError("N must be >= 0");
  double n2 = 0.0;
  for (auto b : beta) n2 += std::norm(b);
  if (std::abs(n2 - 1.0) > 1e-10) throw ValidationError("beta is not normalized");
  auto tb = shared_type_basis(N, d);
  std::vector<double> logabs(d), arg(d);
  for (int j = 0; j < d; ++j) {
    logabs[j] = std::abs(beta[j]) > 0 ? std::log(std::abs(beta[j])) : kNegInf;
    arg[j] = std::arg(beta[j]);
  }
  std::vector<double> lm(tb->size()), ph(tb->size());
  for (std::size_t i = 0; i < tb->size(); ++i) {
    const int* c = tb->counts(i);
    double l = 0.5 * log_type_class_size(c, d);
    double p = 0.0;
    for (int j = 0; j < d; ++j) {
      if (c[j] == 0) continue;
      l += c[j] * logabs[j];
      p = wrap_angle(p + wrap_angle(c[j] * arg[j]));
    }
    lm[i] = l;
    ph[i] = std::isfinite(l) ? p : 0.0;
  }
  return SymmetricPureState(N, basis, std::move(lm), std::move(ph));
}

SymmetricPureState product_state(const CVector& psi, int N, const ObservableBasis& basis) {
  CVector b = basis.u.adjoint() * psi;
  std::vector<cplx> beta(b.data(), b.data() + b.size());
  return product_state(beta, N, basis);
}

double macro_eigenvalue(const TypeVector& L, const ObservableBasis& basis) {
  validate_type(L);
  if (static_cast<int>(L.size()) != basis.d()) throw ValidationError("type/basis dimension mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < L.size(); ++j) s += L[j] * basis.alpha[j];
  return s;
}

std::vector<std::vector<double>> type_centers(const TypeBasis& types, const Readout& r) {
  std::vector<std::vector<double>> c(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) c[i] = r.center(types.counts(i), types.d());
  return c;
}

// ---------------------------------------------------------------- measurement

namespace {

std::vector<double> kernel_weights(const TypeBasis& types, const SmoothingKernel& k, const Outcome& l) {
  std::vector<double> q(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) q[i] = k.weight(k.readout().center(types.counts(i), types.d()), l);
  return q;
}

}  // namespace

double outcome_density(const SymmetricPureState& psi, const TypeMeasurement& m, const Outcome& l) {
  require_frame(psi.basis(), m.basis);
  auto q = kernel_weights(psi.types(), m.kernel, l);
  auto p = psi.probabilities();
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * p[i];
  return s;
}

double outcome_density(const SymmetricDensity& rho, const TypeMeasurement& m, const Outcome& l) {
  require_frame(rho.basis(), m.basis);
  auto q = kernel_weights(rho.types(), m.kernel, l);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * rho.matrix()(i, i).real();
  return std::max(s, 0.0);
}

SymmetricDensity conditional_post_density(const SymmetricDensity& rho, const TypeMeasurement& m, const Outcome& l) {
  require_frame(rho.basis(), m.basis);
  auto q = kernel_weights(rho.types(), m.kernel, l);
  double P = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) P += q[i] * rho.matrix()(i, i).real();
  if (!(P > 0.0)) throw ZeroProbabilityError("outcome has zero probability density");
  RVector s(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) s(i) = std::sqrt(q[i]);
  CMatrix out = s.cast<cplx>().asDiagonal() * rho.matrix() * s.cast<cplx>().asDiagonal();
  out /= P;
  return SymmetricDensity(rho.N(), rho.basis(), std::move(out), std::numeric_limits<std::size_t>::max());
}

SymmetricPureState conditional_post_state(const SymmetricPureState& psi, const TypeMeasurement& m, const Outcome& l) {
  require_frame(psi.basis(), m.basis);
  auto q = kernel_weights(psi.types(), m.kernel, l);
  std::vector<double> lm = psi.log_magnitudes();
  std::vector<double> ph = psi.phases();
  // log P by log-sum-exp so deep-tail outcomes keep full precision.
  double top = kNegInf;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) top = std::max(top, 2 * lm[i] + std::log(q[i]));
  if (!std::isfinite(top)) throw ZeroProbabilityError("outcome has zero probability density");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) acc += std::exp(2 * lm[i] + std::log(q[i]) - top);
  const double shift = 0.5 * (top + std::log(acc));
  for (std::size_t i = 0; i < q.size(); ++i) {
    lm[i] = q[i] > 0.0 ? lm[i] + 0.5 * std::log(q[i]) - shift : kNegInf;
    if (!std::isfinite(lm[i])) ph[i] = 0.0;
  }
  return SymmetricPureState(psi.N(), psi.basis(), std::move(lm), std::move(ph));
}

SymmetricDensity averaged_post_density(const SymmetricPureState& psi, const TypeMeasurement& m, std::size_t cap) {
  auto rho = SymmetricDensity::from_pure(psi, cap);
  return averaged_post_density(rho, m);
}

SymmetricDensity averaged_post_density(const SymmetricDensity& rho, const TypeMeasurement& m) {
  require_frame(rho.basis(), m.basis);
  KernelOverlap G(m.kernel, type_centers(rho.types(), m.kernel.readout()));
  CMatrix out = rho.matrix();
  const auto T = static_cast<Eigen::Index>(rho.size());
  for (Eigen::Index j = 0; j < T; ++j)
    for (Eigen::Index i = 0; i < T; ++i) out(i, j) *= G(i, j);
  return SymmetricDensity(rho.N(), rho.basis(), std::move(out), std::numeric_limits<std::size_t>::max());
}

double fidelity(const SymmetricDensity& a, const SymmetricDensity& b) {
  if (a.N() != b.N() || a.d() != b.d()) throw ValidationError("fidelity: dimension mismatch");
  require_frame(a.basis(), b.basis());
  if (min_eigenvalue(a.matrix()) < -1e-8 || min_eigenvalue(b.matrix()) < -1e-8)
    throw ValidationError("fidelity: input is not PSD within tolerance");
  return uhlmann_fidelity(a.matrix(), b.matrix());
}

double fidelity(const SymmetricPureState& psi, const SymmetricDensity& rho) {
  if (psi.N() != rho.N() || psi.d() != rho.d()) throw ValidationError("fidelity: dimension mismatch");
  require_frame(psi.basis(), rho.basis());
  return overlap_fidelity(psi.amplitudes(), rho.matrix());
}

double fidelity(const SymmetricPureState& a, const SymmetricPureState& b) {
  if (a.N() != b.N() || a.d() != b.d()) throw ValidationError("fidelity: dimension mismatch");
  require_frame(a.basis(), b.basis());
  return std::min(1.0, std::norm(a.amplitudes().dot(b.amplitudes())));
}

namespace {

PairSumResult pair_sum(const std::vector<double>& p, const KernelOverlap& G, double dropped) {
  PairSumResult r;
  r.kept = p.size();
  r.dropped_mass = std::max(0.0, dropped);
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    diag += p[i] * p[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < p.size(); ++j) row += p[j] * G(i, j);
    off += p[i] * row;
  }
  r.fidelity = std::clamp(diag + 2.0 * off, 0.0, 1.0);
  return r;
}

}  // namespace

PairSumResult averaged_fidelity(const SymmetricPureState& psi, const TypeMeasurement& m, double min_prob) {
  require_frame(psi.basis(), m.basis);
  auto p = psi.probabilities();
  std::vector<double> kept;
  std::vector<std::vector<double>> centers;
  double dropped = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < min_prob || p[i] == 0.0) {
      dropped += p[i];
      continue;
    }
    kept.push_back(p[i]);
    centers.push_back(m.kernel.readout().center(psi.types().counts(i), psi.d()));
  }
  return pair_sum(kept, KernelOverlap(m.kernel, std::move(centers)), dropped);
}

std::vector<TypeVector> multinomial_window(const ProbVector& R, int N, double trunc) {
  validate_prob(R, 1e-10);
  const int d = static_cast<int>(R.size());
  std::vector<int> lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    double s = std::sqrt(N * R[j] * (1.0 - R[j]));
    lo[j] = std::max(0, static_cast<int>(std::ceil(N * R[j] - trunc * s - 1.0)));
    hi[j] = std::min(N, static_cast<int>(std::floor(N * R[j] + trunc * s + 1.0)));
  }
  std::vector<TypeVector> out;
  TypeVector cur(d, 0);
  std::function<void(int, int)> rec = [&](int j, int rem) {
    if (j == d - 1) {
      if (rem >= lo[j] && rem <= hi[j]) {
        cur[j] = rem;
        out.push_back(cur);
      }
      return;
    }
    for (int v = lo[j]; v <= std::min(hi[j], rem); ++v) {
      cur[j] = v;
      rec(j + 1, rem - v);
    }
  };
  rec(0, N);
  return out;
}

PairSumResult product_averaged_fidelity(const ProbVector& R, int N, const SmoothingKernel& k, double trunc) {
  auto win = multinomial_window(R, N, trunc);
  std::vector<double> p;
  std::vector<std::vector<double>> centers;
  double total = 0.0;
  for (const auto& L : win) {
    double pl = std::exp(log_multinomial_pmf(L.data(), R));
    if (pl == 0.0) continue;
    p.push_back(pl);
    total += pl;
    centers.push_back(k.readout().center(L.data(), static_cast<int>(L.size())));
  }
  return pair_sum(p, KernelOverlap(k, std::move(centers)), 1.0 - total);
}

// ---------------------------------------------------------------- reduction

namespace {

template <class Elem>
CMatrix reduce_in_frame(const TypeBasis& types, int N, int d, Elem elem) {
  CMatrix r1 = CMatrix::Zero(d, d);
  if (N < 1) throw ValidationError("reduce_single_molecule needs N >= 1");
  TypeBasis sub(N - 1, d);
  std::vector<int> a(d), b(d);
  for (std::size_t k = 0; k < sub.size(); ++k) {
    const int* K = sub.counts(k);
    for (int i = 0; i < d; ++i) {
      std::copy(K, K + d, a.begin());
      ++a[i];
      std::size_t ia = types.index(a.data());
      for (int j = 0; j < d; ++j) {
        std::copy(K, K + d, b.begin());
        ++b[j];
        std::size_t ib = types.index(b.data());
        r1(i, j) += elem(ia, ib) * std::sqrt((K[i] + 1.0) * (K[j] + 1.0)) / static_cast<double>(N);
      }
    }
  }
  return r1;
}

}  // namespace

MoleculeState reduce_single_molecule(const SymmetricDensity& rho) {
  const auto& M = rho.matrix();
  CMatrix r1 = reduce_in_frame(rho.types(), rho.N(), rho.d(), [&](std::size_t a, std::size_t b) { return M(a, b); });
  return {rho.basis().u * r1 * rho.basis().u.adjoint()};
}

MoleculeState reduce_single_molecule(const SymmetricPureState& psi) {
  CVector c = psi.amplitudes();
  CMatrix r1 = reduce_in_frame(psi.types(), psi.N(), psi.d(),
                               [&](std::size_t a, std::size_t b) { return c(a) * std::conj(c(b)); });
  return {psi.basis().u * r1 * psi.basis().u.adjoint()};
}

// ---------------------------------------------------------------- induced unitaries

namespace {

// Eigen-decomposition of the generator of real qubit rotations on m+1 types,
// made real symmetric by the similarity diag(i^k). Eigenvalues are the
// integers -m, -m+2, ..., m and are snapped to them.
struct RotationGenerator {
  RVector values;
  Eigen::MatrixXd vectors;
};

constexpr int kMaxQubitLevel = 4096;

std::shared_ptr<const RotationGenerator> rotation_generator(int m) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const RotationGenerator>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
  }
  RVector diag = RVector::Zero(m + 1);
  RVector sub(std::max(m, 0));
  for (int k = 1; k <= m; ++k) sub(k - 1) = -std::sqrt(static_cast<double>(k) * (m - k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub);
  auto g = std::make_shared<RotationGenerator>();
  g->values = es.eigenvalues();
  for (auto& x : g->values) x = m - 2.0 * std::round((m - x) / 2.0);
  g->vectors = es.eigenvectors();
  std::lock_guard<std::mutex> lock(mu);
  if (cache.size() > 512) cache.clear();
  cache.emplace(m, g);
  return g;
}

}  // namespace

namespace {

// g = diag(e^{i th0}, e^{i th1}) [[c, -s], [s, c]] diag(1, e^{i ps1})
struct QubitEuler {
  double th0 = 0.0, th1 = 0.0, ps1 = 0.0, theta = 0.0;
};

QubitEuler euler_split(const CMatrix& g, int m) {
  if (g.rows() != 2 || g.cols() != 2 || !is_unitary(g, 1e-10))
    throw ValidationError("induced qubit: expected a 2 x 2 unitary");
  if (m < 0) throw ValidationError("induced qubit: m must be >= 0");
  if (m > kMaxQubitLevel) throw ResourceError("induced qubit: level above " + std::to_string(kMaxQubitLevel));
  QubitEuler e;
  const double c = std::abs(g(0, 0)), s = std::abs(g(1, 0));
  if (s < 1e-15) {
    e.th0 = std::arg(g(0, 0));
    e.th1 = std::arg(g(1, 1));
  } else if (c < 1e-15) {
    e.th0 = std::arg(-g(0, 1));
    e.th1 = std::arg(g(1, 0));
  } else {
    e.th0 = std::arg(g(0, 0));
    e.th1 = std::arg(g(1, 0));
    e.ps1 = std::arg(-g(0, 1)) - e.th0;
  }
  e.theta = std::atan2(s, c);
  return e;
}

const cplx kIPow[4] = {1.0, cplx(0, 1), -1.0, cplx(0, -1)};

// Left factor i^k e^{i(th0 k + th1 (m - k))}, right factor i^{-l} e^{i ps1 (m - l)}.
CVector left_phases(const QubitEuler& e, int m) {
  CVector p(m + 1);
  for (int k = 0; k <= m; ++k) p(k) = kIPow[k % 4] * std::polar(1.0, e.th0 * k + e.th1 * (m - k));
  return p;
}

CVector right_phases(const QubitEuler& e, int m) {
  CVector p(m + 1);
  for (int l = 0; l <= m; ++l) p(l) = kIPow[(4 - l % 4) % 4] * std::polar(1.0, e.ps1 * (m - l));
  return p;
}

}  // namespace

CMatrix induced_qubit(const CMatrix& g, int m) {
  const QubitEuler e = euler_split(g, m);
  auto gen = rotation_generator(m);
  const Eigen::MatrixXd& Y = gen->vectors;
  CVector ph(m + 1);
  for (int j = 0; j <= m; ++j) ph(j) = std::polar(1.0, -e.theta * gen->values(j));
  CMatrix R = Y.cast<cplx>() * ph.asDiagonal() * Y.transpose().cast<cplx>();
  // Undo the diag(i^k) similarity, then the outer phases.
  return left_phases(e, m).asDiagonal() * R * right_phases(e, m).asDiagonal();
}

void apply_induced_qubit(const CMatrix& g, CVector& v) {
  const int m = static_cast<int>(v.size()) - 1;
  const QubitEuler e = euler_split(g, m);
  auto gen = rotation_generator(m);
  const Eigen::MatrixXd& Y = gen->vectors;
  CVector t = right_phases(e, m).cwiseProduct(v);
  CVector u(m + 1);
  for (int j = 0; j <= m; ++j)
    u(j) = std::polar(1.0, -e.theta * gen->values(j)) * cplx(Y.col(j).dot(t.real()), Y.col(j).dot(t.imag()));
  CVector w(m + 1);
  w.real() = Y * u.real();
  w.imag() = Y * u.imag();
  v = left_phases(e, m).cwiseProduct(w);
}

CMatrix induced_unitary(const CMatrix& w, int N) {
  if (N < 0) throw ValidationError("N must be >= 0");
  if (w.rows() != w.cols() || !is_unitary(w, 1e-10))
    throw ValidationError("induced unitary: single-molecule matrix is not unitary");
  auto types = std::make_shared<const TypeBasis>(N, static_cast<int>(w.rows()));
  InducedAction act(types, w);
  const auto T = static_cast<Eigen::Index>(types->size());
  CMatrix out = CMatrix::Identity(T, T);
  CVector col;
  for (Eigen::Index j = 0; j < T; ++j) {
    col = out.col(j);
    act.apply(col);
    out.col(j) = col;
  }
  return out;
}

InducedAction::InducedAction(std::shared_ptr<const TypeBasis> types, const CMatrix& w) : types_(std::move(types)) {
  const int D = types_->d();
  const int M = types_->N();
  if (w.rows() != D || w.cols() != D) throw ValidationError("induced action: unitary size != alphabet size");
  if (!is_unitary(w, 1e-10)) throw ValidationError("induced action: matrix is not unitary");
  auto dec = decompose_two_level(w);
  angles_.resize(D);
  for (int j = 0; j < D; ++j) angles_[j] = std::arg(dec.phases(j));
  std::vector<int> c(D);
  // u = R_0 R_1 ... diag: apply the diagonal first, then R_{k-1} ... R_0.
  for (auto it = dec.rotations.rbegin(); it != dec.rotations.rend(); ++it) {
    Rotation rot;
    const int a = it->a, b = it->b;
    std::vector<bool> need(M + 1, false);
    for (std::size_t idx = 0; idx < types_->size(); ++idx) {
      const int* K = types_->counts(idx);
      if (K[a] != 0) continue;
      const int m = K[b];
      need[m] = true;
      rot.offsets.push_back(rot.index.size());
      std::copy(K, K + D, c.begin());
      for (int t = 0; t <= m; ++t) {
        c[a] = t;
        c[b] = m - t;
        rot.index.push_back(types_->index(c.data()));
      }
    }
    rot.offsets.push_back(rot.index.size());
    rot.levels.resize(M + 1);
    for (int m = 0; m <= M; ++m)
      if (need[m]) rot.levels[m] = induced_qubit(it->g, m);
    rotations_.push_back(std::move(rot));
  }
}

void InducedAction::apply(CVector& v) const {
  const int D = types_->d();
  if (static_cast<std::size_t>(v.size()) != types_->size()) throw ValidationError("induced action: vector length");
  for (std::size_t idx = 0; idx < types_->size(); ++idx) {
    const int* K = types_->counts(idx);
    double phi = 0.0;
    for (int j = 0; j < D; ++j) phi += K[j] * angles_[j];
    if (phi != 0.0) v(idx) *= std::polar(1.0, phi);
  }
  CVector buf, res;
  for (const auto& rot : rotations_) {
    for (std::size_t s = 0; s + 1 < rot.offsets.size(); ++s) {
      const std::size_t beg = rot.offsets[s], len = rot.offsets[s + 1] - beg;
      const CMatrix& U = rot.levels[len - 1];
      buf.resize(len);
      for (std::size_t t = 0; t < len; ++t) buf(t) = v(rot.index[beg + t]);
      res.noalias() = U * buf;
      for (std::size_t t = 0; t < len; ++t) v(rot.index[beg + t]) = res(t);
    }
  }
}

void apply_induced(const TypeBasis& types, const CMatrix& w, CVector& v) {
  InducedAction(std::make_shared<const TypeBasis>(types), w).apply(v);
}

SymmetricPureState rotate_basis(const SymmetricPureState& psi, const ObservableBasis& to) {
  if (to.d() != psi.d()) throw ValidationError("rotate_basis: dimension mismatch");
  CMatrix w = to.u.adjoint() * psi.basis().u;
  CVector c = psi.amplitudes();
  InducedAction(psi.types_ptr(), w).apply(c);
  return SymmetricPureState::from_amplitudes(psi.N(), to, c / c.norm());
}

SymmetricDensity rotate_basis(const SymmetricDensity& rho, const ObservableBasis& to) {
  if (to.d() != rho.d()) throw ValidationError("rotate_basis: dimension mismatch");
  CMatrix U = induced_unitary(to.u.adjoint() * rho.basis().u, rho.N());
  return SymmetricDensity(rho.N(), to, U * rho.matrix() * U.adjoint(), std::numeric_limits<std::size_t>::max());
}

SymmetricPureState rotate_basis(const SymmetricPureState& psi, const ObservableBasis& from, const ObservableBasis& to) {
  require_frame(psi.basis(), from);
  return rotate_basis(psi, to);
}

SymmetricDensity rotate_basis(const SymmetricDensity& rho, const ObservableBasis& from, const ObservableBasis& to) {
  require_frame(rho.basis(), from);
  return rotate_basis(rho, to);
}

}  // namespace macrobs
