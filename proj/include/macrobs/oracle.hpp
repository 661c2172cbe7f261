#pragma once

#include <cstddef>
#include <vector>

#include "macrobs/linalg.hpp"
#include "macrobs/smoothing.hpp"
#include "macrobs/symmetric.hpp"

namespace macrobs {

/// Brute-force reference on the full d^N space. Strings are indexed in mixed
/// radix d with molecule 0 as the most significant digit, so kron(a, b)
/// puts a on the lower-numbered molecule.
namespace oracle {

constexpr std::size_t kDefaultCap = std::size_t{1} << 14;
constexpr std::size_t kHardCap = std::size_t{1} << 20;
/// Operations that hold a d^N x d^N matrix are further limited to this.
constexpr std::size_t kMatrixCap = 4096;

struct Limits {
  std::size_t cap = kDefaultCap;
  /// Raises the vector cap to kHardCap.
  bool allow_large = false;
};

/// d^N, throwing ResourceError when it exceeds the cap.
std::size_t dense_dim(int N, int d, const Limits& lim = {});
std::size_t dense_matrix_dim(int N, int d, const Limits& lim = {});

std::vector<int> string_letters(std::size_t idx, int N, int d);
TypeVector string_type(std::size_t idx, int N, int d);

/// w acting on one molecule / on every molecule.
void apply_local(CVector& v, const CMatrix& w, int site, int N);
void apply_local_all(CVector& v, const CMatrix& w, int N);
/// W rho W^dag with W = w^{(x)N}.
CMatrix conjugate_all(const CMatrix& rho, const CMatrix& w, int N);

CVector product_vector(const std::vector<CVector>& psis);
CMatrix product_density(const std::vector<CMatrix>& nus);
CMatrix tensor_power(const CMatrix& w, int N);

/// Columns are the symmetric type vectors |L> of `basis` in canonical order.
CMatrix symmetric_embedding(int N, const ObservableBasis& basis, const Limits& lim = {});
CVector embed(const SymmetricPureState& psi, const Limits& lim = {});
CMatrix embed(const SymmetricDensity& rho, const Limits& lim = {});

/// Operator U^{(x)N} diag(values) U^{dag (x)N}, diagonal in the product
/// eigenbasis of `basis`. Held as the diagonal plus the single-molecule
/// basis change.
struct DiagonalOperator {
  ObservableBasis basis;
  int N = 0;
  RVector values;

  CMatrix matrix() const;
  void apply(CVector& v) const;
  /// O rho O^dag.
  CMatrix sandwich(const CMatrix& rho) const;
  double expectation(const CMatrix& rho) const;
  double rank(double tol = 1e-12) const;
};

/// Q_L: projector onto strings of type L.
DiagonalOperator type_projector(int N, const ObservableBasis& basis, const TypeVector& L, const Limits& lim = {});
/// Q~_l = sum_L sqrt(q_L(l)) Q_L.
DiagonalOperator coarse_povm(int N, const ObservableBasis& basis, const SmoothingKernel& k, const Outcome& l,
                             const Limits& lim = {});
/// E_l = sum_L q_L(l) Q_L.
DiagonalOperator povm_element(int N, const ObservableBasis& basis, const SmoothingKernel& k, const Outcome& l,
                              const Limits& lim = {});

/// One step of a history: the bin-integrated POVM element of [lo, hi) and
/// its square root as Kraus operator.
struct Event {
  ObservableBasis basis;
  SmoothingKernel kernel;
  double lo = 0.0;
  double hi = 0.0;
};

double history_probability(const CVector& psi, int N, const std::vector<Event>& events, const Limits& lim = {});
double history_probability(const CMatrix& rho, int N, const std::vector<Event>& events, const Limits& lim = {});

double outcome_density(const CMatrix& rho, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                       const Outcome& l);
CMatrix conditional_post(const CMatrix& rho, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                         const Outcome& l);
/// rho_XY G(type X, type Y) in the product eigenbasis.
CMatrix averaged_post(const CMatrix& rho, int N, const ObservableBasis& basis, const SmoothingKernel& k);

/// Partial trace keeping molecule `site`.
CMatrix reduce_to_molecule(const CMatrix& rho, int N, int d, int site = 0);

/// Uhlmann fidelity through sqrt(A).
double fidelity(const CMatrix& a, const CMatrix& b);
/// Independent path: F = (sum_i sqrt(lambda_i))^2 with lambda_i the
/// eigenvalues of the (non-Hermitian) product A B.
double fidelity_via_product(const CMatrix& a, const CMatrix& b);

/// sum_k a_(k): a on molecule k, identity elsewhere.
CMatrix macroscopic_observable(const CMatrix& a, int N, const Limits& lim = {});

}  // namespace oracle
}  // namespace macrobs
