#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "macrobs/combinatorics.hpp"
#include "macrobs/linalg.hpp"
#include "macrobs/smoothing.hpp"

namespace macrobs {

/// Single-molecule observable a = sum_j alpha_j |x_j><x_j|. Column j of u is
/// |x_j> in the computational frame.
struct ObservableBasis {
  CMatrix u;
  std::vector<double> alpha;

  /// Computational basis with alpha_j = (d-1)/2 - j (spin projection for d=2).
  static ObservableBasis computational(int d);
  static ObservableBasis from_unitary(const CMatrix& u, std::vector<double> alpha = {});
  /// Eigenbasis of a Hermitian matrix, eigenvalues in descending order; each
  /// eigenvector is phased so its first non-negligible entry is real positive.
  static ObservableBasis from_observable(const CMatrix& a);
  /// Qubit spin axes 'x', 'y', 'z' for a = sigma/2.
  static ObservableBasis spin(char axis);

  int d() const { return static_cast<int>(u.rows()); }
  CMatrix observable() const;
  bool same_frame(const ObservableBasis& other, double tol = 1e-12) const;
};

CMatrix pauli(char axis);

/// Density matrix of one molecule in the computational frame.
struct MoleculeState {
  CMatrix rho;

  static MoleculeState pure(const CVector& psi);
  static MoleculeState maximally_mixed(int d);
  /// Qubit state from a Bloch vector (|r| <= 1).
  static MoleculeState bloch(double x, double y, double z);

  int d() const { return static_cast<int>(rho.rows()); }
  void validate(double tol = 1e-10) const;
  /// u^dag rho u: matrix elements in the eigenbasis of `basis`.
  CMatrix in_basis(const ObservableBasis& basis) const;
  /// R_j = <x_j|rho|x_j>.
  ProbVector letter_probabilities(const ObservableBasis& basis) const;
  std::vector<double> bloch_vector() const;
};

double trace_distance(const MoleculeState& a, const MoleculeState& b);

/// Shared, cached type basis (thread-safe).
std::shared_ptr<const TypeBasis> shared_type_basis(int N, int d);

/// A permutation-symmetric pure state sum_L c_L |L> with |L> built from the
/// eigenbasis of `basis`. Amplitudes are kept as (log|c_L|, arg c_L).
class SymmetricPureState {
 public:
  SymmetricPureState(int N, ObservableBasis basis, std::vector<double> logmag, std::vector<double> phase);
  static SymmetricPureState from_amplitudes(int N, ObservableBasis basis, const CVector& c);

  int N() const { return n_; }
  int d() const { return basis_.d(); }
  std::size_t size() const { return logmag_.size(); }
  const ObservableBasis& basis() const { return basis_; }
  const TypeBasis& types() const { return *types_; }
  std::shared_ptr<const TypeBasis> types_ptr() const { return types_; }
  const std::vector<double>& log_magnitudes() const { return logmag_; }
  const std::vector<double>& phases() const { return phase_; }

  CVector amplitudes() const;
  /// |c_L|^2 in canonical order.
  std::vector<double> probabilities() const;
  double norm_squared() const;

 private:
  int n_;
  ObservableBasis basis_;
  std::shared_ptr<const TypeBasis> types_;
  std::vector<double> logmag_;
  std::vector<double> phase_;
};

constexpr std::size_t kDefaultDensityCap = 4096;

/// T x T density matrix over the type basis of `basis`.
class SymmetricDensity {
 public:
  SymmetricDensity(int N, ObservableBasis basis, CMatrix rho, std::size_t cap = kDefaultDensityCap);
  static SymmetricDensity from_pure(const SymmetricPureState& psi, std::size_t cap = kDefaultDensityCap);

  int N() const { return n_; }
  int d() const { return basis_.d(); }
  std::size_t size() const { return static_cast<std::size_t>(rho_.rows()); }
  const ObservableBasis& basis() const { return basis_; }
  const TypeBasis& types() const { return *types_; }
  const CMatrix& matrix() const { return rho_; }

  /// Hermitian, unit trace and PSD (eigenvalues >= -psd_tol).
  void validate(double tol = 1e-10, double psd_tol = 1e-8) const;

 private:
  int n_;
  ObservableBasis basis_;
  std::shared_ptr<const TypeBasis> types_;
  CMatrix rho_;
};

/// A coarse type measurement: kernel q_L(l) acting on the types of `basis`.
struct TypeMeasurement {
  ObservableBasis basis;
  SmoothingKernel kernel;
};

/// |psi>^{(x)N} for |psi> = sum_j beta_j |x_j>.
SymmetricPureState product_state(const std::vector<cplx>& beta, int N, const ObservableBasis& basis);
/// Same for a pure molecule state given in the computational frame.
SymmetricPureState product_state(const CVector& psi, int N, const ObservableBasis& basis);

/// Eigenvalue of A_N = sum_k a_(k) on the type L: sum_j L_j alpha_j.
double macro_eigenvalue(const TypeVector& L, const ObservableBasis& basis);

/// Readout centers of every type in canonical order.
std::vector<std::vector<double>> type_centers(const TypeBasis& types, const Readout& r);

/// Density (or probability mass for discrete kernels) of outcome l.
double outcome_density(const SymmetricPureState& psi, const TypeMeasurement& m, const Outcome& l);
double outcome_density(const SymmetricDensity& rho, const TypeMeasurement& m, const Outcome& l);

/// Q_l rho Q_l^dag / P and Q_l |psi> / sqrt(P).
SymmetricDensity conditional_post_density(const SymmetricDensity& rho, const TypeMeasurement& m, const Outcome& l);
SymmetricPureState conditional_post_state(const SymmetricPureState& psi, const TypeMeasurement& m, const Outcome& l);

/// sum_{L,L'} G(L,L') rho_{LL'} |L><L'|.
SymmetricDensity averaged_post_density(const SymmetricPureState& psi, const TypeMeasurement& m,
                                       std::size_t cap = kDefaultDensityCap);
SymmetricDensity averaged_post_density(const SymmetricDensity& rho, const TypeMeasurement& m);

double fidelity(const SymmetricDensity& a, const SymmetricDensity& b);
double fidelity(const SymmetricPureState& psi, const SymmetricDensity& rho);
double fidelity(const SymmetricPureState& a, const SymmetricPureState& b);

struct PairSumResult {
  double fidelity = 0.0;
  double dropped_mass = 0.0;  // probability outside the retained window
  std::size_t kept = 0;
};

/// F(psi, averaged post state) = sum_{L,L'} p_L p_L' G(L,L') for a pure
/// state, without building the T x T matrix. Types with p_L below
/// `min_prob` are skipped; their total is reported.
PairSumResult averaged_fidelity(const SymmetricPureState& psi, const TypeMeasurement& m, double min_prob = 0.0);

/// Same double sum for the product state with letter probabilities R,
/// enumerating only the window |L_j - N R_j| <= trunc * sqrt(N R_j (1-R_j)) + 1.
/// Works for N up to ~1e5 at d = 2 without touching the full type basis.
PairSumResult product_averaged_fidelity(const ProbVector& R, int N, const SmoothingKernel& k, double trunc = 8.0);

/// Types of N letters inside the multinomial window described above.
std::vector<TypeVector> multinomial_window(const ProbVector& R, int N, double trunc = 8.0);

/// One-molecule marginal in the computational frame.
MoleculeState reduce_single_molecule(const SymmetricDensity& rho);
MoleculeState reduce_single_molecule(const SymmetricPureState& psi);

/// Restriction of w^{(x)N} to the symmetric subspace in the canonical type
/// basis, assembled column by column from the matrix-free induced action.
CMatrix induced_unitary(const CMatrix& w, int N);

/// Induced action of a 2 x 2 unitary on the m+1 types of m molecules, from
/// an Euler split and the eigenbasis of the rotation generator. Stable for
/// large m; throws ResourceError above m = 4096.
CMatrix induced_qubit(const CMatrix& g, int m);
/// v <- induced_qubit(g, v.size() - 1) v in O(m^2) without forming the matrix.
void apply_induced_qubit(const CMatrix& g, CVector& v);

/// Induced action of a D x D unitary w on vectors over the types of
/// `types` (D letters) without forming the T x T matrix: w is factored into
/// two-level rotations and phases, and each rotation acts on the slices of
/// fixed spectator counts through a (m+1) x (m+1) induced qubit matrix.
/// Reusable across many vectors.
class InducedAction {
 public:
  InducedAction(std::shared_ptr<const TypeBasis> types, const CMatrix& w);
  void apply(CVector& v) const;

 private:
  struct Rotation {
    std::vector<CMatrix> levels;       // induced qubit matrices by slice size m
    std::vector<std::size_t> index;    // slice members, slice after slice
    std::vector<std::size_t> offsets;  // slice starts into `index`
  };
  std::shared_ptr<const TypeBasis> types_;
  std::vector<Rotation> rotations_;  // in application order
  std::vector<double> angles_;       // phase per letter
};

/// Applies the induced action of a D x D unitary w to a vector over the
/// types of `types` (D letters) without forming the T x T matrix: w is
/// factored into two-level rotations and phases, and each rotation acts on
/// the slices of fixed spectator counts.
void apply_induced(const TypeBasis& types, const CMatrix& w, CVector& v);

/// Re-express a state in the eigenbasis of `to`.
SymmetricPureState rotate_basis(const SymmetricPureState& psi, const ObservableBasis& to);
SymmetricDensity rotate_basis(const SymmetricDensity& rho, const ObservableBasis& to);
SymmetricPureState rotate_basis(const SymmetricPureState& psi, const ObservableBasis& from, const ObservableBasis& to);
SymmetricDensity rotate_basis(const SymmetricDensity& rho, const ObservableBasis& from, const ObservableBasis& to);

}  // namespace macrobs
