#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace macrobs {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

bool is_unitary(const CMatrix& u, double tol = 1e-10);
bool is_hermitian(const CMatrix& a, double tol = 1e-10);

/// Square root of a Hermitian positive semi-definite matrix. Eigenvalues
/// below zero (numerical noise) are clamped to zero.
CMatrix psd_sqrt(const CMatrix& a);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& a);

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2 of two density matrices.
double uhlmann_fidelity(const CMatrix& a, const CMatrix& b);

/// <psi|rho|psi> for a normalized vector psi.
double overlap_fidelity(const CVector& psi, const CMatrix& rho);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Spectral norm (largest singular value).
double operator_norm(const CMatrix& a);

/// A unitary acting on two letters (a, b) and as identity on the others.
/// `g` is indexed (row, col) in the order (a, b).
struct TwoLevelRotation {
  int a = 0;
  int b = 1;
  Eigen::Matrix2cd g;
};

/// u = R_0 R_1 ... R_{k-1} diag(phases).
struct TwoLevelDecomposition {
  std::vector<TwoLevelRotation> rotations;
  CVector phases;
};

/// Givens-style factorization of a unitary into two-level unitaries and a
/// diagonal of phases.
TwoLevelDecomposition decompose_two_level(const CMatrix& u);

/// Rebuilds the dense unitary of a decomposition (test helper).
CMatrix compose_two_level(const TwoLevelDecomposition& dec);

/// Nodes and weights for E[f(Z)], Z ~ N(0,1), exact for polynomials of
/// degree < 2n (Golub-Welsch on the probabilists' Hermite recurrence).
struct GaussHermite {
  RVector nodes;
  RVector weights;
};
GaussHermite gauss_hermite(int n);

}  // namespace macrobs
