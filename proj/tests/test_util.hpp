#pragma once

#include <random>
#include <vector>

#include "macrobs/linalg.hpp"

namespace testutil {

using macrobs::CMatrix;
using macrobs::CVector;
using macrobs::cplx;

inline CMatrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

inline std::vector<cplx> random_beta(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> b(d);
  double n = 0;
  for (auto& x : b) {
    x = cplx(g(rng), g(rng));
    n += std::norm(x);
  }
  for (auto& x : b) x /= std::sqrt(n);
  return b;
}

inline CVector to_vector(const std::vector<cplx>& b) { return Eigen::Map<const CVector>(b.data(), b.size()); }

inline CMatrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (z + z.adjoint());
}

inline CMatrix random_density(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  CMatrix r = z * z.adjoint();
  return r / r.trace().real();
}

inline double max_abs(const CMatrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace testutil
