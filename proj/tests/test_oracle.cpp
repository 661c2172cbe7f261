#include <cmath>
#include <random>

#include "doctest.h"
#include "macrobs/errors.hpp"
#include "macrobs/oracle.hpp"
#include "test_util.hpp"

using namespace macrobs;
using testutil::max_abs;

TEST_CASE("dense size caps") {
  CHECK(oracle::dense_dim(14, 2) == 16384);
  CHECK_THROWS_AS(oracle::dense_dim(15, 2), ResourceError);
  CHECK(oracle::dense_dim(15, 2, {oracle::kDefaultCap, true}) == 32768);
  CHECK_THROWS_AS(oracle::dense_dim(21, 2, {oracle::kDefaultCap, true}), ResourceError);
  CHECK_THROWS_AS(oracle::dense_matrix_dim(13, 2), ResourceError);
}

TEST_CASE("string indexing") {
  // Molecule 0 is the most significant digit.
  CHECK(oracle::string_letters(5, 3, 2) == std::vector<int>{1, 0, 1});
  CHECK(oracle::string_type(5, 3, 2) == TypeVector{1, 2});
  CVector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CVector ab = oracle::product_vector({a, b});
  CHECK(std::abs(ab(1) - 1.0) < 1e-15);
}

TEST_CASE("type projectors: orthogonal, complete, correct rank") {
  auto z = ObservableBasis::computational(2);
  const int N = 4;
  auto types = enumerate_types(N, 2);
  CMatrix sum = CMatrix::Zero(16, 16);
  for (const auto& L : types) {
    CMatrix q = oracle::type_projector(N, z, L).matrix();
    CHECK(max_abs(q * q - q) < 1e-12);
    for (const auto& M : types)
      if (M != L) CHECK(max_abs(q * oracle::type_projector(N, z, M).matrix()) < 1e-12);
    sum += q;
  }
  CHECK(max_abs(sum - CMatrix::Identity(16, 16)) < 1e-12);
  CHECK(oracle::type_projector(N, z, {2, 2}).rank() == doctest::Approx(6.0));

  // Rotated frame: projector still idempotent, rank preserved.
  std::mt19937_64 rng(2);
  auto b = ObservableBasis::from_unitary(testutil::random_unitary(3, rng));
  CMatrix q = oracle::type_projector(3, b, {1, 1, 1}).matrix();
  CHECK(max_abs(q * q - q) < 1e-12);
  CHECK(q.trace().real() == doctest::Approx(6.0));
}

TEST_CASE("coarse POVM: completeness over outcomes") {
  auto z = ObservableBasis::computational(2);
  const int N = 3;
  for (auto k : {SmoothingKernel::gaussian(0.2), SmoothingKernel::gaussian(0.2, Readout::fraction(0, 2)),
                 SmoothingKernel::exact()}) {
    auto quad = outcome_quadrature(k, N, 2);
    CMatrix acc = CMatrix::Zero(8, 8);
    for (std::size_t i = 0; i < quad.nodes.size(); ++i)
      acc += quad.weights[i] * oracle::povm_element(N, z, k, quad.nodes[i]).matrix();
    CHECK(max_abs(acc - CMatrix::Identity(8, 8)) < 1e-7);
  }
  // Square of the Kraus operator is the POVM element.
  auto k = SmoothingKernel::gaussian(0.15);
  CMatrix c = oracle::coarse_povm(N, z, k, {0.4, 0.6}).matrix();
  CHECK(max_abs(c * c - oracle::povm_element(N, z, k, {0.4, 0.6}).matrix()) < 1e-12);
}

TEST_CASE("histories: trivial bins") {
  auto z = ObservableBasis::computational(2);
  auto x = ObservableBasis::spin('x');
  std::mt19937_64 rng(3);
  CVector psi = oracle::product_vector(std::vector<CVector>(4, testutil::to_vector(testutil::random_beta(2, rng))));
  auto k = SmoothingKernel::gaussian(0.1, Readout::fraction(0, 2));
  CHECK(oracle::history_probability(psi, 4, {}) == doctest::Approx(1.0));
  oracle::Event all{z, k, -INFINITY, INFINITY};
  CHECK(oracle::history_probability(psi, 4, {all, all}) == doctest::Approx(1.0));

  // Bins partitioning the line: probabilities over all two-step histories sum to one.
  std::vector<double> edges = {-INFINITY, 0.25, 0.5, 0.75, INFINITY};
  double tot = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      oracle::Event e1{z, k, edges[a], edges[a + 1]};
      oracle::Event e2{x, k, edges[b], edges[b + 1]};
      double p = oracle::history_probability(psi, 4, {e1, e2});
      CHECK(p >= -1e-15);
      tot += p;
    }
  CHECK(tot == doctest::Approx(1.0).epsilon(1e-10));

  CMatrix rho = psi * psi.adjoint();
  oracle::Event e1{z, k, 0.25, 0.5}, e2{x, k, 0.5, 0.75};
  CHECK(oracle::history_probability(rho, 4, {e1, e2}) ==
        doctest::Approx(oracle::history_probability(psi, 4, {e1, e2})).epsilon(1e-12));
}

TEST_CASE("fidelity: two independent paths") {
  std::mt19937_64 rng(4);
  for (int d : {2, 3, 6}) {
    CMatrix a = testutil::random_density(d, rng), b = testutil::random_density(d, rng);
    double f1 = oracle::fidelity(a, b), f2 = oracle::fidelity_via_product(a, b);
    CHECK(f1 == doctest::Approx(f2).epsilon(1e-9));
    CHECK(f1 == doctest::Approx(oracle::fidelity(b, a)).epsilon(1e-9));
    CHECK(oracle::fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f1 <= 1.0 + 1e-12);
  }
  // Pure states reduce to the squared overlap.
  CVector u = testutil::to_vector(testutil::random_beta(4, rng)), v = testutil::to_vector(testutil::random_beta(4, rng));
  CHECK(oracle::fidelity(u * u.adjoint(), v * v.adjoint()) == doctest::Approx(std::norm(u.dot(v))).epsilon(1e-9));
}

TEST_CASE("partial trace and local maps") {
  std::mt19937_64 rng(5);
  CMatrix a = testutil::random_density(2, rng), b = testutil::random_density(2, rng), c = testutil::random_density(2, rng);
  CMatrix rho = oracle::product_density({a, b, c});
  CHECK(max_abs(oracle::reduce_to_molecule(rho, 3, 2, 0) - a) < 1e-12);
  CHECK(max_abs(oracle::reduce_to_molecule(rho, 3, 2, 1) - b) < 1e-12);
  CHECK(max_abs(oracle::reduce_to_molecule(rho, 3, 2, 2) - c) < 1e-12);

  CMatrix w = testutil::random_unitary(2, rng);
  CVector v = CVector::Random(8);
  CVector v1 = v;
  oracle::apply_local_all(v1, w, 3);
  CHECK(max_abs(v1 - oracle::tensor_power(w, 3) * v) < 1e-12);
  CVector v2 = v;
  oracle::apply_local(v2, w, 1, 3);
  CHECK(max_abs(v2 - kron(kron(CMatrix::Identity(2, 2), w), CMatrix::Identity(2, 2)) * v) < 1e-12);
  CHECK(max_abs(oracle::conjugate_all(rho, w, 3) - oracle::product_density({w * a * w.adjoint(), w * b * w.adjoint(),
                                                                             w * c * w.adjoint()})) < 1e-12);
}

TEST_CASE("macroscopic observable is diagonal on type projectors") {
  auto z = ObservableBasis::computational(2);
  CMatrix A = oracle::macroscopic_observable(z.observable(), 4);
  for (const auto& L : enumerate_types(4, 2)) {
    CMatrix q = oracle::type_projector(4, z, L).matrix();
    CHECK(max_abs(A * q - macro_eigenvalue(L, z) * q) < 1e-12);
  }
}

TEST_CASE("symmetric embedding is an isometry onto the symmetric subspace") {
  std::mt19937_64 rng(6);
  auto b = ObservableBasis::from_unitary(testutil::random_unitary(3, rng));
  CMatrix V = oracle::symmetric_embedding(4, b);
  CHECK(max_abs(V.adjoint() * V - CMatrix::Identity(V.cols(), V.cols())) < 1e-12);
  CMatrix swap01 = CMatrix::Zero(81, 81);
  for (std::size_t i = 0; i < 81; ++i) {
    auto s = oracle::string_letters(i, 4, 3);
    std::swap(s[0], s[1]);
    std::size_t j = 0;
    for (int x : s) j = j * 3 + x;
    swap01(j, i) = 1;
  }
  CHECK(max_abs(swap01 * V - V) < 1e-12);
}
