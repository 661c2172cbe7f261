#include <cmath>
#include <random>

#include "doctest.h"
#include "macrobs/errors.hpp"
#include "macrobs/nmr.hpp"
#include "macrobs/oracle.hpp"
#include "test_util.hpp"

using namespace macrobs;
using testutil::max_abs;

namespace {

const double kR2 = 1.0 / std::sqrt(2.0);

SymmetricPureState balanced(int N) {
  return product_state(std::vector<cplx>{kR2, kR2}, N, ObservableBasis::spin('x'));
}

CoilModel coil_of(int N, double lambda, double sigma_mix, double coupling = 1.0) {
  CoilModel c;
  c.N = N;
  c.lambda = lambda;
  c.sigma_mix = sigma_mix;
  c.coupling = coupling;
  return c;
}

// Scaling and squaring on a Taylor series.
CMatrix expm(const CMatrix& a) {
  const double n = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = std::max(0, static_cast<int>(std::ceil(std::log2(n + 1e-300))) + 1);
  CMatrix b = a / std::pow(2.0, s);
  CMatrix term = CMatrix::Identity(a.rows(), a.cols()), out = term;
  for (int k = 1; k < 30; ++k) {
    term = term * b / static_cast<double>(k);
    out += term;
  }
  for (int i = 0; i < s; ++i) out = out * out;
  return out;
}

double normal_pdf(double x, double s) { return std::exp(-0.5 * x * x / (s * s)) / (std::sqrt(2 * M_PI) * s); }

}  // namespace

TEST_CASE("gauss-hermite moments") {
  auto gh = gauss_hermite(64);
  double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
  for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) {
    const double x = gh.nodes(i), w = gh.weights(i);
    m0 += w;
    m2 += w * x * x;
    m4 += w * std::pow(x, 4);
    m6 += w * std::pow(x, 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-11));
}

TEST_CASE("thermal molecule states") {
  CMatrix h = 0.5 * pauli('z');
  auto nu = thermal_molecule_state({h, 1.0});
  const double z = std::exp(-0.5) + std::exp(0.5);
  CHECK(std::abs(nu.rho(0, 0).real() - std::exp(-0.5) / z) < 1e-14);
  CHECK(std::abs(nu.rho(1, 1).real() - std::exp(0.5) / z) < 1e-14);
  CHECK(std::abs(nu.rho(0, 1)) < 1e-15);

  CHECK(max_abs(thermal_molecule_state({h, 0.0}).rho - 0.5 * CMatrix::Identity(2, 2)) < 1e-15);
  auto g = thermal_molecule_state({h, std::numeric_limits<double>::infinity()});
  CHECK(std::abs(g.rho(1, 1).real() - 1.0) < 1e-15);

  // Degenerate ground space gives the normalized projector.
  CMatrix h3 = CMatrix::Zero(3, 3);
  h3(2, 2) = 1.0;
  auto g3 = thermal_molecule_state({h3, std::numeric_limits<double>::infinity()});
  CHECK(std::abs(g3.rho(0, 0).real() - 0.5) < 1e-15);
  CHECK(std::abs(g3.rho(2, 2).real()) < 1e-15);

  std::mt19937_64 rng(11);
  for (int d : {2, 3, 4}) {
    CMatrix hr = testutil::random_hermitian(d, rng);
    for (double beta : {0.3, 2.0, 7.0}) {
      CMatrix e = expm(-beta * hr);
      e /= e.trace().real();
      CHECK(max_abs(thermal_molecule_state({hr, beta}).rho - e) < 1e-10);
    }
  }
  CHECK_THROWS_AS(thermal_molecule_state({CMatrix::Zero(2, 3), 1.0}), ValidationError);
  CMatrix nh = CMatrix::Zero(2, 2);
  nh(0, 1) = 1.0;
  CHECK_THROWS_AS(thermal_molecule_state({nh, 1.0}), ValidationError);
}

TEST_CASE("collective pulses against dense") {
  std::mt19937_64 rng(5);
  const int N = 4;
  for (char axis : {'z', 'x', 'y'}) {
    auto basis = ObservableBasis::spin(axis);
    auto psi = product_state(testutil::random_beta(2, rng), N, basis);
    CVector a = oracle::embed(rotate_basis(psi, basis, ObservableBasis::spin('z')));
    // Superpose two types so the check is not product-only.
    CVector c = psi.amplitudes();
    c(1) += 0.3;
    psi = SymmetricPureState::from_amplitudes(N, basis, c / c.norm());
    CMatrix w = testutil::random_unitary(2, rng);
    CVector dense = oracle::embed(psi);
    oracle::apply_local_all(dense, w, N);
    auto out = apply_collective_pulse(psi, w);
    CHECK((oracle::embed(out) - dense).norm() < 1e-12);

    auto rho = SymmetricDensity::from_pure(psi);
    CMatrix dr = oracle::conjugate_all(oracle::embed(rho), w, N);
    CHECK(max_abs(oracle::embed(apply_collective_pulse(rho, w)) - dr) < 1e-12);
    (void)a;
  }
  auto nu = MoleculeState::bloch(0.1, 0.2, 0.3);
  CMatrix w = testutil::random_unitary(2, rng);
  CHECK(max_abs(apply_collective_pulse(nu, w).rho - w * nu.rho * w.adjoint()) < 1e-15);
  CHECK_THROWS_AS(apply_collective_pulse(nu, CMatrix::Identity(3, 3)), ValidationError);
  CHECK_THROWS_AS(apply_collective_pulse(nu, 2.0 * CMatrix::Identity(2, 2)), ValidationError);
}

TEST_CASE("ideal coil against the dense model") {
  const int N = 4;
  std::mt19937_64 rng(8);
  auto coil = coil_of(N, 0.1, 0.0, 1.7);
  auto k = ideal_coil_kernel(coil);
  CHECK(k.sigma() == 0.1);
  auto psi = product_state(testutil::random_beta(2, rng), N, ObservableBasis::spin('z'));
  CMatrix dense = oracle::embed(SymmetricDensity::from_pure(psi));
  for (double l : {-0.2, 0.1, 0.5, 0.77}) {
    const double r = coil.to_field(l);
    const double want = oracle::outcome_density(dense, N, coil.basis, k, {l}) / coil.jacobian();
    CHECK(std::abs(ideal_field_density(coil, psi, r) - want) < 1e-12);
    CHECK(std::abs(thermal_outcome_density(coil, psi, r) - want) < 1e-12);

    auto post = thermal_coil_update(coil, psi, r);
    REQUIRE(post.branches.size() == 1);
    CHECK(std::abs(post.density - want) < 1e-12);
    CMatrix dpost = oracle::conditional_post(dense, N, coil.basis, k, {l});
    CHECK(max_abs(oracle::embed(SymmetricDensity::from_pure(post.branches[0])) - dpost) < 1e-12);
  }
  CHECK_THROWS_AS(ideal_coil_kernel(coil_of(N, 0.1, 0.01)), ValidationError);
}

TEST_CASE("ideal coil kernel reproduces the conditional density at N = 100") {
  auto coil = coil_of(100, 0.1, 0.0);
  auto psi = balanced(100);
  TypeMeasurement m{coil.basis, SmoothingKernel::gaussian(0.1, Readout::fraction(0, 2))};
  for (double l : {0.3, 0.5, 0.61}) {
    auto a = conditional_post_state(psi, m, {l});
    auto b = thermal_coil_update(coil, psi, coil.to_field(l)).branches.at(0);
    CHECK(fidelity(a, b) > 1.0 - 1e-12);
    CHECK(std::abs(ideal_field_density(coil, psi, coil.to_field(l)) * coil.jacobian() -
                   outcome_density(psi, m, {l})) < 1e-12);
  }
}

TEST_CASE("field density normalizes in r for any coupling") {
  for (double g : {0.5, 1.0, 3.0}) {
    auto coil = coil_of(20, 0.05, 0.03, g);
    auto psi = balanced(20);
    const double lo = coil.to_field(-0.6), hi = coil.to_field(1.6);
    const double h = coil.jacobian() * 0.05 / 40;
    double s = 0;
    for (double r = lo; r <= hi; r += h) s += h * thermal_outcome_density(coil, psi, r);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("thermal density is the q-average of the ideal one") {
  const int N = 12;
  std::mt19937_64 rng(2);
  auto psi = product_state(testutil::random_beta(2, rng), N, ObservableBasis::spin('x'));
  const double lam = 0.04, sm = 0.06;
  auto coil = coil_of(N, lam, sm, 2.0), ideal = coil_of(N, lam, 0.0, 2.0);
  for (double l : {0.2, 0.45, 0.9}) {
    const double r = coil.to_field(l);
    // Trapezoid in q over +-10 sigma_mix.
    const double h = sm / 200;
    double want = 0;
    for (double q = -10 * sm; q <= 10 * sm; q += h)
      want += h * normal_pdf(q, sm) * ideal_field_density(ideal, psi, coil.to_field(l - q));
    CHECK(thermal_outcome_density(coil, psi, r) == doctest::Approx(want).epsilon(1e-8));
    CHECK(thermal_coil_update(coil, psi, r).density == doctest::Approx(want).epsilon(1e-8));
  }
}

TEST_CASE("thermal densities agree across state representations") {
  const int N = 6;
  auto coil = coil_of(N, 0.05, 0.08);
  auto nu = MoleculeState::pure(testutil::to_vector({cplx(0.8, 0), cplx(0, 0.6)}));
  auto psi = product_state(std::vector<cplx>{cplx(0.8, 0), cplx(0, 0.6)}, N, ObservableBasis::spin('z'));
  auto rho = SymmetricDensity::from_pure(psi);
  for (double l : {0.1, 0.5, 0.8}) {
    const double r = coil.to_field(l);
    const double a = thermal_outcome_density(coil, psi, r);
    CHECK(std::abs(thermal_outcome_density(coil, rho, r) - a) < 1e-12);
    CHECK(std::abs(thermal_outcome_density(coil, nu, r) - a) < 1e-12);

    auto post = thermal_coil_update(coil, psi, r);
    auto dpost = thermal_coil_update(coil, rho, r);
    CMatrix mix = CMatrix::Zero(static_cast<Eigen::Index>(dpost.size()), static_cast<Eigen::Index>(dpost.size()));
    for (std::size_t i = 0; i < post.branches.size(); ++i)
      mix += post.weights[i] *
             rotate_basis(SymmetricDensity::from_pure(post.branches[i]), dpost.basis()).matrix();
    CHECK(max_abs(mix - dpost.matrix()) < 1e-10);
  }
}

TEST_CASE("thermal update against a dense q-average") {
  const int N = 4;
  std::mt19937_64 rng(21);
  auto psi = product_state(testutil::random_beta(2, rng), N, ObservableBasis::spin('x'));
  auto coil = coil_of(N, 0.1, 0.07);
  auto k = SmoothingKernel::gaussian(0.1, Readout::fraction(0, 2));
  CMatrix dense = oracle::embed(SymmetricDensity::from_pure(psi));
  const double l = 0.62;
  const double h = 0.07 / 200;
  CMatrix acc = CMatrix::Zero(dense.rows(), dense.cols());
  double Z = 0;
  for (double q = -10 * 0.07; q <= 10 * 0.07; q += h) {
    const double P = oracle::outcome_density(dense, N, coil.basis, k, {l - q});
    const double w = h * normal_pdf(q, 0.07) * P;
    acc += w * oracle::conditional_post(dense, N, coil.basis, k, {l - q});
    Z += w;
  }
  acc /= Z;
  auto post = thermal_coil_update(coil, SymmetricDensity::from_pure(psi), coil.to_field(l));
  CHECK(max_abs(oracle::embed(post) - acc) < 1e-8);
  CHECK(std::abs(oracle::embed(post).trace().real() - 1.0) < 1e-12);
}

TEST_CASE("outcome-averaged fidelity does not depend on sigma_mix") {
  const int N = 20;
  auto psi = balanced(N);
  for (double sm : {0.0, 0.05, 0.2}) {
    auto coil = coil_of(N, 0.08, sm);
    // int P(r) F(psi, rho_{N|r}) dr by lattice.
    const double pad = 8 * (0.08 + sm);
    const double h = 0.08 / 20;
    double F = 0;
    for (double l = -pad; l <= 1 + pad; l += h) {
      const double r = coil.to_field(l);
      const double P = thermal_outcome_density(coil, psi, r) * coil.jacobian();
      if (P < 1e-300) continue;
      F += h * P * fidelity(psi, thermal_coil_update(coil, psi, r));
    }
    CHECK(F == doctest::Approx(post_fidelity(coil, psi)).epsilon(1e-7));
  }
}

TEST_CASE("outcome variance adds in quadrature") {
  const int N = 200;
  auto psi = balanced(N);
  for (auto [lam, sm] : {std::pair{0.02, 0.0}, std::pair{0.01, 0.03}, std::pair{0.05, 0.05}}) {
    auto coil = coil_of(N, lam, sm);
    const double pad = 10 * (lam + sm) + 0.1;
    const double h = lam / 20;
    double m0 = 0, m1 = 0, m2 = 0;
    for (double l = 0.5 - pad; l <= 0.5 + pad; l += h) {
      const double P = thermal_outcome_density(coil, psi, coil.to_field(l)) * coil.jacobian();
      m0 += h * P;
      m1 += h * P * l;
      m2 += h * P * l * l;
    }
    const double var = m2 / m0 - (m1 / m0) * (m1 / m0);
    CHECK(var == doctest::Approx(outcome_variance(coil, psi)).epsilon(1e-7));
    CHECK(outcome_variance(coil, psi) ==
          doctest::Approx(0.25 / N + lam * lam + sm * sm).epsilon(1e-12));
  }
}

TEST_CASE("POVM completeness") {
  for (int N : {1, 7, 20, 50}) {
    CHECK(povm_completeness_error(coil_of(N, 0.05, 0.0)) < 1e-6);
    CHECK(povm_completeness_error(coil_of(N, 0.02, 0.05)) < 1e-6);
  }
  CHECK(povm_completeness_error(coil_of(10, 0.001, 0.099)) < 1e-6);
}

TEST_CASE("sampled field outcomes match the density moments") {
  const int N = 500;
  auto psi = balanced(N);
  auto coil = coil_of(N, 0.02, 0.03, 0.7);
  const std::size_t n = 100000;
  auto r = sample_field_outcomes(coil, psi, n, 99);
  double m = 0, m2 = 0;
  for (double x : r) m += x;
  m /= n;
  for (double x : r) m2 += (x - m) * (x - m);
  m2 /= (n - 1);
  const double var = outcome_variance(coil, psi) * coil.jacobian() * coil.jacobian();
  CHECK(std::abs(m - 0.0) < 3 * std::sqrt(var / n));
  CHECK(std::abs(m2 - var) < 3 * var * std::sqrt(2.0 / n));
  CHECK(sample_field_outcomes(coil, psi, 10, 7) == sample_field_outcomes(coil, psi, 10, 7));
}

TEST_CASE("fidelity grows with the coherent share of a fixed width") {
  const std::vector<double> f = {0.01, 0.05, 0.2, 0.5, 0.8, 1.0};
  auto pts = nmr_width_sweep(1000, 0.05, f, 2);
  REQUIRE(pts.size() == f.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].lambda + pts[i].sigma_mix == doctest::Approx(0.05));
    if (i) CHECK(pts[i].f_post >= pts[i - 1].f_post - 1e-12);
  }
  CHECK(pts.front().f_post < pts.back().f_post);
  CHECK_THROWS_AS(nmr_width_sweep(10, 0.05, {0.0}), ValidationError);
}

TEST_CASE("back-to-back spread follows the Gaussian posterior width") {
  for (int N : {100, 1000}) {
    auto psi = product_state(std::vector<cplx>{kR2, kR2}, N, ObservableBasis::spin('z'));
    const double s0 = 0.5 / std::sqrt(static_cast<double>(N));
    for (double mult : {0.1, 1.0, 10.0}) {
      auto b = back_to_back_spread(psi, mult * s0);
      CHECK(b.multinomial == doctest::Approx(s0).epsilon(1e-9));
      CHECK(b.spread / b.predicted > 0.5);
      CHECK(b.spread / b.predicted < 2.0);
      CHECK(b.spread <= b.multinomial + 1e-12);
    }
  }
}

TEST_CASE("coil validation") {
  auto psi = balanced(4);
  CHECK_THROWS_AS(thermal_outcome_density(coil_of(4, 0.0, 0.0), psi, 0.0), ValidationError);
  CHECK_THROWS_AS(thermal_outcome_density(coil_of(4, 0.1, -1.0), psi, 0.0), ValidationError);
  CHECK_THROWS_AS(thermal_outcome_density(coil_of(5, 0.1, 0.0), psi, 0.0), ValidationError);
  CHECK_THROWS_AS(thermal_outcome_density(coil_of(4, 0.1, 0.0, 0.0), psi, 0.0), ValidationError);
  CHECK_THROWS_AS(thermal_coil_update(coil_of(4, 0.001, 0.0), psi, 1e6), ZeroProbabilityError);
}
