#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <cmath>
#include <random>

#include "doctest.h"
#include "macrobs/errors.hpp"
#include "macrobs/oracle.hpp"
#include "macrobs/tradeoff.hpp"
#include "test_util.hpp"

using namespace macrobs;

namespace {

constexpr double kPi = 3.14159265358979323846;
const double r2 = 1.0 / std::sqrt(2.0);
const std::vector<cplx> balanced = {r2, r2};

}  // namespace

TEST_CASE("zero-sigma fidelity") {
  double brute = 0;
  for (int k = 0; k <= 4; ++k) brute += std::pow(boost::math::binomial_coefficient<double>(4, k), 2);
  CHECK(brute / 256.0 == 70.0 / 256.0);
  CHECK(std::abs(fidelity_zero_sigma(balanced, 4).exact - 70.0 / 256.0) < 1e-12);
  CHECK(fidelity_zero_sigma({1.0, 0.0}, 50).exact == doctest::Approx(1.0));
  CHECK(fidelity_zero_sigma({0.0, 1.0, 0.0}, 50).exact == doctest::Approx(1.0));
  CHECK(fidelity_zero_sigma({0.0, 1.0, 0.0}, 50).stirling == doctest::Approx(1.0));

  // Vandermonde: sum_k binom(N,k)^2 = binom(2N,N).
  for (int N : {100, 400, 1600, 3200}) {
    double vdm = std::exp(std::lgamma(2.0 * N + 1) - 2 * std::lgamma(N + 1.0) - 2 * N * std::log(2.0));
    auto z = fidelity_zero_sigma(balanced, N);
    CHECK(z.exact == doctest::Approx(vdm).epsilon(1e-10));
    CHECK(z.exact / z.asymptote == doctest::Approx(1.0).epsilon(0.01));
    CHECK(z.exact / z.stirling == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));
  }
  // d = 3 against direct enumeration.
  std::vector<cplx> b3 = {std::sqrt(0.2), std::sqrt(0.3), std::sqrt(0.5)};
  double s = 0;
  for (const auto& L : enumerate_types(30, 3)) s += std::pow(multinomial_pmf(L, {0.2, 0.3, 0.5}), 2);
  CHECK(fidelity_zero_sigma(b3, 30).exact == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("gaussian lower bound") {
  auto b = gaussian_fidelity_lower_bound(10000, 0.05, 2);
  CHECK(b.value == doctest::Approx(1.0 - (1.0 + std::log(100.0)) / 50.0).epsilon(1e-12));
  CHECK(b.value == doctest::Approx(0.8879).epsilon(1e-4));
  CHECK_FALSE(b.vacuous);
  auto small = gaussian_fidelity_lower_bound(10, 0.05, 2);
  CHECK(small.vacuous);
  CHECK(small.value == 0.0);
  double prev = 0;
  for (int N : {100, 1000, 10000, 100000, 1000000}) {
    double v = gaussian_fidelity_lower_bound(N, std::pow(N, -0.25), 2).value;
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(prev > 0.99);
  double D = 0.01;
  CHECK(gaussian_fidelity_lower_bound(1000, 0.05, 2, D).value ==
        doctest::Approx(std::exp(-D * D / (2 * 0.0025)) * std::pow(1 - std::exp(-1000 * 2 * D * D / 2), 2)));
  CHECK_THROWS_AS(gaussian_fidelity_lower_bound(10, 0.0, 2), ValidationError);
}

TEST_CASE("general lower bound") {
  CHECK(general_fidelity_lower_bound(100, 0.1, 1.0, 1.0, 0.0).value == 0.0);
  auto f = general_fidelity_lower_bound(100, 0.1, 5.0, 1.0, 0.1);
  CHECK(f.vacuous);
  CHECK(f.value == 0.0);
  CHECK(general_fidelity_lower_bound(100, 0.1, 0.5, 1.0, 0.2).value ==
        doctest::Approx((1 - 0.5) * (1 - std::exp(-100 * 0.04 / 2))));

  // Gaussian-calibrated (c, s = 1) against the exact engine.
  const int N = 10000;
  const double s = 0.05;
  auto k = SmoothingKernel::gaussian(s);
  std::vector<LipschitzSample> smp;
  for (int i = 0; i <= 200; ++i) {
    double c = 0.3 + 0.4 * i / 200.0;
    for (double l : {0.4, 0.5, 0.6})
      smp.push_back({{c, 1 - c}, {c + 1e-3, 1 - c - 1e-3}, {l, 1 - l}});
  }
  auto est = lipschitz_estimate(k, smp);
  REQUIRE(est.c > 0);
  double exact = exact_averaged_fidelity(balanced, N, k);
  double best = 0;
  for (int i = 1; i <= 400; ++i) best = std::max(best, general_fidelity_lower_bound(N, s, est.c, 1.0, 0.1 * i / 400.0).value);
  CHECK(best > 0.0);
  CHECK(best <= exact);
}

TEST_CASE("small-sigma estimate") {
  auto e = small_sigma_fidelity_estimate(100, 10.0);
  CHECK(e.estimate == doctest::Approx(1.0));
  for (int N : {100, 10000}) {
    auto t = small_sigma_fidelity_estimate(N, 0.01 / std::sqrt(N));
    CHECK(t.estimate == doctest::Approx(2 * 0.01 / std::sqrt(kPi)).epsilon(1e-4));
    CHECK(t.small_argument == doctest::Approx(2 * 0.01 / std::sqrt(kPi)).epsilon(1e-12));
  }
  auto c = small_sigma_fidelity_estimate(2000, 0.1 / std::sqrt(2000.0), balanced);
  CHECK(c.exact > c.estimate / 2);
  CHECK(c.exact < c.estimate * 2);
}

TEST_CASE("conditional fidelity") {
  std::vector<cplx> beta = {std::sqrt(0.7), std::sqrt(0.3)};
  auto cf = conditional_fidelity(beta, 6, 0.15, 0.4);
  auto z = ObservableBasis::computational(2);
  auto k = SmoothingKernel::gaussian(0.15, Readout::fraction(0, 2));
  CVector b = testutil::to_vector(beta);
  CMatrix rho = oracle::product_density(std::vector<CMatrix>(6, b * b.adjoint()));
  CMatrix post = oracle::conditional_post(rho, 6, z, k, {0.4});
  CHECK(std::abs(cf.exact - oracle::fidelity(rho, post)) < 1e-9);
  CHECK(std::abs(cf.density - oracle::outcome_density(rho, 6, z, k, {0.4})) < 1e-9);
  // Same value through the general engine path.
  auto psi = product_state(beta, 6, z);
  CHECK(std::abs(conditional_fidelity(psi, {z, k}, {0.4}) - cf.exact) < 1e-12);

  double prev = 0;
  for (int N : {100, 1000, 10000}) {
    double f = conditional_fidelity(balanced, N, 0.1, 0.5).exact;
    CHECK(f > prev);
    prev = f;
  }
  CHECK(prev > 0.999);

  // sigma = 0: squared overlap with the collapsed type.
  auto c0 = conditional_fidelity(beta, 6, 0.0, 4 / 6.0);
  CHECK(c0.exact == doctest::Approx(multinomial_pmf({4, 2}, {0.7, 0.3})).epsilon(1e-12));

  for (double l : {0.5, 0.52, 0.55, 0.6}) {
    auto c = conditional_fidelity(balanced, 4000, 0.05, l);
    CHECK(std::abs(c.exact - c.gaussian) < 1e-5);
  }
  CHECK_THROWS_AS(conditional_fidelity(beta, 6, 0.0, 0.45), ZeroProbabilityError);
}

TEST_CASE("threshold and bad-outcome bound") {
  const double c = 5 * std::sqrt(2 * kPi) / 8;
  CHECK(kThresholdConstant == doctest::Approx(c).epsilon(1e-15));
  CHECK(conditional_fidelity_threshold(4000, 0.05) == doctest::Approx(0.05 * std::sqrt(2 * std::log(1 / (0.05 * c)))));
  CHECK(conditional_fidelity_threshold(100000, 0.99999 / c) < 0.01);
  CHECK_THROWS_AS(conditional_fidelity_threshold(4000, 0.7), ValidationError);
  CHECK_THROWS_AS(conditional_fidelity_threshold(100, 0.05), ValidationError);

  CHECK(bad_outcome_probability(4000, 0.05, 0.0).bound == 1.0);
  CHECK(bad_outcome_probability(4000, 0.05, 0.0).exact_tail == doctest::Approx(1.0));
  CHECK(bad_outcome_probability(4000, 0.05, 10.0).bound < 1e-50);
  CHECK(bad_outcome_probability(4000, 0.05, 10.0).exact_tail < 1e-50);

  double D = conditional_fidelity_threshold(4000, 0.05);
  auto bo = bad_outcome_probability(4000, 0.05, D);
  CHECK(bo.exact_tail <= bo.bound);
  // Tail through adaptive quadrature of the outcome density.
  auto density = [](double l) { return conditional_fidelity(balanced, 4000, 0.05, l).density; };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double tail = GK::integrate(density, -1.0, 0.5 - D, 10, 1e-12) + GK::integrate(density, 0.5 + D, 2.0, 10, 1e-12);
  CHECK(tail == doctest::Approx(bo.exact_tail).epsilon(1e-6));
}

TEST_CASE("concavity: averaged state is at least as close as the mean conditional state") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 6; ++t) {
    auto z = ObservableBasis::computational(2);
    auto psi = product_state(testutil::random_beta(2, rng), 6 + 3 * t, z);
    for (double s : {0.05, 0.2})
      for (auto r : {Readout::full(), Readout::fraction(0, 2)}) {
        TypeMeasurement m{z, SmoothingKernel::gaussian(s, r)};
        double lhs = fidelity(psi, averaged_post_density(psi, m));
        double rhs = mean_conditional_fidelity(psi, m);
        CHECK(lhs >= rhs - 1e-9);
      }
  }
}

TEST_CASE("purified mixed-state bound") {
  auto z = ObservableBasis::computational(2);
  std::mt19937_64 rng(30);
  CVector v = testutil::to_vector(testutil::random_beta(2, rng));
  auto pure = purified_mixed_state_bound(MoleculeState::pure(v), 6, 0.2, z);
  auto psi = product_state(v, 6, z);
  double want = averaged_fidelity(psi, {z, SmoothingKernel::gaussian(0.2)}).fidelity;
  CHECK(pure.purified == doctest::Approx(want).epsilon(1e-12));
  CHECK(pure.exact == doctest::Approx(want).epsilon(1e-9));

  auto mm = purified_mixed_state_bound(MoleculeState::maximally_mixed(2), 6, 0.2, z);
  CHECK(mm.exact >= mm.purified - 1e-12);
  CHECK(mm.purified >= mm.bound);
  CHECK(mm.exact >= gaussian_fidelity_lower_bound(6, 0.2, 4).value);

  auto rnd = purified_mixed_state_bound(MoleculeState{testutil::random_density(2, rng)}, 8, 0.1, z);
  CHECK(rnd.exact >= rnd.purified - 1e-12);

  // Diagonal ensemble at sigma = 0.
  MoleculeState diag{CMatrix::Zero(2, 2)};
  diag.rho(0, 0) = 0.3;
  diag.rho(1, 1) = 0.7;
  auto dz = purified_mixed_state_bound(diag, 6, 0.0, z);
  double sum = 0;
  for (const auto& L : enumerate_types(6, 2)) sum += std::pow(multinomial_pmf(L, {0.3, 0.7}), 2);
  CHECK(dz.purified == doctest::Approx(sum).epsilon(1e-12));
  CHECK(dz.exact == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(dz.vacuous);

  // Large N: no dense exact value, purified still available.
  auto big = purified_mixed_state_bound(MoleculeState::maximally_mixed(2), 10000, 0.05, z);
  CHECK(big.exact == -1.0);
  CHECK(big.purified >= big.bound);
  CHECK_FALSE(big.vacuous);
}

TEST_CASE("sweep: dominance, monotonicity, determinism") {
  SweepSpec spec;
  spec.Ns = {100, 1000, 10000};
  spec.sigmas = {0.02, 0.05, 0.1, 0.3};
  spec.beta = balanced;
  spec.beta_spec = "balanced";
  spec.threads = 4;
  auto pts = tradeoff_sweep(spec);
  REQUIRE(pts.size() == 12);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    CHECK(p.N == spec.Ns[i / 4]);
    CHECK(p.sigma == spec.sigmas[i % 4]);
    CHECK(p.f_exact >= 0.0);
    CHECK(p.f_exact <= 1.0);
    if (!p.bound_vacuous) CHECK(p.f_exact >= p.f_bound);
    if (i % 4) CHECK(p.f_exact >= pts[i - 1].f_exact);
    CHECK_FALSE(p.runtime_ms.has_value());
  }
  CHECK(pts[0].regime == Regime::fine);
  CHECK(pts[1].regime == Regime::transition);
  CHECK(pts[11].regime == Regime::coarse);
  CHECK(regime_of(10000, 0.001) == Regime::fine);
  spec.threads = 1;
  auto serial = tradeoff_sweep(spec);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(serial[i].f_exact == pts[i].f_exact);
}

TEST_CASE("scaling law: 1 - F against ln(N s^2)/(N s^2) at fixed sigma sqrt(N)") {
  for (double R0 : {0.5, 0.3}) {
    std::vector<cplx> beta = {std::sqrt(R0), std::sqrt(1 - R0)};
    std::vector<double> x, y;
    for (int N : {100, 300, 1000, 3000, 10000}) {
      double s = 10.0 / std::sqrt(N) * std::pow(N / 100.0, 0.25);
      double u = N * s * s;
      x.push_back(std::log(u) / u);
      y.push_back(1.0 - exact_averaged_fidelity(beta, N, SmoothingKernel::gaussian(s)));
    }
    auto f = fit_line(x, y);
    CHECK(f.slope > 0.0);
  }
  auto f = fit_line({1, 2, 3}, {2, 4, 6});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}
