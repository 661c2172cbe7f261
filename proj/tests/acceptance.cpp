// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "macrobs/equivalence.hpp"
#include "macrobs/histories.hpp"
#include "macrobs/nmr.hpp"
#include "macrobs/oracle.hpp"
#include "macrobs/sweep.hpp"
#include "macrobs/tomography.hpp"
#include "macrobs/tradeoff.hpp"

using namespace macrobs;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const std::vector<cplx> kBalanced = {cplx(M_SQRT1_2), cplx(M_SQRT1_2)};
const int kThreads = default_threads();

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

CMatrix haar(int d, std::mt19937_64& rng) {
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

CMatrix gue(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (z + z.adjoint());
}

Verdict c1() {
  Verdict v;
  auto t0 = std::chrono::steady_clock::now();
  EquivalenceSpec spec;
  spec.threads = kThreads;
  auto checks = run_equivalence_suite(spec);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  for (const auto& k : checks) worst = std::max(worst, k.max_error);
  v.require(worst <= 1e-9, std::to_string(checks.size()) + fmt(" checks over 50 cases, worst error %.2e", worst));
  v.require(secs < 60.0, fmt("%.1f s", secs));
  return v;
}

Verdict c2() {
  Verdict v;
  const double f4 = fidelity_zero_sigma(kBalanced, 4).exact;
  v.require(std::abs(f4 - 70.0 / 256.0) <= 1e-12, fmt("F(N=4) - 70/256 = %.1e", f4 - 70.0 / 256.0));
  double worst = 0.0, prev = 2.0;
  bool mono = true;
  for (int N : {100, 200, 400, 800, 1600, 3200}) {
    auto z = fidelity_zero_sigma(kBalanced, N);
    worst = std::max(worst, std::abs(z.exact / z.stirling - 1.0));
    mono = mono && z.exact < prev;
    prev = z.exact;
  }
  v.require(worst <= 0.10, fmt("max |F/Stirling - 1| = %.3f over N=100..3200", worst));
  v.require(mono, "F decreasing in N");
  return v;
}

Verdict c3() {
  Verdict v;
  SweepSpec spec;
  spec.Ns = {100, 1000, 10000};
  spec.sigmas = {0.02, 0.05, 0.1, 0.3};
  spec.beta = kBalanced;
  spec.threads = kThreads;
  auto pts = tradeoff_sweep(spec);
  int violations = 0, active = 0;
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (!p.bound_vacuous) {
      ++active;
      violations += p.f_exact < p.f_bound;
    }
    const double a = p.N * p.sigma * p.sigma * p.d;
    if (a >= 10.0) {
      x.push_back(std::log(a) / a);
      y.push_back(1.0 - p.f_exact);
    }
  }
  v.require(violations == 0, std::to_string(violations) + " bound violations in " + std::to_string(active) +
                                 " non-vacuous points");
  auto fit = fit_line(x, y);
  v.require(fit.slope > 0.0 && fit.r2 >= 0.9,
            std::to_string(x.size()) + " points, " + fmt("slope %.4f R^2 %.4f", fit.slope, fit.r2));
  return v;
}

Verdict c4() {
  Verdict v;
  double worst_ratio = 1.0, fmax = 0.0;
  for (int N : {400, 1600, 6400}) {
    const double s = 0.1 / std::sqrt(static_cast<double>(N));
    const double F = exact_averaged_fidelity(kBalanced, N, SmoothingKernel::gaussian(s));
    const double e = std::erf(s * std::sqrt(static_cast<double>(N)));
    worst_ratio = std::max({worst_ratio, F / e, e / F});
    fmax = std::max(fmax, F);
  }
  v.require(worst_ratio <= 2.0, fmt("max ratio to erf %.3f", worst_ratio));
  v.require(fmax < 0.2, fmt("max F %.4f at sigma=0.1/sqrt(N)", fmax));
  double prev = 2.0;
  bool mono = true;
  std::string seq;
  for (int N : {400, 1600, 6400}) {
    const double F = exact_averaged_fidelity(kBalanced, N, SmoothingKernel::gaussian(1.0 / N));
    mono = mono && F < prev;
    prev = F;
    seq += fmt(" %.4f", F);
  }
  v.require(mono, "F decreasing at sigma=1/N:" + seq);
  return v;
}

Verdict c5() {
  Verdict v;
  std::mt19937_64 rng = substream(5, 0);
  double e_cond = 0.0, e_avg = 0.0, e_oracle = 0.0;
  int outcomes = 0;
  for (int d : {2, 3})
    for (int N = 1; N <= (d == 2 ? 8 : 5); ++N) {
      auto basis = ObservableBasis::from_unitary(haar(d, rng));
      CVector b = haar(d, rng).col(0);
      auto psi = product_state(b, N, basis);
      auto rho = SymmetricDensity::from_pure(psi);
      const CMatrix dense = oracle::embed(rho);
      auto k = SmoothingKernel::exact();
      TypeMeasurement m{basis, k};
      const CMatrix& U = basis.u;
      auto p = psi.probabilities();
      for (std::size_t i = 0; i < psi.size(); ++i) {
        if (p[i] < 1e-12) continue;
        const int* c = psi.types().counts(i);
        Outcome l = k.readout().center(c, d);
        RVector lv(d);
        for (int j = 0; j < d; ++j) lv(j) = l[static_cast<std::size_t>(j)];
        const CMatrix want = U * lv.cast<cplx>().asDiagonal() * U.adjoint();
        const CMatrix got = reduce_single_molecule(conditional_post_density(rho, m, l)).rho;
        e_cond = std::max(e_cond, max_abs(got - want));
        e_oracle = std::max(e_oracle, max_abs(oracle::reduce_to_molecule(oracle::conditional_post(dense, N, basis, k, l),
                                                                         N, d) - want));
        ++outcomes;
      }
      ProbVector R = MoleculeState::pure(b).letter_probabilities(basis);
      RVector rv = Eigen::Map<const RVector>(R.data(), d);
      const CMatrix want = U * rv.cast<cplx>().asDiagonal() * U.adjoint();
      const CMatrix got = reduce_single_molecule(averaged_post_density(psi, m)).rho;
      e_avg = std::max(e_avg, max_abs(got - want));
      e_oracle = std::max(e_oracle, max_abs(oracle::reduce_to_molecule(oracle::averaged_post(dense, N, basis, k), N, d) - want));
    }
  v.require(e_cond <= 1e-12, std::to_string(outcomes) + fmt(" outcomes, conditional error %.1e", e_cond));
  v.require(e_avg <= 1e-12, fmt("averaged error %.1e", e_avg));
  v.require(e_oracle <= 1e-12, fmt("dense oracle error %.1e", e_oracle));
  return v;
}

Verdict c6() {
  Verdict v;
  const int N = 4000;
  const double sigma = 0.05, mu = 0.5;
  const double ds = conditional_fidelity_threshold(N, sigma);
  auto rng = substream(6, 0);
  std::binomial_distribution<int> type(N, mu);
  std::normal_distribution<double> noise(0.0, sigma);
  const int samples = 2000;
  int outside = 0, inside = 0;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double l = static_cast<double>(type(rng)) / N + noise(rng);
    if (std::abs(l - mu) > ds) {
      ++outside;
      continue;
    }
    ++inside;
    worst = std::max(worst, 1.0 - conditional_fidelity(kBalanced, N, sigma, l).exact);
  }
  v.require(worst < 1e-3, std::to_string(inside) + fmt(" outcomes within Delta*=%.4f, max 1-F %.2e", ds, worst));
  const double frac = static_cast<double>(outside) / samples;
  const double bound = bad_outcome_probability(N, sigma, ds).bound;
  v.require(frac <= bound, fmt("outside fraction %.4f, bound %.4f", frac, bound));
  return v;
}

Verdict c7() {
  Verdict v;
  double worst = 0.0;
  for (int p = 0; p < 10; ++p) {
    auto rng = substream(7, static_cast<std::uint64_t>(p));
    const CMatrix a = gue(2, rng), b = gue(2, rng);
    for (int N : {2, 3, 4}) worst = std::max(worst, commutator_relation(a, b, N).residual);
  }
  v.require(worst < 1e-12, fmt("max residual %.2e over 10 pairs, N=2,3,4", worst));
  return v;
}

HistoryFamily zx_family(double sigma) {
  auto k = SmoothingKernel::gaussian(sigma, Readout::fraction(0, 2));
  const std::vector<double> cuts = {0.25, 0.5, 0.75, 1.0};
  return {{HistoryEvent::with_cuts(ObservableBasis::spin('z'), k, cuts),
           HistoryEvent::with_cuts(ObservableBasis::spin('x'), k, cuts)}};
}

Verdict c8() {
  Verdict v;
  const auto plus = Preparation::pure_product(kBalanced, 400);
  const std::vector<double> sig = {0.0, 0.01, 0.03, 0.1, 0.3};
  auto eps = parallel_map<double>(sig.size(), kThreads,
                                  [&](std::size_t i) { return sum_rule_violation(zx_family(sig[i]), plus).epsilon; });
  v.require(eps[3] < 0.02, fmt("eps(0.1)=%.2e", eps[3]));
  v.require(eps[0] > 0.2, fmt("eps(0)=%.3f", eps[0]));
  bool mono = true;
  for (std::size_t i = 2; i < sig.size(); ++i) mono = mono && eps[i] <= eps[i - 1];
  v.require(mono, fmt("non-increasing over 0.01..0.3 (%.2e ... %.2e)", eps[1], eps[4]));

  const std::vector<int> xis = {1, 2, 4};
  auto ex = parallel_map<double>(xis.size(), kThreads, [&](std::size_t i) {
    const int xi = xis[i];
    CVector g = CVector::Zero(Eigen::Index{1} << xi);
    g(0) = g(g.size() - 1) = M_SQRT1_2;
    auto prep = xi == 1 ? Preparation::pure_product(kBalanced, 256) : block_preparation(xi, 256, g);
    return sum_rule_violation(zx_family(0.05), prep).epsilon;
  });
  char buf[160];
  std::snprintf(buf, sizeof buf, "xi=1,2,4 at sigma=0.05: %.2e %.2e %.2e", ex[0], ex[1], ex[2]);
  v.require(ex[0] < ex[1] && ex[1] < ex[2], std::string(buf) + " strictly increasing");
  return v;
}

Verdict c9() {
  Verdict v;
  auto rng = substream(9, 0);
  std::bernoulli_distribution coin(0.5);
  std::vector<MoleculeState> list;
  for (int i = 0; i < 100; ++i) list.push_back(MoleculeState::bloch(0, 0, coin(rng) ? 1 : -1));
  auto z = ObservableBasis::spin('z');
  const double coarse = separable_total_variation(list, z, SmoothingKernel::gaussian(0.2, Readout::fraction(0, 2)));
  const double fine = separable_total_variation(list, z, SmoothingKernel::gaussian(0.001, Readout::fraction(0, 2)));
  v.require(coarse < 0.05, fmt("TV(0.2)=%.4f", coarse));
  v.require(fine > 0.3, fmt("TV(0.001)=%.4f", fine));
  std::vector<MoleculeState> half;
  for (int i = 0; i < 100; ++i) half.push_back(MoleculeState::bloch(0, 0, i < 50 ? 1 : -1));
  const double P = product_type_distribution(half, z, SmoothingKernel::exact(Readout::fraction(0, 2)), {0.5}).density;
  v.require(std::abs(P - 1.0) <= 1e-12, fmt("half up/down P(1/2) - 1 = %.1e", P - 1.0));
  return v;
}

Verdict c10() {
  Verdict v;
  const auto grid = default_prior(2);
  auto ok = parallel_map<int>(20, kThreads, [&](std::size_t r) {
    const std::uint64_t seed = 1 + r;
    auto nu = random_pure_grid_state(grid, seed);
    auto rec = simulate_tomography(nu, spin_axes_spec(1000, 0.05, seed));
    return rec.rounds.back().concentration_10 >= 0.9 ? 1 : 0;
  });
  int hits = 0;
  for (int x : ok) hits += x;
  v.require(hits >= 18, std::to_string(hits) + "/20 runs with mass >= 0.9 within 0.1 (200-point grid, N=1000, "
                                               "sigma=0.05, axes x,y,z)");
  return v;
}

Verdict c11() {
  Verdict v;
  const int N = 10000;
  auto psi = product_state(kBalanced, N, ObservableBasis::spin('x'));
  CoilModel ideal;
  ideal.N = N;
  ideal.lambda = 0.1;
  CoilModel thermal = ideal;
  thermal.lambda = 0.001;
  thermal.sigma_mix = 0.099;
  const double fi = post_fidelity(ideal, psi), ft = post_fidelity(thermal, psi);
  v.require(fi > 0.95, fmt("F(lambda=0.1)=%.4f", fi));
  v.require(ft < 0.5, fmt("F(lambda=0.001, sigma_mix=0.099)=%.4f", ft));
  TypeMeasurement m{ideal.basis, ideal_coil_kernel(ideal)};
  double err = 0.0;
  for (double l : {0.3, 0.48, 0.5, 0.55, 0.7}) {
    auto post = thermal_coil_update(ideal, psi, ideal.to_field(l));
    const CVector a = post.branches.at(0).amplitudes(), b = conditional_post_state(psi, m, {l}).amplitudes();
    err = std::max(err, (a - b).cwiseAbs().maxCoeff());
    err = std::max(err, std::abs(post.density * ideal.jacobian() - outcome_density(psi, m, {l})));
  }
  v.require(err <= 1e-12, fmt("sigma_mix=0 update vs ideal %.1e", err));
  return v;
}

Verdict c12() {
  Verdict v;
  struct Case {
    double lambda, sigma_mix;
  };
  const std::vector<Case> cases = {{0.1, 0.0}, {0.01, 0.0}, {0.05, 0.05}, {0.001, 0.099}};
  const std::vector<int> Ns = {1, 2, 5, 10, 20, 50};
  auto errs = parallel_map<double>(cases.size() * Ns.size(), kThreads, [&](std::size_t i) {
    CoilModel c;
    c.lambda = cases[i / Ns.size()].lambda;
    c.sigma_mix = cases[i / Ns.size()].sigma_mix;
    c.N = Ns[i % Ns.size()];
    return povm_completeness_error(c);
  });
  double ideal = 0.0, thermal = 0.0;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    double& worst = cases[i / Ns.size()].sigma_mix == 0 ? ideal : thermal;
    worst = std::max(worst, errs[i]);
  }
  v.require(ideal <= 1e-6, fmt("ideal max error %.1e", ideal));
  v.require(thermal <= 1e-6, fmt("thermal max error %.1e (N=1..50)", thermal));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
  int failed = 0;
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    failed += !v.pass;
    std::printf("criterion %2zu: %s  (%.1f s) %s\n", i + 1, v.pass ? "PASS" : "FAIL", s, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed in %.1f s\n", criteria.size() - failed, criteria.size(),
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return failed ? 1 : 0;
}
