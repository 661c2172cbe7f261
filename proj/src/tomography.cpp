#include "macrobs/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "macrobs/errors.hpp"
#include "macrobs/sweep.hpp"

namespace macrobs {

namespace {

constexpr double kBallSlack = 1e-12;

// The sampled system between measurements: n molecules over d letters in
// the frame `frame`, plus `off` extra molecules of every letter that no
// collective rotation touches (qubit singlet pairs).
struct Sample {
  std::shared_ptr<const TypeBasis> types;
  CVector amp;
  CMatrix frame;
  int off = 0;
};

double log_or_skip(double p, int e) {
  if (e == 0) return 0.0;
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  return e * std::log(p);
}

// nu^{(x)N} for a qubit splits into total-spin sectors. A sector of 2j
// excitable molecules in the eigenframe of nu holds the type (a, 2j - a)
// with probability dim_j p^{off+a} q^{off+2j-a}, off = N/2 - j.
Sample qubit_sample(const MoleculeState& nu, int N, std::mt19937_64& rng) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(nu.rho);
  CMatrix F(2, 2);
  F.col(0) = es.eigenvectors().col(1);
  F.col(1) = es.eigenvectors().col(0);
  const double p = std::max(0.0, es.eigenvalues()(1)), q = std::max(0.0, es.eigenvalues()(0));
  std::vector<double> logw;
  std::vector<std::pair<int, int>> keys;
  for (int n = N % 2; n <= N; n += 2) {
    const int off = (N - n) / 2;
    // dim_j = C(N, off) - C(N, off - 1) = C(N, off) (n + 1) / (N - off + 1)
    const double ld = std::lgamma(N + 1.0) - std::lgamma(off + 1.0) - std::lgamma(N - off + 1.0) +
                      std::log((n + 1.0) / (N - off + 1.0));
    for (int a = 0; a <= n; ++a) {
      const double lw = ld + log_or_skip(p, off + a) + log_or_skip(q, off + n - a);
      if (std::isfinite(lw)) {
        logw.push_back(lw);
        keys.emplace_back(n, a);
      }
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  for (double& x : logw) x = std::exp(x - top);
  std::discrete_distribution<std::size_t> pick(logw.begin(), logw.end());
  const auto [n, a] = keys[pick(rng)];
  Sample s;
  s.types = shared_type_basis(n, 2);
  s.amp = CVector::Zero(static_cast<Eigen::Index>(s.types->size()));
  const int c[2] = {a, n - a};
  s.amp(static_cast<Eigen::Index>(s.types->index(c))) = 1.0;
  s.frame = F;
  s.off = (N - n) / 2;
  return s;
}

Sample pure_sample(const MoleculeState& nu, int N) {
  const int d = nu.d();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(nu.rho);
  CVector phi = es.eigenvectors().col(d - 1);
  Sample s;
  s.types = shared_type_basis(N, d);
  s.frame = CMatrix::Identity(d, d);
  s.amp = product_state(phi, N, ObservableBasis::computational(d)).amplitudes();
  return s;
}

TypeVector sample_multinomial(int N, const ProbVector& R, std::mt19937_64& rng) {
  TypeVector L(R.size(), 0);
  int left = N;
  double mass = 1.0;
  for (std::size_t j = 0; j + 1 < R.size() && left > 0; ++j) {
    const double p = mass > 0 ? std::clamp(R[j] / mass, 0.0, 1.0) : 0.0;
    L[j] = std::binomial_distribution<int>(left, p)(rng);
    left -= L[j];
    mass -= R[j];
  }
  L.back() += left;
  return L;
}

std::size_t argmax(const std::vector<double>& w) {
  return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
}

}  // namespace

PriorGrid default_prior(int d) {
  if (d != 2) throw ValidationError("default prior grid is defined for qubits only; pass a prior");
  return PriorGrid::bloch_grid(40, 5);
}

double product_outcome_density(const MoleculeState& nu, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                               const Outcome& l) {
  if (nu.d() != basis.d()) throw ValidationError("outcome density: dimension mismatch");
  if (N < 1) throw ValidationError("N must be >= 1");
  ProbVector R = nu.letter_probabilities(basis);
  double P = 0.0;
  for (const auto& L : multinomial_window(R, N, 12.0)) {
    const double w = k.weight(k.readout().center(L.data(), basis.d()), l);
    if (w != 0.0) P += std::exp(log_multinomial_pmf(L, R)) * w;
  }
  return P;
}

double exchangeable_outcome_density(const PriorGrid& prior, int N, const ObservableBasis& basis,
                                    const SmoothingKernel& k, const Outcome& l) {
  prior.validate();
  double P = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior.weights[i] > 0.0) P += prior.weights[i] * product_outcome_density(prior.states[i], N, basis, k, l);
  return P;
}

PriorGrid posterior_update(const PriorGrid& prior, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                           const Outcome& l) {
  prior.validate();
  PriorGrid out = prior;
  double Z = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    out.weights[i] =
        prior.weights[i] > 0.0 ? prior.weights[i] * product_outcome_density(prior.states[i], N, basis, k, l) : 0.0;
    Z += out.weights[i];
  }
  if (!(Z > 0.0)) throw ZeroProbabilityError("posterior update: outcome has zero density under the prior");
  for (double& w : out.weights) w /= Z;
  return out;
}

double posterior_concentration(const PriorGrid& prior, const MoleculeState& nu_ref, double radius) {
  if (radius < 0) throw ValidationError("radius must be >= 0");
  double m = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (trace_distance(prior.states[i], nu_ref) <= radius + kBallSlack) m += prior.weights[i];
  return m;
}

double posterior_spread(const PriorGrid& prior) {
  auto mean = prior.mean();
  double s = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i)
    if (prior.weights[i] > 0.0) s += prior.weights[i] * trace_distance(prior.states[i], mean);
  return s;
}

TomographySpec spin_axes_spec(int N, double sigma, std::uint64_t seed) {
  TomographySpec s;
  for (char a : {'x', 'y', 'z'}) {
    s.bases.push_back(ObservableBasis::spin(a));
    s.tags.emplace_back(1, a);
  }
  s.N = N;
  s.sigma = sigma;
  s.seed = seed;
  return s;
}

MoleculeState random_pure_grid_state(const PriorGrid& grid, std::uint64_t seed) {
  std::vector<std::size_t> pure;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if ((grid.states[i].rho * grid.states[i].rho).trace().real() > 1.0 - 1e-9) pure.push_back(i);
  if (pure.empty()) throw ValidationError("grid has no pure states");
  auto rng = substream(seed, 1);
  return grid.states[pure[std::uniform_int_distribution<std::size_t>(0, pure.size() - 1)(rng)]];
}

Outcome sample_outcome(const SmoothingKernel& k, const std::vector<double>& center, std::mt19937_64& rng) {
  if (k.kind() == SmoothingKernel::Kind::comb) {
    auto f = k.comb_masses(center.at(0));
    std::discrete_distribution<std::size_t> pick(f.begin(), f.end());
    return {k.grid()[pick(rng)]};
  }
  Outcome l = center;
  if (k.sigma() > 0.0) {
    std::normal_distribution<double> g(0.0, k.sigma());
    for (double& x : l) x += g(rng);
  }
  return l;
}

TomographyRecord simulate_tomography(const MoleculeState& nu_true, const TomographySpec& spec) {
  nu_true.validate();
  const int d = nu_true.d();
  if (spec.bases.empty()) throw ValidationError("tomography: no bases");
  if (spec.tags.size() != spec.bases.size()) throw ValidationError("tomography: one tag per basis");
  if (spec.N < 1) throw ValidationError("tomography: N must be >= 1");
  if (spec.sigma < 0) throw ValidationError("tomography: sigma must be >= 0");
  if (spec.rounds < 1) throw ValidationError("tomography: rounds must be >= 1");
  for (const auto& b : spec.bases)
    if (b.d() != d) throw ValidationError("tomography: basis dimension differs from the state");

  TomographyRecord rec;
  rec.posterior = spec.prior.size() ? spec.prior : default_prior(d);
  rec.posterior.validate();
  if (rec.posterior.d() != d) throw ValidationError("tomography: prior dimension differs from the state");

  auto k = SmoothingKernel::gaussian(spec.sigma, Readout::fraction(0, d));
  auto rng = substream(spec.seed, 0);

  Sample s;
  if (!spec.fresh_batch) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(nu_true.rho, Eigen::EigenvaluesOnly);
    const bool pure = es.eigenvalues()(d - 1) > 1.0 - 1e-12;
    if (d == 2)
      s = qubit_sample(nu_true, spec.N, rng);
    else if (pure)
      s = pure_sample(nu_true, spec.N);
    else
      throw ValidationError("tomography: a reused sample needs d = 2 or a pure state; use fresh batches");
  }

  for (int r = 0; r < spec.rounds; ++r)
    for (std::size_t bi = 0; bi < spec.bases.size(); ++bi) {
      const auto& basis = spec.bases[bi];
      Outcome l;
      if (spec.fresh_batch) {
        auto L = sample_multinomial(spec.N, nu_true.letter_probabilities(basis), rng);
        l = sample_outcome(k, k.readout().center(L.data(), d), rng);
      } else {
        CMatrix w = basis.u.adjoint() * s.frame;
        if (d == 2)
          apply_induced_qubit(w, s.amp);
        else
          InducedAction(s.types, w).apply(s.amp);
        s.frame = basis.u;
        const std::size_t T = s.types->size();
        std::vector<double> P(T);
        for (std::size_t i = 0; i < T; ++i) P[i] = std::norm(s.amp(static_cast<Eigen::Index>(i)));
        std::discrete_distribution<std::size_t> pick(P.begin(), P.end());
        TypeVector L(d);
        auto center_of = [&](std::size_t i) {
          const int* c = s.types->counts(i);
          for (int j = 0; j < d; ++j) L[j] = c[j] + s.off;
          return k.readout().center(L.data(), d);
        };
        l = sample_outcome(k, center_of(pick(rng)), rng);
        for (std::size_t i = 0; i < T; ++i)
          if (P[i] != 0.0) s.amp(static_cast<Eigen::Index>(i)) *= std::sqrt(k.weight(center_of(i), l));
        s.amp /= s.amp.norm();
      }
      rec.posterior = posterior_update(rec.posterior, spec.N, basis, k, l);
      TomographyRound round;
      round.basis = spec.tags[bi];
      round.outcome = l;
      round.concentration_05 = posterior_concentration(rec.posterior, nu_true, 0.05);
      round.concentration_10 = posterior_concentration(rec.posterior, nu_true, 0.1);
      round.spread = posterior_spread(rec.posterior);
      round.mode = argmax(rec.posterior.weights);
      rec.rounds.push_back(round);
    }
  return rec;
}

}  // namespace macrobs
