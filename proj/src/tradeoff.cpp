#include "macrobs/tradeoff.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "macrobs/errors.hpp"
#include "macrobs/oracle.hpp"
#include "macrobs/sweep.hpp"

namespace macrobs {

namespace {

constexpr double kPi = 3.14159265358979323846;

ProbVector probabilities_of(const std::vector<cplx>& beta) {
  ProbVector R(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) R[j] = std::norm(beta[j]);
  validate_prob(R, 1e-9);
  return R;
}

BoundValue floored(double v) { return v > 0.0 ? BoundValue{v, false} : BoundValue{0.0, true}; }

void require_positive(int N, double sigma) {
  if (N < 1) throw ValidationError("N must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
}

double normal_pdf(double x, double var) { return std::exp(-x * x / (2 * var)) / std::sqrt(2 * kPi * var); }

}  // namespace

Regime regime_of(int N, double sigma) {
  const double x = sigma * std::sqrt(static_cast<double>(N));
  if (x > 3.0) return Regime::coarse;
  if (x < 0.3) return Regime::fine;
  return Regime::transition;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::coarse:
      return "coarse";
    case Regime::fine:
      return "fine";
    default:
      return "transition";
  }
}

ZeroSigmaFidelity fidelity_zero_sigma(const std::vector<cplx>& beta, int N) {
  if (N < 0) throw ValidationError("N must be >= 0");
  ProbVector R = probabilities_of(beta);
  ZeroSigmaFidelity out;
  for (const auto& L : multinomial_window(R, N, 12.0)) {
    double m = multinomial_pmf(L, R);
    out.exact += m * m;
  }
  int k = 0;
  double prod = 1.0;
  for (const auto& b : beta)
    if (std::abs(b) > 0.0) {
      ++k;
      prod *= std::abs(b);
    }
  const double n = std::max(N, 1);
  out.stirling = std::pow(2 * kPi * n, -(k - 1) / 2.0) / prod;
  out.asymptote = std::pow(4 * kPi * n, -(k - 1) / 2.0) / prod;
  return out;
}

BoundValue gaussian_fidelity_lower_bound(int N, double sigma, int d, std::optional<double> delta) {
  require_positive(N, sigma);
  if (d < 1) throw ValidationError("d must be >= 1");
  if (delta) {
    if (*delta < 0) throw ValidationError("delta must be >= 0");
    const double D2 = *delta * *delta;
    const double t = 1.0 - std::exp(-N * d * D2 / 2.0);
    return floored(std::exp(-D2 / (2 * sigma * sigma)) * t * t);
  }
  const double x = N * sigma * sigma * d;
  // Below 2x = 1/e the closed form exceeds one; it is outside its regime.
  if (1.0 + std::log(2.0 * x) <= 0.0) return {0.0, true};
  return floored(1.0 - (1.0 + std::log(2.0 * x)) / x);
}

BoundValue general_fidelity_lower_bound(int N, double sigma, double c, double s, double delta) {
  require_positive(N, sigma);
  if (!(c > 0.0) || !(s > 0.0)) throw ValidationError("c and s must be positive");
  if (delta < 0) throw ValidationError("delta must be >= 0");
  const double a = 1.0 - c * std::pow(delta / (2 * sigma), s);
  const double b = 1.0 - std::exp(-N * delta * delta / 2.0);
  if (a <= 0.0) return {0.0, true};
  return floored(a * b);
}

SmallSigmaEstimate small_sigma_fidelity_estimate(int N, double sigma) {
  require_positive(N, sigma);
  const double x = sigma * std::sqrt(static_cast<double>(N));
  return {std::erf(x), 2 * x / std::sqrt(kPi), -1.0};
}

SmallSigmaEstimate small_sigma_fidelity_estimate(int N, double sigma, const std::vector<cplx>& beta) {
  auto out = small_sigma_fidelity_estimate(N, sigma);
  out.exact = exact_averaged_fidelity(beta, N, SmoothingKernel::gaussian(sigma));
  return out;
}

double exact_averaged_fidelity(const std::vector<cplx>& beta, int N, const SmoothingKernel& k) {
  return product_averaged_fidelity(probabilities_of(beta), N, k).fidelity;
}

ConditionalFidelity conditional_fidelity(const std::vector<cplx>& beta, int N, double sigma, double l) {
  if (beta.size() != 2) throw ValidationError("closed-form conditional fidelity needs d = 2");
  if (N < 1) throw ValidationError("N must be >= 1");
  if (sigma < 0) throw ValidationError("sigma must be >= 0");
  ProbVector R = probabilities_of(beta);
  auto k = SmoothingKernel::gaussian(sigma, Readout::fraction(0, 2));
  double S = 0.0, P = 0.0;
  for (int a = 0; a <= N; ++a) {
    const int L[2] = {a, N - a};
    const double b = std::exp(log_multinomial_pmf(L, R));
    if (b == 0.0) continue;
    const double q = k.weight({static_cast<double>(a) / N}, {l});
    S += b * std::sqrt(q);
    P += b * q;
  }
  if (!(P > 0.0)) throw ZeroProbabilityError("conditional fidelity: outcome has zero probability");
  ConditionalFidelity out;
  out.exact = std::min(1.0, S * S / P);
  out.density = P;
  if (sigma > 0.0) {
    const double mu = R[0], v = mu * (1 - mu) / N, s2 = sigma * sigma, x = l - mu;
    const double num = (2 * s2 / (2 * s2 + v)) * std::exp(-x * x / (2 * s2 + v)) / std::sqrt(2 * kPi * s2);
    out.gaussian = num / normal_pdf(x, s2 + v);
  }
  return out;
}

double conditional_fidelity(const SymmetricPureState& psi, const TypeMeasurement& m, const Outcome& l) {
  auto post = conditional_post_state(psi, m, l);
  return fidelity(psi, post);
}

double conditional_fidelity_threshold(int N, double sigma) {
  require_positive(N, sigma);
  if (sigma <= 1.0 / std::sqrt(static_cast<double>(N)))
    throw ValidationError("threshold requires sigma > 1/sqrt(N)");
  if (kThresholdConstant * sigma >= 1.0) throw ValidationError("threshold undefined: c sigma >= 1");
  return sigma * std::sqrt(2.0 * std::log(1.0 / (kThresholdConstant * sigma)));
}

BadOutcome bad_outcome_probability(int N, double sigma, double delta, const std::vector<cplx>& beta) {
  require_positive(N, sigma);
  if (delta < 0) throw ValidationError("delta must be >= 0");
  if (beta.size() != 2) throw ValidationError("bad-outcome probability needs d = 2");
  ProbVector R = probabilities_of(beta);
  BadOutcome out;
  out.bound = std::exp(-std::sqrt(8.0) * delta / (std::sqrt(5 * kPi) * sigma));
  auto k = SmoothingKernel::gaussian(sigma, Readout::fraction(0, 2));
  const double mu = R[0];
  const double inf = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= N; ++a) {
    const int L[2] = {a, N - a};
    const double b = std::exp(log_multinomial_pmf(L, R));
    if (b == 0.0) continue;
    const double c = static_cast<double>(a) / N;
    out.exact_tail += b * (k.bin_mass(c, -inf, mu - delta) + k.bin_mass(c, mu + delta, inf));
  }
  return out;
}

double mean_conditional_fidelity(const SymmetricPureState& psi, const TypeMeasurement& m) {
  auto quad = outcome_quadrature(m.kernel, psi.N(), psi.d());
  double acc = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double P = outcome_density(psi, m, quad.nodes[i]);
    if (P <= 1e-300) continue;
    acc += quad.weights[i] * P * conditional_fidelity(psi, m, quad.nodes[i]);
  }
  return acc;
}

PurifiedBound purified_mixed_state_bound(const MoleculeState& nu, int N, double sigma, const ObservableBasis& basis) {
  nu.validate();
  if (nu.d() != basis.d()) throw ValidationError("purified bound: dimension mismatch");
  if (N < 1) throw ValidationError("N must be >= 1");
  if (sigma < 0) throw ValidationError("sigma must be >= 0");
  const int d = nu.d();
  PurifiedBound out;
  out.vacuous = true;
  if (sigma > 0.0) {
    auto b = gaussian_fidelity_lower_bound(N, sigma, d * d);
    out.bound = b.value;
    out.vacuous = b.vacuous;
  }
  // The pair-type measurement only reads the molecule letter, so the
  // purification's pair sum collapses onto molecule types with R = diag(nu).
  auto k = SmoothingKernel::gaussian(sigma);
  out.purified = product_averaged_fidelity(nu.letter_probabilities(basis), N, k).fidelity;
  const double dim = std::pow(static_cast<double>(d), N);
  if (dim <= static_cast<double>(oracle::kMatrixCap)) {
    CMatrix rho = oracle::product_density(std::vector<CMatrix>(N, nu.rho));
    CMatrix post = oracle::averaged_post(rho, N, basis, k);
    out.exact = oracle::fidelity(rho, post);
  }
  return out;
}

std::vector<TradeoffPoint> tradeoff_sweep(const SweepSpec& spec) {
  const int d = static_cast<int>(spec.beta.size());
  probabilities_of(spec.beta);
  for (int N : spec.Ns)
    if (N < 1) throw ValidationError("sweep: N must be >= 1");
  for (double s : spec.sigmas)
    if (s < 0) throw ValidationError("sweep: sigma must be >= 0");
  const std::size_t ns = spec.sigmas.size();
  return parallel_map<TradeoffPoint>(spec.Ns.size() * ns, spec.threads, [&](std::size_t i) {
    auto t0 = std::chrono::steady_clock::now();
    TradeoffPoint p;
    p.N = spec.Ns[i / ns];
    p.sigma = spec.sigmas[i % ns];
    p.d = d;
    p.beta_spec = spec.beta_spec;
    p.f_exact = exact_averaged_fidelity(spec.beta, p.N, SmoothingKernel::gaussian(p.sigma));
    if (p.sigma > 0.0) {
      auto b = gaussian_fidelity_lower_bound(p.N, p.sigma, d);
      p.f_bound = b.value;
      p.bound_vacuous = b.vacuous;
    } else {
      p.bound_vacuous = true;
    }
    p.regime = regime_of(p.N, p.sigma);
    if (spec.timing)
      p.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return p;
  });
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_line: x has no spread");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

}  // namespace macrobs
