#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "macrobs/symmetric.hpp"

namespace macrobs {

enum class Regime { coarse, fine, transition };

/// coarse when sigma sqrt(N) > 3, fine when < 0.3.
Regime regime_of(int N, double sigma);
const char* regime_name(Regime r);

struct BoundValue {
  double value = 0.0;
  bool vacuous = false;  // raw value was <= 0 and has been floored
};

struct ZeroSigmaFidelity {
  double exact = 0.0;      // sum_L m(L,R)^2
  double stirling = 0.0;   // (2 pi N)^{-(k-1)/2} / prod |beta_j| over the k nonzero beta_j
  double asymptote = 0.0;  // (4 pi N)^{-(k-1)/2} / prod |beta_j|
};

ZeroSigmaFidelity fidelity_zero_sigma(const std::vector<cplx>& beta, int N);

/// With delta: exp(-delta^2/2 sigma^2) (1 - exp(-N d delta^2/2))^2.
/// Without: 1 - (1 + ln(2 N sigma^2 d)) / (N sigma^2 d), vacuous when
/// 1 + ln(2 N sigma^2 d) <= 0.
BoundValue gaussian_fidelity_lower_bound(int N, double sigma, int d, std::optional<double> delta = std::nullopt);

/// {1 - c (delta / 2 sigma)^s} (1 - exp(-N delta^2 / 2)).
BoundValue general_fidelity_lower_bound(int N, double sigma, double c, double s, double delta);

struct SmallSigmaEstimate {
  double estimate = 0.0;        // erf(sigma sqrt N)
  double small_argument = 0.0;  // 2 sigma sqrt(N / pi)
  double exact = -1.0;          // exact engine value when a state was given, else -1
};

SmallSigmaEstimate small_sigma_fidelity_estimate(int N, double sigma);
/// Also fills `exact` for the product state beta^{(x)N} under a full-readout
/// Gaussian kernel in the computational frame.
SmallSigmaEstimate small_sigma_fidelity_estimate(int N, double sigma, const std::vector<cplx>& beta);

/// Exact F(psi, averaged post state) for beta^{(x)N}: windowed pair sum.
double exact_averaged_fidelity(const std::vector<cplx>& beta, int N, const SmoothingKernel& k);

struct ConditionalFidelity {
  double exact = 0.0;
  double gaussian = 0.0;  // real-line Gaussian approximation of the binomial
  double density = 0.0;   // P(l)
};

/// Qubit case: outcome l is the fraction of letter 0, mu = |beta_0|^2.
ConditionalFidelity conditional_fidelity(const std::vector<cplx>& beta, int N, double sigma, double l);
/// Any pure symmetric state and measurement: |<psi|psi_l>|^2.
double conditional_fidelity(const SymmetricPureState& psi, const TypeMeasurement& m, const Outcome& l);

/// Delta* = sigma sqrt(2 ln(1/(c sigma))), c = 5 sqrt(2 pi)/8.
double conditional_fidelity_threshold(int N, double sigma);
constexpr double kThresholdConstant = 1.5666426716443753;  // 5 sqrt(2 pi) / 8

struct BadOutcome {
  double bound = 0.0;       // exp(-sqrt(8) delta / (sqrt(5 pi) sigma))
  double exact_tail = 0.0;  // P(|l - mu| > delta) for beta^{(x)N}
};

BadOutcome bad_outcome_probability(int N, double sigma, double delta,
                                   const std::vector<cplx>& beta = {cplx(M_SQRT1_2), cplx(M_SQRT1_2)});

/// int P(l) F(psi, psi_l) dl over the outcome quadrature of the kernel.
double mean_conditional_fidelity(const SymmetricPureState& psi, const TypeMeasurement& m);

struct PurifiedBound {
  double bound = 0.0;      // Gaussian bound with d -> d^2
  bool vacuous = false;
  double purified = 0.0;   // exact F for the purification measured on the molecule letters
  double exact = -1.0;     // exact mixed-state F (dense), -1 when over the dense cap
};

/// nu^{(x)N} under a full-readout Gaussian kernel in `basis` (sigma = 0:
/// exact projectors, bound reported vacuous).
PurifiedBound purified_mixed_state_bound(const MoleculeState& nu, int N, double sigma, const ObservableBasis& basis);

struct TradeoffPoint {
  int N = 0;
  int d = 0;
  double sigma = 0.0;
  std::string beta_spec;
  double f_exact = 0.0;
  double f_bound = 0.0;
  bool bound_vacuous = false;
  Regime regime = Regime::transition;
  std::optional<double> runtime_ms;
};

struct SweepSpec {
  std::vector<int> Ns;
  std::vector<double> sigmas;
  std::vector<cplx> beta;
  std::string beta_spec;
  int threads = 1;
  bool timing = false;
};

/// Exact F and the Gaussian bound on every (N, sigma) grid point, N major.
std::vector<TradeoffPoint> tradeoff_sweep(const SweepSpec& spec);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace macrobs
