#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "macrobs/prior.hpp"
#include "macrobs/smoothing.hpp"
#include "macrobs/symmetric.hpp"

namespace macrobs {

/// 40 Fibonacci directions times 5 radial shells (qubits only).
PriorGrid default_prior(int d);

/// P(l | nu^{(x)N}) = sum_L m(L, R) q_L(l), R the letter probabilities of nu.
double product_outcome_density(const MoleculeState& nu, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                               const Outcome& l);

/// sum_i w_i P(l | nu_i^{(x)N}).
double exchangeable_outcome_density(const PriorGrid& prior, int N, const ObservableBasis& basis,
                                    const SmoothingKernel& k, const Outcome& l);

/// Bayes step w_i <- w_i P(l | nu_i^{(x)N}) / P(l). Throws ZeroProbabilityError
/// when no component supports l.
PriorGrid posterior_update(const PriorGrid& prior, int N, const ObservableBasis& basis, const SmoothingKernel& k,
                           const Outcome& l);

/// Weight of grid points within trace distance `radius` of nu_ref.
double posterior_concentration(const PriorGrid& prior, const MoleculeState& nu_ref, double radius);

/// sum_i w_i T(nu_i, posterior mean).
double posterior_spread(const PriorGrid& prior);

struct TomographyRound {
  std::string basis;
  Outcome outcome;
  double concentration_05 = 0.0;
  double concentration_10 = 0.0;
  double spread = 0.0;
  std::size_t mode = 0;  // grid index of the largest weight
};

struct TomographyRecord {
  std::vector<TomographyRound> rounds;
  PriorGrid posterior;
};

struct TomographySpec {
  std::vector<ObservableBasis> bases;
  std::vector<std::string> tags;
  int N = 1000;
  double sigma = 0.05;
  int rounds = 1;           // passes over `bases`
  bool fresh_batch = false; // new sample each measurement instead of one disturbed sample
  PriorGrid prior;          // empty: default_prior
  std::uint64_t seed = 1;
};

/// Spin-axis bases x, y, z with their tags.
TomographySpec spin_axes_spec(int N, double sigma, std::uint64_t seed);

/// Samples outcomes from nu_true and updates the posterior after each.
/// Readout: fraction of letter 0 in each basis. With one reused sample the
/// outcomes follow the exact sequential law of the disturbed state; this
/// needs a pure nu_true or d = 2.
TomographyRecord simulate_tomography(const MoleculeState& nu_true, const TomographySpec& spec);

/// A grid state drawn uniformly among the pure ones (purity > 1 - 1e-9),
/// using substream(seed, 1).
MoleculeState random_pure_grid_state(const PriorGrid& grid, std::uint64_t seed);

/// One draw from q_L for a type with the given readout center.
Outcome sample_outcome(const SmoothingKernel& k, const std::vector<double>& center, std::mt19937_64& rng);

}  // namespace macrobs
