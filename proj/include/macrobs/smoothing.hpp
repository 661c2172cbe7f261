#pragma once

#include <string>
#include <utility>
#include <vector>

#include "macrobs/combinatorics.hpp"

namespace macrobs {

/// What a coarse measurement reports about the normalized type L/N.
///   full   : the whole vector, outcome in R^d
///   linear : the scalar sum_j w_j L_j/N (letter fraction, magnetization, ...)
struct Readout {
  enum class Kind { full, linear };
  Kind kind = Kind::full;
  std::vector<double> weights;

  static Readout full() { return {}; }
  static Readout linear(std::vector<double> w) { return {Kind::linear, std::move(w)}; }
  /// Fraction of letter j among d letters.
  static Readout fraction(int j, int d);

  int outcome_dim(int d) const { return kind == Kind::full ? d : 1; }
  /// Noise-free outcome of a type given as raw counts.
  std::vector<double> center(const int* counts, int d) const;
  std::vector<double> center(const ProbVector& normalized) const;
};

using Outcome = std::vector<double>;

/// The family of smoothing densities q_L(l).
///
/// gaussian with sigma > 0: isotropic Gaussian of width sigma around the
/// readout center (a density in l). gaussian with sigma == 0 stands for the
/// exact type projectors; outcomes are then discrete (probability masses).
/// comb: scalar readouts only; a fixed outcome grid, and each type puts the
/// Gaussian mass of each grid cell on that grid point (hard binning when
/// sigma == 0). Cell edges are midpoints between grid points, outer cells
/// are unbounded.
class SmoothingKernel {
 public:
  enum class Kind { gaussian, comb };

  static SmoothingKernel gaussian(double sigma, Readout readout = Readout::full());
  static SmoothingKernel exact(Readout readout = Readout::full()) { return gaussian(0.0, std::move(readout)); }
  static SmoothingKernel comb(double sigma, std::vector<double> grid, Readout readout);

  Kind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  const Readout& readout() const { return readout_; }
  const std::vector<double>& grid() const { return grid_; }

  /// True when outcomes are a discrete set (exact projectors or comb).
  bool discrete() const { return kind_ == Kind::comb || sigma_ == 0.0; }

  /// q(l) for a type whose readout center is `center`; a density for
  /// continuous kernels and a probability mass for discrete ones.
  double weight(const std::vector<double>& center, const Outcome& l) const;

  /// G = integral of sqrt(q_a q_b) for two readout centers.
  double overlap(const std::vector<double>& a, const std::vector<double>& b) const;

  /// Mass of q in the half-open interval [lo, hi) (scalar readouts only).
  double bin_mass(double center, double lo, double hi) const;

  /// Comb: per-cell masses for a scalar center.
  std::vector<double> comb_masses(double center) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::gaussian;
  double sigma_ = 0.0;
  Readout readout_;
  std::vector<double> grid_;
};

/// G(i, j) over a fixed list of readout centers, for double sums over
/// many type pairs.
class KernelOverlap {
 public:
  KernelOverlap(const SmoothingKernel& k, std::vector<std::vector<double>> centers);
  double operator()(std::size_t i, std::size_t j) const;
  std::size_t size() const { return centers_.size(); }

 private:
  SmoothingKernel k_;
  std::vector<std::vector<double>> centers_;
  std::vector<std::vector<double>> sqrt_masses_;  // comb only
  double inv8s2_ = 0.0;
};

/// (2 pi sigma^2)^{-d/2} exp{-|l - L|^2 / 2 sigma^2}.
double gaussian_density(double sigma, const ProbVector& L, const Outcome& l);

/// Decoherence kernel G(L,L') between normalized types.
double decoherence_kernel(const SmoothingKernel& k, const ProbVector& L, const ProbVector& Lp);

/// G by tensor-grid quadrature of sqrt(q_L q_L') over the outcome space:
/// step sigma/20, truncated at +-6 sigma around the midpoint of the two
/// centers. Continuous kernels only.
double decoherence_kernel_quadrature(const SmoothingKernel& k, const ProbVector& L, const ProbVector& Lp);

/// Nodes/weights over the outcome space for a given set of readout centers.
///
/// Scalar readout: lattice with step sigma/20 on the union of
/// [c - 6 sigma, c + 6 sigma]. Full readout: all centers lie on the
/// hyperplane sum(l) = 1, and the Gaussian factorizes into an in-plane part
/// and a normal part; the normal direction is integrated analytically, so
/// the lattice is (d-1)-dimensional with weight h^{d-1} sqrt(2 pi sigma^2).
/// That is exact for integrands that are sums of products q_a^{1/2} q_b^{1/2}
/// or single q_a (probabilities, kernels, fidelity numerators). Discrete
/// kernels: one node per distinct outcome with weight 1.
struct OutcomeQuadrature {
  std::vector<Outcome> nodes;
  std::vector<double> weights;  // normal-direction factor already included
  bool plane_reduced = false;

  static OutcomeQuadrature build(const SmoothingKernel& k, const std::vector<std::vector<double>>& centers,
                                 int steps_per_sigma = 20, double half_width = 6.0);
};

/// Outcome quadrature for all types of (N, d).
OutcomeQuadrature outcome_quadrature(const SmoothingKernel& k, int N, int d);

struct LipschitzSample {
  ProbVector L;
  ProbVector Lp;
  Outcome l;
};

struct LipschitzEstimate {
  double c = 0.0;
  double s = 1.0;
  std::size_t used = 0;
};

/// Smallest c with |q_L(l) - q_L'(l)| <= c (|L - L'|_1 / scale)^s over the
/// sample. scale defaults to the kernel width (pass one for sigma == 0).
LipschitzEstimate lipschitz_estimate(const SmoothingKernel& k, const std::vector<LipschitzSample>& samples,
                                     double s = 1.0, double scale = 0.0);

/// Refinement sweep: at t = t0 2^-i, estimates c from consecutive pairs of
/// spacing t along L + [0,1] dir, all evaluated at the outcome l. A kernel is
/// flagged non-Lipschitz when the estimate keeps growing as t shrinks.
struct LipschitzSweep {
  std::vector<double> steps;
  std::vector<double> estimates;
  bool diverging = false;
};
LipschitzSweep lipschitz_refinement(const SmoothingKernel& k, const ProbVector& L, const ProbVector& dir,
                                    const Outcome& l, double t0, int levels, double s = 1.0, double scale = 0.0);

}  // namespace macrobs
