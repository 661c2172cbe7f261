#pragma once

#include <vector>

#include "macrobs/oracle.hpp"
#include "macrobs/prior.hpp"
#include "macrobs/symmetric.hpp"

namespace macrobs {

/// A coarse measurement whose scalar outcome is reported only as the cell
/// [edges[b], edges[b+1]) it falls in. Edges run from -inf to +inf.
struct HistoryEvent {
  ObservableBasis basis;
  SmoothingKernel kernel;
  std::vector<double> edges;

  /// Adds the two unbounded outer cells around the interior cuts.
  static HistoryEvent with_cuts(ObservableBasis basis, SmoothingKernel kernel, std::vector<double> cuts);
  /// Cells of width sigma over mean +- 4 sigma plus two overflow cells.
  static HistoryEvent default_bins(ObservableBasis basis, SmoothingKernel kernel, double mean);

  int bins() const { return static_cast<int>(edges.size()) - 1; }
  void validate() const;
};

/// Events in time order; t_k is ordinal only.
struct HistoryFamily {
  std::vector<HistoryEvent> events;
  void validate() const;
};

/// Supermolecule alphabets are limited to this many letters.
constexpr int kSupermoleculeCap = 8;

struct Preparation {
  enum class Kind { pure_product, exchangeable, product_list, block_product };
  Kind kind = Kind::pure_product;
  int N = 0;
  int d = 0;
  CVector psi;                       // pure_product: molecule state, computational frame
  PriorGrid prior;                   // exchangeable
  std::vector<MoleculeState> list;   // product_list
  int xi = 1;                        // block_product
  CVector block;                     // block_product: d^xi amplitudes, molecule 0 most significant

  static Preparation pure_product(const CVector& psi, int N);
  static Preparation pure_product(const std::vector<cplx>& beta, int N);
  static Preparation exchangeable(PriorGrid prior, int N);
  static Preparation product_list(std::vector<MoleculeState> list);
  void validate() const;
};

/// Each xi-block is one supermolecule. Blocks symmetric under permutations
/// inside the block use the xi-molecule types as letters; others use words.
Preparation block_preparation(int xi, int N, const CVector& block_state);

/// P(bins[k] on event k for every k), chained Kraus updates with
/// sqrt of the bin-integrated POVM element.
double history_probability(const Preparation& prep, const HistoryFamily& family, const std::vector<int>& bins,
                           const oracle::Limits& lim = {});

/// Joint probabilities of every bin tuple, event 0 most significant.
std::vector<double> history_table(const Preparation& prep, const HistoryFamily& family,
                                  const oracle::Limits& lim = {});

struct SumRule {
  double epsilon = 0.0;
  int event = -1;  // event whose marginalization is worst
};

/// max over events k and bin tuples of the other events of
/// |P(history without k) - sum over bins of k of P(history)|.
SumRule sum_rule_violation(const HistoryFamily& family, const Preparation& prep, const oracle::Limits& lim = {});

struct CommutatorCheck {
  CMatrix lhs;  // [A_N, B_N]
  CMatrix rhs;  // C_N / N
  double residual = 0.0;      // || N [A_N, B_N] - C_N ||
  double norm_commutator = 0.0;
  double norm_c = 0.0;        // || C_N ||
};

/// A_N = (1/N) sum_k a_(k), likewise B_N and C_N from c = [a, b].
CommutatorCheck commutator_relation(const CMatrix& a, const CMatrix& b, int N, const oracle::Limits& lim = {});

MoleculeState mean_molecule_state(const std::vector<MoleculeState>& nus);

/// P(Q_L | (x)_k nu_k) over the canonical types, by a Poisson-multinomial
/// recursion on per-molecule letter probabilities.
std::vector<double> product_type_probabilities(const std::vector<MoleculeState>& nus, const ObservableBasis& basis);

struct ProductDensity {
  double density = 0.0;    // product list
  double reference = 0.0;  // nu_bar^{(x)N}
};

ProductDensity product_type_distribution(const std::vector<MoleculeState>& nus, const ObservableBasis& basis,
                                         const SmoothingKernel& k, const Outcome& l);

/// Total variation between the outcome laws of the product list and of
/// nu_bar^{(x)N}, over the kernel's outcome quadrature.
double separable_total_variation(const std::vector<MoleculeState>& nus, const ObservableBasis& basis,
                                 const SmoothingKernel& k);

}  // namespace macrobs
