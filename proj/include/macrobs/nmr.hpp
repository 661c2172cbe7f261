#pragma once

#include <cstdint>
#include <vector>

#include "macrobs/symmetric.hpp"

namespace macrobs {

/// Readout coil coupled to the transverse magnetization of N spin-1/2
/// molecules. Widths are in normalized-type units; the field readout r is
/// in magnetization units, r = f(l) = coupling N (2 l - 1) / 2 with l the
/// fraction of molecules in the +1/2 eigenstate of `basis`.
struct CoilModel {
  double coupling = 1.0;   // gamma t
  double lambda = 0.1;     // coherent width of each field mode
  double sigma_mix = 0.0;  // thermal spread of the mode centers
  int N = 1;
  ObservableBasis basis = ObservableBasis::spin('x');
  int gh_nodes = 64;

  void validate() const;
  /// lambda + sigma_mix.
  double total_width() const { return lambda + sigma_mix; }
  /// dr/dl = coupling N.
  double jacobian() const { return coupling * N; }
  double to_field(double l) const { return jacobian() * (l - 0.5); }
  double to_type(double r) const { return r / jacobian() + 0.5; }
};

struct ThermalSpec {
  CMatrix h;          // single-molecule Hamiltonian
  double beta = 0.0;  // inverse temperature
};

/// e^{-beta h} / z. beta = inf gives the (normalized) ground-space projector.
MoleculeState thermal_molecule_state(const ThermalSpec& spec);

/// w nu w^dag for a product state, and the induced action on symmetric states.
MoleculeState apply_collective_pulse(const MoleculeState& nu, const CMatrix& w);
SymmetricPureState apply_collective_pulse(const SymmetricPureState& psi, const CMatrix& w);
SymmetricDensity apply_collective_pulse(const SymmetricDensity& rho, const CMatrix& w);

/// Pure coil: Gaussian of width lambda on the fraction readout. Throws when
/// sigma_mix != 0.
SmoothingKernel ideal_coil_kernel(const CoilModel& coil);

/// Outcome density per unit r for the ideal coil.
double ideal_field_density(const CoilModel& coil, const SymmetricPureState& psi, double r);

/// Tr{E_r rho} per unit r, E_r = int g_sigma(q) Q_{r-q}^2 dq with the
/// q-integral done by Gauss-Hermite.
double thermal_outcome_density(const CoilModel& coil, const SymmetricPureState& psi, double r);
double thermal_outcome_density(const CoilModel& coil, const SymmetricDensity& rho, double r);
/// Same for nu^{(x)N} through its multinomial type law.
double thermal_outcome_density(const CoilModel& coil, const MoleculeState& nu, double r);

/// rho_{N|r} for a pure input: branches Q_{r-q_i} psi (normalized) with
/// weights proportional to w_i ||Q_{r-q_i} psi||^2.
struct ThermalPost {
  std::vector<double> weights;
  std::vector<SymmetricPureState> branches;
  double density = 0.0;  // outcome density per unit r
};

ThermalPost thermal_coil_update(const CoilModel& coil, const SymmetricPureState& psi, double r);
SymmetricDensity thermal_coil_update(const CoilModel& coil, const SymmetricDensity& rho, double r);

/// F(psi, rho_{N|r}) = sum_i p_i |<psi|branch_i>|^2.
double fidelity(const SymmetricPureState& psi, const ThermalPost& post);

/// Outcome-averaged fidelity <psi| int rho_{N|r} P(r) dr |psi>. The thermal
/// shift integrates out, leaving sum_{L,L'} p_L p_L' G_lambda(L, L').
double post_fidelity(const CoilModel& coil, const SymmetricPureState& psi);

/// Variance of the fraction outcome l: multinomial part + lambda^2 + sigma_mix^2.
double outcome_variance(const CoilModel& coil, const SymmetricPureState& psi);

/// max over types L of |int E_l(L) dl - 1| on the lattice of step
/// lambda/20 covering every Gauss-Hermite shift out to 8 total widths.
double povm_completeness_error(const CoilModel& coil);

/// Field outcomes r of independent fresh measurements on psi.
std::vector<double> sample_field_outcomes(const CoilModel& coil, const SymmetricPureState& psi, std::size_t count,
                                          std::uint64_t seed);

/// First an ideal measurement of width sigma, then an exact type
/// measurement in the same basis. spread is the outcome-averaged standard
/// deviation of the second result (fraction units); predicted is
/// (1/sigma^2 + 1/v)^{-1/2} with v the multinomial variance.
struct BackToBack {
  double spread = 0.0;
  double multinomial = 0.0;
  double predicted = 0.0;
};

BackToBack back_to_back_spread(const SymmetricPureState& psi, double sigma);

struct NmrPoint {
  int N = 0;
  double lambda = 0.0;
  double sigma_mix = 0.0;
  double total_width = 0.0;
  double f_post = 0.0;
  double outcome_var = 0.0;
};

/// Balanced product state in the coil basis, fixed total width, lambda
/// running over `fractions` of it.
std::vector<NmrPoint> nmr_width_sweep(int N, double total_width, const std::vector<double>& fractions,
                                      int threads = 1);

}  // namespace macrobs
