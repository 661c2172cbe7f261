#pragma once

#include <vector>

#include "macrobs/symmetric.hpp"

namespace macrobs {

/// Discrete measure over single-molecule states: rho_N = sum_i w_i nu_i^{(x)N}.
struct PriorGrid {
  std::vector<MoleculeState> states;
  std::vector<double> weights;

  static PriorGrid single(const MoleculeState& nu);
  static PriorGrid uniform(std::vector<MoleculeState> states);
  /// Qubit grid: `directions` Fibonacci-sphere directions times `shells`
  /// radii r = k/shells (k = 1..shells), equal weights.
  static PriorGrid bloch_grid(int directions, int shells);

  std::size_t size() const { return states.size(); }
  int d() const;
  /// Non-empty, matching sizes, weights >= 0 summing to one within 1e-10,
  /// every state valid and of one dimension.
  void validate() const;
  /// Weighted mean state.
  MoleculeState mean() const;
};

}  // namespace macrobs
