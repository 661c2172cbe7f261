#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace macrobs {

/// One engine-vs-dense comparison.
struct EquivalenceCheck {
  int index = 0;  // random case number
  int N = 0;
  int d = 0;
  double sigma = 0.0;
  std::string quantity;  // outcome_density, conditional_post, averaged_post, reduction, fidelity
  double max_error = 0.0;
};

struct EquivalenceSpec {
  int cases = 50;
  int max_qubits = 8;   // N range for d = 2
  int max_qutrits = 5;  // N range for d = 3
  std::vector<double> sigmas = {0.0, 0.1, 0.3};
  std::uint64_t seed = 7;
  int threads = 1;
};

/// Random product states and mixtures in random frames, each checked on a
/// few outcomes. Cases alternate between d = 2 and d = 3.
std::vector<EquivalenceCheck> run_equivalence_suite(const EquivalenceSpec& spec);

}  // namespace macrobs
