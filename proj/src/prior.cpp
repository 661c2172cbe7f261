#include "macrobs/prior.hpp"

#include <cmath>

#include "macrobs/errors.hpp"

namespace macrobs {

PriorGrid PriorGrid::single(const MoleculeState& nu) { return {{nu}, {1.0}}; }

PriorGrid PriorGrid::uniform(std::vector<MoleculeState> states) {
  if (states.empty()) throw ValidationError("prior: no states");
  std::vector<double> w(states.size(), 1.0 / states.size());
  return {std::move(states), std::move(w)};
}

PriorGrid PriorGrid::bloch_grid(int directions, int shells) {
  if (directions < 1 || shells < 1) throw ValidationError("prior: grid sizes must be >= 1");
  const double golden = 3.14159265358979323846 * (3.0 - std::sqrt(5.0));
  std::vector<MoleculeState> states;
  for (int s = 1; s <= shells; ++s) {
    const double r = static_cast<double>(s) / shells;
    for (int i = 0; i < directions; ++i) {
      const double z = directions == 1 ? 1.0 : 1.0 - 2.0 * (i + 0.5) / directions;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      states.push_back(MoleculeState::bloch(r * rho * std::cos(phi), r * rho * std::sin(phi), r * z));
    }
  }
  return uniform(std::move(states));
}

int PriorGrid::d() const {
  if (states.empty()) throw ValidationError("prior: no states");
  return states.front().d();
}

void PriorGrid::validate() const {
  if (states.empty()) throw ValidationError("prior: no states");
  if (states.size() != weights.size()) throw ValidationError("prior: states and weights differ in length");
  double s = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("prior: weights must be finite and >= 0");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-10) throw ValidationError("prior: weights do not sum to one");
  const int dd = d();
  for (const auto& nu : states) {
    if (nu.d() != dd) throw ValidationError("prior: mixed dimensions");
    nu.validate();
  }
}

MoleculeState PriorGrid::mean() const {
  validate();
  CMatrix m = CMatrix::Zero(d(), d());
  for (std::size_t i = 0; i < size(); ++i) m += weights[i] * states[i].rho;
  return {m};
}

}  // namespace macrobs
