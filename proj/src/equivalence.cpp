#include "macrobs/equivalence.hpp"

#include <algorithm>
#include <random>

#include "macrobs/errors.hpp"
#include "macrobs/oracle.hpp"
#include "macrobs/sweep.hpp"
#include "macrobs/symmetric.hpp"

namespace macrobs {

namespace {

CMatrix haar_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

std::vector<cplx> random_amplitudes(int d, std::mt19937_64& rng) {
  CVector v = haar_unitary(d, rng).col(0);
  return std::vector<cplx>(v.data(), v.data() + d);
}

double max_abs(const CMatrix& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

Outcome pick_outcome(const SmoothingKernel& k, const SymmetricDensity& rho, std::mt19937_64& rng) {
  // A type of the state's support, plus kernel noise.
  std::vector<double> p(rho.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = std::max(0.0, rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real());
  std::discrete_distribution<std::size_t> pick(p.begin(), p.end());
  Outcome l = k.readout().center(rho.types().counts(pick(rng)), rho.d());
  std::normal_distribution<double> g(0.0, k.sigma());
  if (k.sigma() > 0)
    for (double& x : l) x += g(rng);
  return l;
}

std::vector<EquivalenceCheck> one_case(const EquivalenceSpec& spec, int index) {
  auto rng = substream(spec.seed, static_cast<std::uint64_t>(index));
  const int d = index % 2 == 0 ? 2 : 3;
  const int maxN = d == 2 ? spec.max_qubits : spec.max_qutrits;
  const int N = std::uniform_int_distribution<int>(1, maxN)(rng);
  const double sigma = spec.sigmas[static_cast<std::size_t>(index / 2) % spec.sigmas.size()];
  auto basis = ObservableBasis::from_unitary(haar_unitary(d, rng));
  auto k = SmoothingKernel::gaussian(sigma);
  TypeMeasurement m{basis, k};

  auto psi = product_state(random_amplitudes(d, rng), N, basis);
  // Every third case also mixes in a second product state.
  SymmetricDensity rho = SymmetricDensity::from_pure(psi);
  if (index % 3 == 2) {
    auto phi = product_state(random_amplitudes(d, rng), N, basis);
    rho = SymmetricDensity(N, basis, 0.7 * rho.matrix() + 0.3 * SymmetricDensity::from_pure(phi).matrix());
  }
  const CMatrix dense = oracle::embed(rho);

  std::vector<EquivalenceCheck> out;
  auto add = [&](const char* what, double err) {
    out.push_back({index, N, d, sigma, what, err});
  };

  double e_den = 0.0, e_cond = 0.0;
  for (int t = 0; t < 3; ++t) {
    const Outcome l = pick_outcome(k, rho, rng);
    const double P = oracle::outcome_density(dense, N, basis, k, l);
    e_den = std::max(e_den, std::abs(outcome_density(rho, m, l) - P) / std::max(1.0, P));
    if (P > 0.0)
      e_cond = std::max(e_cond, max_abs(oracle::embed(conditional_post_density(rho, m, l)) -
                                        oracle::conditional_post(dense, N, basis, k, l)));
  }
  add("outcome_density", e_den);
  add("conditional_post", e_cond);

  const auto avg = averaged_post_density(rho, m);
  const CMatrix davg = oracle::averaged_post(dense, N, basis, k);
  add("averaged_post", max_abs(oracle::embed(avg) - davg));
  add("reduction", std::max(max_abs(reduce_single_molecule(avg).rho - oracle::reduce_to_molecule(davg, N, d)),
                            max_abs(reduce_single_molecule(rho).rho - oracle::reduce_to_molecule(dense, N, d))));
  add("fidelity", std::abs(fidelity(rho, avg) - oracle::fidelity(dense, davg)));
  return out;
}

}  // namespace

std::vector<EquivalenceCheck> run_equivalence_suite(const EquivalenceSpec& spec) {
  if (spec.cases < 1) throw ValidationError("equivalence suite: need at least one case");
  if (spec.max_qubits < 1 || spec.max_qutrits < 1) throw ValidationError("equivalence suite: N ranges must be >= 1");
  if (spec.sigmas.empty()) throw ValidationError("equivalence suite: no sigma values");
  oracle::dense_matrix_dim(spec.max_qubits, 2);
  oracle::dense_matrix_dim(spec.max_qutrits, 3);
  auto per = parallel_map<std::vector<EquivalenceCheck>>(static_cast<std::size_t>(spec.cases), spec.threads,
                                                         [&](std::size_t i) { return one_case(spec, static_cast<int>(i)); });
  std::vector<EquivalenceCheck> out;
  for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace macrobs
