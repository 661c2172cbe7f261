#include "macrobs/nmr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "macrobs/errors.hpp"
#include "macrobs/sweep.hpp"

namespace macrobs {

namespace {

constexpr double kTinyWeight = 1e-20;

struct Shifts {
  std::vector<double> q;
  std::vector<double> w;
};

// Thermal shifts of the mode center in fraction units.
Shifts shifts_of(const CoilModel& coil) {
  if (coil.sigma_mix == 0.0) return {{0.0}, {1.0}};
  thread_local int cached_n = 0;
  thread_local GaussHermite gh;
  if (cached_n != coil.gh_nodes) {
    gh = gauss_hermite(coil.gh_nodes);
    cached_n = coil.gh_nodes;
  }
  Shifts s;
  for (Eigen::Index i = 0; i < gh.nodes.size(); ++i) {
    if (gh.weights(i) < kTinyWeight) continue;
    s.q.push_back(coil.sigma_mix * gh.nodes(i));
    s.w.push_back(gh.weights(i));
  }
  return s;
}

TypeMeasurement coil_measurement(const CoilModel& coil) {
  return {coil.basis, SmoothingKernel::gaussian(coil.lambda, Readout::fraction(0, 2))};
}

SymmetricPureState in_coil_frame(const CoilModel& coil, const SymmetricPureState& psi) {
  coil.validate();
  if (psi.d() != 2) throw ValidationError("coil: molecules must be spin-1/2");
  if (psi.N() != coil.N) throw ValidationError("coil: state size differs from the coil's N");
  return psi.basis().same_frame(coil.basis) ? psi : rotate_basis(psi, coil.basis);
}

SymmetricDensity in_coil_frame(const CoilModel& coil, const SymmetricDensity& rho) {
  coil.validate();
  if (rho.d() != 2) throw ValidationError("coil: molecules must be spin-1/2");
  if (rho.N() != coil.N) throw ValidationError("coil: state size differs from the coil's N");
  return rho.basis().same_frame(coil.basis) ? rho : rotate_basis(rho, coil.basis);
}

// sum_L P_L sum_i w_i q_L(l - q_i) for type probabilities indexed by the
// count of letter 0.
double mixed_density(const CoilModel& coil, const Shifts& sh, const std::vector<double>& P0, double l) {
  const double inv = 1.0 / (std::sqrt(2 * M_PI) * coil.lambda);
  double s = 0.0;
  for (std::size_t c = 0; c < P0.size(); ++c) {
    if (P0[c] == 0.0) continue;
    const double x = static_cast<double>(c) / coil.N;
    double a = 0.0;
    for (std::size_t i = 0; i < sh.q.size(); ++i) {
      const double z = (l - sh.q[i] - x) / coil.lambda;
      a += sh.w[i] * std::exp(-0.5 * z * z);
    }
    s += P0[c] * a * inv;
  }
  return s;
}

std::vector<double> letter0_law(const SymmetricPureState& psi) {
  auto p = psi.probabilities();
  std::vector<double> P0(psi.N() + 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) P0[psi.types().counts(i)[0]] += p[i];
  return P0;
}

}  // namespace

void CoilModel::validate() const {
  if (!(coupling > 0.0) || !std::isfinite(coupling)) throw ValidationError("coil: coupling must be positive");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("coil: lambda must be positive");
  if (!(sigma_mix >= 0.0) || !std::isfinite(sigma_mix)) throw ValidationError("coil: sigma_mix must be >= 0");
  if (N < 1) throw ValidationError("coil: N must be >= 1");
  if (basis.d() != 2) throw ValidationError("coil: basis must be a qubit basis");
  if (gh_nodes < 1) throw ValidationError("coil: need at least one quadrature node");
}

MoleculeState thermal_molecule_state(const ThermalSpec& spec) {
  if (spec.h.rows() != spec.h.cols() || spec.h.rows() == 0 || !is_hermitian(spec.h, 1e-12))
    throw ValidationError("thermal state: h must be Hermitian");
  if (std::isnan(spec.beta)) throw ValidationError("thermal state: beta is NaN");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(spec.h);
  const auto& E = es.eigenvalues();
  const double e0 = E.minCoeff();
  RVector p(E.size());
  for (Eigen::Index i = 0; i < E.size(); ++i) {
    if (std::isinf(spec.beta))
      p(i) = (spec.beta > 0) == (E(i) - e0 < 1e-12 * std::max(1.0, std::abs(e0))) ? 1.0 : 0.0;
    else
      p(i) = std::exp(-spec.beta * (E(i) - e0));
  }
  if (std::isinf(spec.beta) && spec.beta < 0) {
    const double e1 = E.maxCoeff();
    for (Eigen::Index i = 0; i < E.size(); ++i) p(i) = e1 - E(i) < 1e-12 * std::max(1.0, std::abs(e1)) ? 1.0 : 0.0;
  }
  p /= p.sum();
  MoleculeState nu{es.eigenvectors() * p.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint()};
  nu.rho = 0.5 * (nu.rho + nu.rho.adjoint());
  return nu;
}

MoleculeState apply_collective_pulse(const MoleculeState& nu, const CMatrix& w) {
  if (w.rows() != nu.d() || !is_unitary(w, 1e-10)) throw ValidationError("pulse: w must be a unitary of the molecule size");
  return {w * nu.rho * w.adjoint()};
}

SymmetricPureState apply_collective_pulse(const SymmetricPureState& psi, const CMatrix& w) {
  if (w.rows() != psi.d() || !is_unitary(w, 1e-10)) throw ValidationError("pulse: w must be a unitary of the molecule size");
  const CMatrix& B = psi.basis().u;
  CVector a = psi.amplitudes();
  InducedAction(psi.types_ptr(), B.adjoint() * w * B).apply(a);
  return SymmetricPureState::from_amplitudes(psi.N(), psi.basis(), a);
}

SymmetricDensity apply_collective_pulse(const SymmetricDensity& rho, const CMatrix& w) {
  if (w.rows() != rho.d() || !is_unitary(w, 1e-10)) throw ValidationError("pulse: w must be a unitary of the molecule size");
  const CMatrix& B = rho.basis().u;
  CMatrix U = induced_unitary(B.adjoint() * w * B, rho.N());
  return SymmetricDensity(rho.N(), rho.basis(), U * rho.matrix() * U.adjoint());
}

SmoothingKernel ideal_coil_kernel(const CoilModel& coil) {
  coil.validate();
  if (coil.sigma_mix != 0.0) throw ValidationError("ideal coil kernel: coil has a thermal spread");
  return coil_measurement(coil).kernel;
}

double ideal_field_density(const CoilModel& coil, const SymmetricPureState& psi, double r) {
  auto k = ideal_coil_kernel(coil);
  auto s = in_coil_frame(coil, psi);
  return outcome_density(s, {coil.basis, k}, {coil.to_type(r)}) / coil.jacobian();
}

double thermal_outcome_density(const CoilModel& coil, const SymmetricPureState& psi, double r) {
  auto s = in_coil_frame(coil, psi);
  return mixed_density(coil, shifts_of(coil), letter0_law(s), coil.to_type(r)) / coil.jacobian();
}

double thermal_outcome_density(const CoilModel& coil, const SymmetricDensity& rho, double r) {
  auto s = in_coil_frame(coil, rho);
  std::vector<double> P0(coil.N + 1, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    P0[s.types().counts(i)[0]] += s.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  return mixed_density(coil, shifts_of(coil), P0, coil.to_type(r)) / coil.jacobian();
}

double thermal_outcome_density(const CoilModel& coil, const MoleculeState& nu, double r) {
  coil.validate();
  if (nu.d() != 2) throw ValidationError("coil: molecules must be spin-1/2");
  ProbVector R = nu.letter_probabilities(coil.basis);
  std::vector<double> P0(coil.N + 1, 0.0);
  for (int c = 0; c <= coil.N; ++c) {
    const int L[2] = {c, coil.N - c};
    P0[c] = std::exp(log_multinomial_pmf(L, R));
  }
  return mixed_density(coil, shifts_of(coil), P0, coil.to_type(r)) / coil.jacobian();
}

ThermalPost thermal_coil_update(const CoilModel& coil, const SymmetricPureState& psi, double r) {
  auto s = in_coil_frame(coil, psi);
  const auto m = coil_measurement(coil);
  const auto sh = shifts_of(coil);
  const double l = coil.to_type(r);
  ThermalPost post;
  double Z = 0.0;
  for (std::size_t i = 0; i < sh.q.size(); ++i) {
    const Outcome li = {l - sh.q[i]};
    const double P = outcome_density(s, m, li);
    if (!(P > 0.0)) continue;
    post.weights.push_back(sh.w[i] * P);
    post.branches.push_back(conditional_post_state(s, m, li));
    Z += sh.w[i] * P;
  }
  if (!(Z > 0.0)) throw ZeroProbabilityError("thermal update: outcome has zero density");
  for (double& w : post.weights) w /= Z;
  post.density = Z / coil.jacobian();
  return post;
}

SymmetricDensity thermal_coil_update(const CoilModel& coil, const SymmetricDensity& rho, double r) {
  auto s = in_coil_frame(coil, rho);
  const auto m = coil_measurement(coil);
  const auto sh = shifts_of(coil);
  const double l = coil.to_type(r);
  CMatrix acc = CMatrix::Zero(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()));
  double Z = 0.0;
  for (std::size_t i = 0; i < sh.q.size(); ++i) {
    const Outcome li = {l - sh.q[i]};
    const double P = outcome_density(s, m, li);
    if (!(P > 0.0)) continue;
    acc += (sh.w[i] * P) * conditional_post_density(s, m, li).matrix();
    Z += sh.w[i] * P;
  }
  if (!(Z > 0.0)) throw ZeroProbabilityError("thermal update: outcome has zero density");
  if (sh.q.size() == 1) return conditional_post_density(s, m, {l - sh.q[0]});
  return SymmetricDensity(s.N(), s.basis(), acc / Z);
}

double fidelity(const SymmetricPureState& psi, const ThermalPost& post) {
  double F = 0.0;
  for (std::size_t i = 0; i < post.branches.size(); ++i) F += post.weights[i] * fidelity(psi, post.branches[i]);
  return F;
}

double post_fidelity(const CoilModel& coil, const SymmetricPureState& psi) {
  auto s = in_coil_frame(coil, psi);
  return averaged_fidelity(s, coil_measurement(coil)).fidelity;
}

double outcome_variance(const CoilModel& coil, const SymmetricPureState& psi) {
  auto P0 = letter0_law(in_coil_frame(coil, psi));
  double m = 0.0, m2 = 0.0;
  for (std::size_t c = 0; c < P0.size(); ++c) {
    const double x = static_cast<double>(c) / coil.N;
    m += P0[c] * x;
    m2 += P0[c] * x * x;
  }
  return std::max(0.0, m2 - m * m) + coil.lambda * coil.lambda + coil.sigma_mix * coil.sigma_mix;
}

double povm_completeness_error(const CoilModel& coil) {
  coil.validate();
  const auto sh = shifts_of(coil);
  double qmax = 0.0;
  for (double q : sh.q) qmax = std::max(qmax, std::abs(q));
  const double h = coil.lambda / 20.0, pad = 8.0 * coil.lambda + qmax;
  const double lo = -pad, hi = 1.0 + pad;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  double worst = 0.0;
  std::vector<double> P0(1, 1.0);
  for (int c = 0; c <= coil.N; ++c) {
    // A point mass at type c is the one-entry law shifted by c / N.
    const double x = static_cast<double>(c) / coil.N;
    double s = 0.0;
    for (std::size_t j = 0; j <= n; ++j) s += h * mixed_density(coil, sh, P0, lo - x + h * static_cast<double>(j));
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

std::vector<double> sample_field_outcomes(const CoilModel& coil, const SymmetricPureState& psi, std::size_t count,
                                          std::uint64_t seed) {
  auto P0 = letter0_law(in_coil_frame(coil, psi));
  auto rng = substream(seed, 0);
  std::discrete_distribution<int> pick(P0.begin(), P0.end());
  std::normal_distribution<double> g;
  std::vector<double> out(count);
  for (auto& r : out) {
    const double x = static_cast<double>(pick(rng)) / coil.N;
    const double l = x + coil.lambda * g(rng) + coil.sigma_mix * g(rng);
    r = coil.to_field(l);
  }
  return out;
}

BackToBack back_to_back_spread(const SymmetricPureState& psi, double sigma) {
  if (psi.d() != 2) throw ValidationError("back-to-back: qubit states only");
  if (!(sigma > 0.0)) throw ValidationError("back-to-back: sigma must be positive");
  const int N = psi.N();
  auto P0 = letter0_law(psi);
  BackToBack out;
  double m = 0.0, m2 = 0.0;
  std::vector<double> xs;
  std::vector<double> ps;
  for (int c = 0; c <= N; ++c) {
    const double x = static_cast<double>(c) / N;
    m += P0[c] * x;
    m2 += P0[c] * x * x;
    if (P0[c] > 1e-300) {
      xs.push_back(x);
      ps.push_back(P0[c]);
    }
  }
  const double v = std::max(0.0, m2 - m * m);
  out.multinomial = std::sqrt(v);
  out.predicted = v > 0 ? 1.0 / std::sqrt(1.0 / (sigma * sigma) + 1.0 / v) : 0.0;
  auto k = SmoothingKernel::gaussian(sigma, Readout::fraction(0, 2));
  std::vector<std::vector<double>> centers;
  for (double x : xs) centers.push_back({x});
  auto quad = OutcomeQuadrature::build(k, centers);
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    double P = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double w = ps[j] * k.weight({xs[j]}, quad.nodes[i]);
      P += w;
      s1 += w * xs[j];
      s2 += w * xs[j] * xs[j];
    }
    if (!(P > 0.0)) continue;
    const double var = std::max(0.0, s2 / P - (s1 / P) * (s1 / P));
    out.spread += quad.weights[i] * P * std::sqrt(var);
  }
  return out;
}

std::vector<NmrPoint> nmr_width_sweep(int N, double total_width, const std::vector<double>& fractions, int threads) {
  if (N < 1) throw ValidationError("sweep: N must be >= 1");
  if (!(total_width > 0.0)) throw ValidationError("sweep: total width must be positive");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError("sweep: lambda fractions must lie in (0, 1]");
  const double r2 = 1.0 / std::sqrt(2.0);
  auto psi = product_state(std::vector<cplx>{r2, r2}, N, ObservableBasis::spin('x'));
  return parallel_map<NmrPoint>(fractions.size(), threads, [&](std::size_t i) {
    CoilModel coil;
    coil.N = N;
    coil.lambda = fractions[i] * total_width;
    coil.sigma_mix = total_width - coil.lambda;
    NmrPoint p;
    p.N = N;
    p.lambda = coil.lambda;
    p.sigma_mix = coil.sigma_mix;
    p.total_width = total_width;
    p.f_post = post_fidelity(coil, psi);
    p.outcome_var = outcome_variance(coil, psi);
    return p;
  });
}

}  // namespace macrobs
