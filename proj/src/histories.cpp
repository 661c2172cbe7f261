#include "macrobs/histories.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "macrobs/errors.hpp"

namespace macrobs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegligible = 1e-16;

bool is_pure(const CMatrix& rho, CVector* psi) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  const auto& ev = es.eigenvalues();
  if (ev(ev.size() - 1) < 1.0 - 1e-12) return false;
  if (psi) *psi = es.eigenvectors().col(ev.size() - 1);
  return true;
}

// M supermolecules over a D-letter alphabet. contrib[letter] is the molecule
// type the letter adds; letter_map lifts a molecule unitary to the alphabet.
struct Engine {
  int d = 0;
  int D = 0;
  std::shared_ptr<const TypeBasis> types;
  std::vector<TypeVector> contrib;
  std::function<CMatrix(const CMatrix&)> letter_map;
  CVector initial;
};

std::shared_ptr<const TypeBasis> types_for(int M, int D) { return std::make_shared<const TypeBasis>(M, D); }

Engine plain_engine(const CVector& psi, int N) {
  Engine e;
  e.d = e.D = static_cast<int>(psi.size());
  e.types = types_for(N, e.D);
  for (int j = 0; j < e.D; ++j) {
    TypeVector c(e.d, 0);
    c[j] = 1;
    e.contrib.push_back(c);
  }
  e.letter_map = [](const CMatrix& u) { return u; };
  e.initial = product_state(psi, N, ObservableBasis::computational(e.D)).amplitudes();
  return e;
}

// nu = sum_a lambda_a |phi_a><phi_a| purified on letters (j, a), j major.
Engine purified_engine(const MoleculeState& nu, int N) {
  const int d = nu.d();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(nu.rho);
  CVector phi = CVector::Zero(d * d);
  for (int a = 0; a < d; ++a) {
    const double lam = std::max(0.0, es.eigenvalues()(a));
    for (int j = 0; j < d; ++j) phi(j * d + a) = std::sqrt(lam) * es.eigenvectors()(j, a);
  }
  phi /= phi.norm();
  Engine e;
  e.d = d;
  e.D = d * d;
  e.types = types_for(N, e.D);
  for (int j = 0; j < d; ++j)
    for (int a = 0; a < d; ++a) {
      TypeVector c(d, 0);
      c[j] = 1;
      e.contrib.push_back(c);
    }
  e.letter_map = [d](const CMatrix& u) { return kron(u, CMatrix::Identity(d, d)); };
  e.initial = product_state(phi, N, ObservableBasis::computational(e.D)).amplitudes();
  return e;
}

Engine block_engine(const Preparation& p) {
  const int d = p.d, xi = p.xi, M = p.N / xi;
  auto comp = ObservableBasis::computational(d);
  CMatrix V = oracle::symmetric_embedding(xi, comp);
  CVector c = V.adjoint() * p.block;
  Engine e;
  e.d = d;
  if ((V * c - p.block).norm() < 1e-12) {
    TypeBasis letters(xi, d);
    e.D = static_cast<int>(letters.size());
    if (e.D > kSupermoleculeCap) throw ResourceError("block: symmetric block alphabet exceeds the supermolecule cap");
    for (std::size_t t = 0; t < letters.size(); ++t) e.contrib.push_back(letters.type(t));
    e.letter_map = [xi](const CMatrix& u) { return induced_unitary(u, xi); };
  } else {
    e.D = static_cast<int>(p.block.size());
    if (e.D > kSupermoleculeCap) throw ResourceError("block: d^xi exceeds the supermolecule cap");
    for (int w = 0; w < e.D; ++w) e.contrib.push_back(oracle::string_type(w, xi, d));
    e.letter_map = [xi](const CMatrix& u) { return oracle::tensor_power(u, xi); };
    c = p.block;
  }
  e.types = types_for(M, e.D);
  e.initial = product_state(CVector(c / c.norm()), M, ObservableBasis::computational(e.D)).amplitudes();
  return e;
}

// sel[k]: -2 omit event k, -1 enumerate its bins, b >= 0 fix bin b.
using Selection = std::vector<int>;

std::size_t table_size(const HistoryFamily& f, const Selection& sel) {
  std::size_t n = 1;
  for (std::size_t k = 0; k < sel.size(); ++k)
    if (sel[k] == -1) n *= f.events[k].bins();
  return n;
}

std::vector<double> engine_table(const Engine& e, const HistoryFamily& f, const Selection& sel) {
  const std::size_t T = e.types->size();
  std::vector<double> table(table_size(f, sel), 0.0);
  std::vector<int> active;
  for (std::size_t k = 0; k < sel.size(); ++k)
    if (sel[k] != -2) active.push_back(static_cast<int>(k));
  if (active.empty()) {
    table[0] = e.initial.squaredNorm();
    return table;
  }
  // Scalar readout center of every supertype, per distinct readout.
  std::map<std::vector<double>, std::vector<double>> center_cache;
  auto centers_for = [&](const Readout& r) -> const std::vector<double>& {
    auto it = center_cache.find(r.weights);
    if (it != center_cache.end()) return it->second;
    std::vector<double> c(T);
    TypeVector L(e.d);
    for (std::size_t idx = 0; idx < T; ++idx) {
      const int* K = e.types->counts(idx);
      std::fill(L.begin(), L.end(), 0);
      for (int a = 0; a < e.D; ++a)
        if (K[a])
          for (int j = 0; j < e.d; ++j) L[j] += K[a] * e.contrib[a][j];
      c[idx] = r.center(L.data(), e.d)[0];
    }
    return center_cache.emplace(r.weights, std::move(c)).first->second;
  };
  // One action per level: the frame before level i is that of the previous
  // active event, whatever bin was taken.
  std::vector<std::unique_ptr<InducedAction>> actions(active.size());
  CMatrix u_prev = CMatrix::Identity(e.d, e.d);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const CMatrix& u = f.events[active[i]].basis.u;
    CMatrix w = u.adjoint() * u_prev;
    if ((w - CMatrix::Identity(e.d, e.d)).cwiseAbs().maxCoeff() > 1e-14)
      actions[i] = std::make_unique<InducedAction>(e.types, e.letter_map(w));
    u_prev = u;
  }
  std::function<void(std::size_t, const CVector&, std::size_t)> descend = [&](std::size_t i, const CVector& in,
                                                                              std::size_t base) {
    const HistoryEvent& ev = f.events[active[i]];
    CVector v = in;
    if (actions[i]) actions[i]->apply(v);
    const auto& cen = centers_for(ev.kernel.readout());
    const int s = sel[active[i]];
    const int b0 = s >= 0 ? s : 0, b1 = s >= 0 ? s + 1 : ev.bins();
    const bool last = i + 1 == active.size();
    for (int b = b0; b < b1; ++b) {
      const std::size_t slot = s >= 0 ? base : base * ev.bins() + b;
      const double lo = ev.edges[b], hi = ev.edges[b + 1];
      if (last) {
        double P = 0.0;
        for (std::size_t idx = 0; idx < T; ++idx) {
          const double a2 = std::norm(v(idx));
          if (a2 != 0.0) P += a2 * ev.kernel.bin_mass(cen[idx], lo, hi);
        }
        table[slot] += P;
      } else {
        CVector nv(T);
        for (std::size_t idx = 0; idx < T; ++idx)
          nv(idx) = v(idx) == 0.0 ? v(idx) : v(idx) * std::sqrt(ev.kernel.bin_mass(cen[idx], lo, hi));
        // Every later entry under this prefix is bounded by its norm.
        if (nv.squaredNorm() < kNegligible) continue;
        descend(i + 1, nv, slot);
      }
    }
  };
  descend(0, e.initial, 0);
  return table;
}

std::vector<double> dense_table(const Preparation& p, const HistoryFamily& f, const Selection& sel,
                                const oracle::Limits& lim) {
  bool pure = true;
  std::vector<CVector> psis;
  for (const auto& nu : p.list) {
    CVector v;
    if (!is_pure(nu.rho, &v)) pure = false;
    psis.push_back(v);
  }
  CVector psi;
  CMatrix rho;
  if (pure) {
    oracle::dense_dim(p.N, p.d, lim);
    psi = oracle::product_vector(psis);
  } else {
    oracle::dense_matrix_dim(p.N, p.d, lim);
    std::vector<CMatrix> rhos;
    for (const auto& nu : p.list) rhos.push_back(nu.rho);
    rho = oracle::product_density(rhos);
  }
  std::vector<double> table(table_size(f, sel), 0.0);
  for (std::size_t slot = 0; slot < table.size(); ++slot) {
    std::vector<oracle::Event> evs;
    std::size_t rem = slot;
    std::vector<int> bins(sel.size());
    for (std::size_t k = sel.size(); k-- > 0;) {
      if (sel[k] == -1) {
        bins[k] = static_cast<int>(rem % f.events[k].bins());
        rem /= f.events[k].bins();
      } else {
        bins[k] = sel[k];
      }
    }
    for (std::size_t k = 0; k < sel.size(); ++k) {
      if (sel[k] == -2) continue;
      const auto& ev = f.events[k];
      evs.push_back({ev.basis, ev.kernel, ev.edges[bins[k]], ev.edges[bins[k] + 1]});
    }
    table[slot] = pure ? oracle::history_probability(psi, p.N, evs, lim) : oracle::history_probability(rho, p.N, evs, lim);
  }
  return table;
}

std::vector<double> evaluate(const Preparation& p, const HistoryFamily& f, const Selection& sel,
                             const oracle::Limits& lim) {
  p.validate();
  f.validate();
  for (const auto& ev : f.events)
    if (ev.basis.d() != p.d) throw ValidationError("history: event dimension differs from the preparation");
  switch (p.kind) {
    case Preparation::Kind::pure_product:
      return engine_table(plain_engine(p.psi, p.N), f, sel);
    case Preparation::Kind::block_product:
      return engine_table(block_engine(p), f, sel);
    case Preparation::Kind::product_list:
      return dense_table(p, f, sel, lim);
    case Preparation::Kind::exchangeable: {
      std::vector<double> acc(table_size(f, sel), 0.0);
      for (std::size_t i = 0; i < p.prior.size(); ++i) {
        if (p.prior.weights[i] == 0.0) continue;
        CVector v;
        Engine e = is_pure(p.prior.states[i].rho, &v) ? plain_engine(v, p.N) : purified_engine(p.prior.states[i], p.N);
        auto t = engine_table(e, f, sel);
        for (std::size_t s = 0; s < acc.size(); ++s) acc[s] += p.prior.weights[i] * t[s];
      }
      return acc;
    }
  }
  throw ValidationError("history: unknown preparation");
}

}  // namespace

HistoryEvent HistoryEvent::with_cuts(ObservableBasis basis, SmoothingKernel kernel, std::vector<double> cuts) {
  HistoryEvent e{std::move(basis), std::move(kernel), {}};
  e.edges.push_back(-kInf);
  e.edges.insert(e.edges.end(), cuts.begin(), cuts.end());
  e.edges.push_back(kInf);
  e.validate();
  return e;
}

HistoryEvent HistoryEvent::default_bins(ObservableBasis basis, SmoothingKernel kernel, double mean) {
  const double s = kernel.sigma();
  if (!(s > 0.0)) throw ValidationError("default bins need sigma > 0");
  std::vector<double> cuts;
  for (int i = -4; i <= 4; ++i) cuts.push_back(mean + i * s);
  return with_cuts(std::move(basis), std::move(kernel), cuts);
}

void HistoryEvent::validate() const {
  if (kernel.readout().kind != Readout::Kind::linear) throw ValidationError("history event: bins need a scalar readout");
  if (kernel.readout().weights.size() != static_cast<std::size_t>(basis.d()))
    throw ValidationError("history event: readout size differs from the basis");
  if (edges.size() < 2) throw ValidationError("history event: need at least one bin");
  if (edges.front() != -kInf || edges.back() != kInf) throw ValidationError("history event: bins must cover the line");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ValidationError("history event: edges must increase");
}

void HistoryFamily::validate() const {
  if (events.empty()) throw ValidationError("history family: no events");
  for (const auto& e : events) e.validate();
}

Preparation Preparation::pure_product(const CVector& psi, int N) {
  Preparation p;
  p.kind = Kind::pure_product;
  p.N = N;
  p.d = static_cast<int>(psi.size());
  p.psi = psi;
  p.validate();
  return p;
}

Preparation Preparation::pure_product(const std::vector<cplx>& beta, int N) {
  return pure_product(CVector(Eigen::Map<const CVector>(beta.data(), beta.size())), N);
}

Preparation Preparation::exchangeable(PriorGrid prior, int N) {
  Preparation p;
  p.kind = Kind::exchangeable;
  p.N = N;
  p.d = prior.d();
  p.prior = std::move(prior);
  p.validate();
  return p;
}

Preparation Preparation::product_list(std::vector<MoleculeState> list) {
  Preparation p;
  p.kind = Kind::product_list;
  if (list.empty()) throw ValidationError("preparation: empty product list");
  p.N = static_cast<int>(list.size());
  p.d = list.front().d();
  p.list = std::move(list);
  p.validate();
  return p;
}

void Preparation::validate() const {
  if (N < 1) throw ValidationError("preparation: N must be >= 1");
  if (d < 1) throw ValidationError("preparation: d must be >= 1");
  switch (kind) {
    case Kind::pure_product:
      if (psi.size() != d || std::abs(psi.squaredNorm() - 1.0) > 1e-9)
        throw ValidationError("preparation: molecule state must be normalized");
      break;
    case Kind::exchangeable:
      prior.validate();
      if (prior.d() != d) throw ValidationError("preparation: prior dimension");
      break;
    case Kind::product_list:
      if (static_cast<int>(list.size()) != N) throw ValidationError("preparation: list length != N");
      for (const auto& nu : list) {
        if (nu.d() != d) throw ValidationError("preparation: mixed dimensions in list");
        nu.validate();
      }
      break;
    case Kind::block_product: {
      if (xi < 1 || N % xi != 0) throw ValidationError("preparation: xi must divide N");
      double D = std::pow(static_cast<double>(d), xi);
      if (static_cast<double>(block.size()) != D) throw ValidationError("preparation: block size != d^xi");
      if (std::abs(block.squaredNorm() - 1.0) > 1e-9) throw ValidationError("preparation: block state not normalized");
      break;
    }
  }
}

Preparation block_preparation(int xi, int N, const CVector& block_state) {
  if (xi < 1) throw ValidationError("block: xi must be >= 1");
  const double root = std::pow(static_cast<double>(block_state.size()), 1.0 / xi);
  const int d = static_cast<int>(std::lround(root));
  if (d < 1 || std::abs(std::pow(static_cast<double>(d), xi) - static_cast<double>(block_state.size())) > 0.5)
    throw ValidationError("block: state size is not d^xi");
  Preparation p;
  p.kind = Preparation::Kind::block_product;
  p.N = N;
  p.d = d;
  p.xi = xi;
  p.block = block_state;
  p.validate();
  return p;
}

double history_probability(const Preparation& prep, const HistoryFamily& family, const std::vector<int>& bins,
                           const oracle::Limits& lim) {
  if (bins.size() != family.events.size()) throw ValidationError("history: one bin per event required");
  for (std::size_t k = 0; k < bins.size(); ++k)
    if (bins[k] < 0 || bins[k] >= family.events[k].bins()) throw ValidationError("history: bin out of range");
  return evaluate(prep, family, bins, lim)[0];
}

std::vector<double> history_table(const Preparation& prep, const HistoryFamily& family, const oracle::Limits& lim) {
  return evaluate(prep, family, Selection(family.events.size(), -1), lim);
}

SumRule sum_rule_violation(const HistoryFamily& family, const Preparation& prep, const oracle::Limits& lim) {
  const std::size_t n = family.events.size();
  auto full = history_table(prep, family, lim);
  SumRule out;
  out.event = 0;
  for (std::size_t k = 0; k < n; ++k) {
    Selection sel(n, -1);
    sel[k] = -2;
    auto part = evaluate(prep, family, sel, lim);
    // Marginalize event k out of the full table.
    std::size_t inner = 1;
    for (std::size_t j = k + 1; j < n; ++j) inner *= family.events[j].bins();
    const std::size_t bk = family.events[k].bins();
    for (std::size_t slot = 0; slot < part.size(); ++slot) {
      const std::size_t hi = slot / inner, lo = slot % inner;
      double s = 0.0;
      for (std::size_t b = 0; b < bk; ++b) s += full[(hi * bk + b) * inner + lo];
      const double e = std::abs(part[slot] - s);
      if (e > out.epsilon) {
        out.epsilon = e;
        out.event = static_cast<int>(k);
      }
    }
  }
  return out;
}

CommutatorCheck commutator_relation(const CMatrix& a, const CMatrix& b, int N, const oracle::Limits& lim) {
  if (!is_hermitian(a, 1e-12) || !is_hermitian(b, 1e-12)) throw ValidationError("commutator: inputs must be Hermitian");
  if (a.rows() != b.rows()) throw ValidationError("commutator: dimension mismatch");
  if (N < 1) throw ValidationError("commutator: N must be >= 1");
  const int d = static_cast<int>(a.rows());
  oracle::dense_matrix_dim(N, d, lim);
  CMatrix c = a * b - b * a;
  CMatrix A = oracle::macroscopic_observable(a, N, lim) / N;
  CMatrix B = oracle::macroscopic_observable(b, N, lim) / N;
  CMatrix C = oracle::macroscopic_observable(c, N, lim) / N;
  CommutatorCheck out;
  out.lhs = A * B - B * A;
  out.rhs = C / N;
  out.residual = operator_norm(N * out.lhs - C);
  out.norm_commutator = operator_norm(out.lhs);
  out.norm_c = operator_norm(C);
  return out;
}

MoleculeState mean_molecule_state(const std::vector<MoleculeState>& nus) {
  if (nus.empty()) throw ValidationError("mean state: empty list");
  const int d = nus.front().d();
  CMatrix m = CMatrix::Zero(d, d);
  for (const auto& nu : nus) {
    if (nu.d() != d) throw ValidationError("mean state: mixed dimensions");
    nu.validate();
    m += nu.rho;
  }
  MoleculeState out{m / static_cast<double>(nus.size())};
  out.validate();
  return out;
}

std::vector<double> product_type_probabilities(const std::vector<MoleculeState>& nus, const ObservableBasis& basis) {
  if (nus.empty()) throw ValidationError("product types: empty list");
  const int d = basis.d();
  std::vector<double> cur = {1.0};
  std::vector<int> tmp(d);
  for (std::size_t n = 0; n < nus.size(); ++n) {
    if (nus[n].d() != d) throw ValidationError("product types: dimension mismatch");
    ProbVector p = nus[n].letter_probabilities(basis);
    TypeBasis from(static_cast<int>(n), d), to(static_cast<int>(n) + 1, d);
    std::vector<double> next(to.size(), 0.0);
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (cur[i] == 0.0) continue;
      const int* K = from.counts(i);
      for (int j = 0; j < d; ++j) {
        if (p[j] == 0.0) continue;
        std::copy(K, K + d, tmp.begin());
        ++tmp[j];
        next[to.index(tmp.data())] += cur[i] * p[j];
      }
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

double smoothed(const std::vector<double>& P, const TypeBasis& types, const SmoothingKernel& k, const Outcome& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < types.size(); ++i)
    if (P[i] != 0.0) s += P[i] * k.weight(k.readout().center(types.counts(i), types.d()), l);
  return s;
}

std::vector<double> reference_probabilities(const std::vector<MoleculeState>& nus, const ObservableBasis& basis,
                                            const TypeBasis& types) {
  ProbVector R = mean_molecule_state(nus).letter_probabilities(basis);
  std::vector<double> P(types.size());
  for (std::size_t i = 0; i < types.size(); ++i) P[i] = std::exp(log_multinomial_pmf(types.counts(i), R));
  return P;
}

}  // namespace

ProductDensity product_type_distribution(const std::vector<MoleculeState>& nus, const ObservableBasis& basis,
                                         const SmoothingKernel& k, const Outcome& l) {
  auto P = product_type_probabilities(nus, basis);
  TypeBasis types(static_cast<int>(nus.size()), basis.d());
  auto Q = reference_probabilities(nus, basis, types);
  return {smoothed(P, types, k, l), smoothed(Q, types, k, l)};
}

double separable_total_variation(const std::vector<MoleculeState>& nus, const ObservableBasis& basis,
                                 const SmoothingKernel& k) {
  const int N = static_cast<int>(nus.size());
  auto P = product_type_probabilities(nus, basis);
  TypeBasis types(N, basis.d());
  auto Q = reference_probabilities(nus, basis, types);
  auto quad = outcome_quadrature(k, N, basis.d());
  double tv = 0.0;
  for (std::size_t i = 0; i < quad.nodes.size(); ++i)
    tv += quad.weights[i] * std::abs(smoothed(P, types, k, quad.nodes[i]) - smoothed(Q, types, k, quad.nodes[i]));
  return 0.5 * tv;
}

}  // namespace macrobs
