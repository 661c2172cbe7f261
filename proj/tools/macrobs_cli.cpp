// Experiment runner. Every subcommand writes <name>.csv and <name>.json to
// the output directory; stdout gets a short summary.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cli_io.hpp"
#include "json.hpp"
#include "macrobs/equivalence.hpp"
#include "macrobs/errors.hpp"
#include "macrobs/histories.hpp"
#include "macrobs/nmr.hpp"
#include "macrobs/sweep.hpp"
#include "macrobs/tomography.hpp"
#include "macrobs/tradeoff.hpp"

using namespace macrobs;
using namespace macrobs::cli;
using nlohmann::json;

namespace {

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  int threads = default_threads();
  bool timing = false;
};

void save(const Common& c, const std::string& name, const Csv& csv, json summary) {
  auto dir = output_dir(c.out);
  csv.write(dir / (name + ".csv"));
  summary["command"] = name;
  summary["seed"] = c.seed;
  summary["rows"] = csv.size();
  write_json(dir / (name + ".json"), summary);
  std::cout << name << ": " << csv.size() << " rows -> " << (dir / (name + ".csv")).string() << '\n';
}

// ---------------------------------------------------------------- types

struct TypesArgs {
  int N = 4;
  int d = 2;
};

int run_types(const Common& c, const TypesArgs& a) {
  auto types = enumerate_types(a.N, a.d);
  std::vector<std::string> head = {"index"};
  for (int j = 0; j < a.d; ++j) head.push_back("c" + std::to_string(j));
  head.push_back("log_class_size");
  Csv csv(head);
  for (std::size_t i = 0; i < types.size(); ++i) {
    std::vector<std::string> r = {std::to_string(i)};
    for (int x : types[i]) r.push_back(std::to_string(x));
    r.push_back(num(log_type_class_size(types[i])));
    csv.row(r);
  }
  save(c, "types", csv, {{"N", a.N}, {"d", a.d}, {"count", types.size()}});
  return 0;
}

// --------------------------------------------------------- oracle-check

struct OracleArgs {
  int max_qubits = 8;
  int max_qutrits = 5;
  int cases = 50;
  double tol = 1e-9;
};

int run_oracle_check(const Common& c, const OracleArgs& a) {
  EquivalenceSpec spec;
  spec.cases = a.cases;
  spec.max_qubits = a.max_qubits;
  spec.max_qutrits = a.max_qutrits;
  spec.seed = c.seed;
  spec.threads = c.threads;
  auto checks = run_equivalence_suite(spec);
  Csv csv({"case", "N", "d", "sigma", "quantity", "max_error", "pass"});
  double worst = 0.0;
  int failures = 0;
  for (const auto& k : checks) {
    const bool ok = k.max_error <= a.tol;
    failures += !ok;
    worst = std::max(worst, k.max_error);
    csv.row({std::to_string(k.index), std::to_string(k.N), std::to_string(k.d), num(k.sigma), k.quantity,
             num(k.max_error), ok ? "1" : "0"});
  }
  save(c, "oracle-check", csv,
       {{"cases", a.cases}, {"tolerance", a.tol}, {"worst_error", worst}, {"failures", failures}});
  std::cout << "worst error " << num(worst) << ", " << failures << " failures\n";
  return failures ? 1 : 0;
}

// -------------------------------------------------------------- tradeoff

struct TradeoffArgs {
  std::string N = "100..10000";
  std::string sigma = "0.001..1";
  std::string beta = "1,1";
};

int run_tradeoff(const Common& c, const TradeoffArgs& a) {
  SweepSpec spec;
  spec.Ns = parse_ints(a.N);
  spec.sigmas = parse_reals(a.sigma);
  spec.beta = parse_beta(a.beta);
  spec.beta_spec = a.beta;
  spec.threads = c.threads;
  spec.timing = c.timing;
  auto pts = tradeoff_sweep(spec);
  Csv csv({"N", "d", "sigma", "beta", "f_exact", "f_bound", "bound_vacuous", "regime", "runtime_ms"});
  for (const auto& p : pts)
    csv.row({std::to_string(p.N), std::to_string(p.d), num(p.sigma), "\"" + p.beta_spec + "\"", num(p.f_exact),
             num(p.f_bound), p.bound_vacuous ? "1" : "0", regime_name(p.regime),
             p.runtime_ms ? num(*p.runtime_ms) : "NA"});
  save(c, "tradeoff", csv, {{"N", spec.Ns}, {"sigma", spec.sigmas}, {"beta", a.beta}});
  return 0;
}

// ----------------------------------------------------------- conditional

struct ConditionalArgs {
  int N = 4000;
  double sigma = 0.05;
  std::string beta = "1,1";
  std::string l;  // empty: 13 points over mu +- 1.5 Delta*
};

int run_conditional(const Common& c, const ConditionalArgs& a) {
  auto beta = parse_beta(a.beta);
  if (beta.size() != 2) throw ValidationError("conditional: qubit beta expected");
  const double mu = std::norm(beta[0]);
  const double ds = conditional_fidelity_threshold(a.N, a.sigma);
  std::vector<double> ls;
  if (a.l.empty())
    for (int i = -6; i <= 6; ++i) ls.push_back(mu + 0.25 * i * ds);
  else
    ls = parse_reals(a.l);
  Csv csv({"N", "sigma", "l", "f_exact", "f_gaussian", "density", "delta_star", "inside"});
  for (double l : ls) {
    auto f = conditional_fidelity(beta, a.N, a.sigma, l);
    csv.row({std::to_string(a.N), num(a.sigma), num(l), num(f.exact), num(f.gaussian), num(f.density), num(ds),
             std::abs(l - mu) <= ds ? "1" : "0"});
  }
  auto bad = bad_outcome_probability(a.N, a.sigma, ds, beta);
  save(c, "conditional", csv,
       {{"N", a.N}, {"sigma", a.sigma}, {"delta_star", ds}, {"tail_bound", bad.bound}, {"tail_exact", bad.exact_tail}});
  return 0;
}

// ------------------------------------------------------------- histories

struct HistoriesArgs {
  int N = 400;
  std::string xi = "1";
  std::string sigma = "0,0.01,0.03,0.1,0.3";
  std::string cuts = "0.25,0.5,0.75,1";
  std::string family;  // JSON file: {"events": [{"axis": "z", "cuts": [...]}, ...]}
};

struct EventShape {
  char axis;
  std::vector<double> cuts;
};

std::vector<EventShape> load_family(const HistoriesArgs& a) {
  if (a.family.empty()) return {{'z', parse_reals(a.cuts)}, {'x', parse_reals(a.cuts)}};
  std::ifstream in(a.family);
  if (!in) throw IoError("cannot read " + a.family);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("family file: ") + e.what());
  }
  std::vector<EventShape> out;
  for (const auto& e : j.at("events")) {
    const auto axis = e.at("axis").get<std::string>();
    if (axis.size() != 1) throw ValidationError("family file: axis must be x, y or z");
    out.push_back({axis[0], e.at("cuts").get<std::vector<double>>()});
  }
  return out;
}

CVector ghz(int xi) {
  CVector v = CVector::Zero(Eigen::Index{1} << xi);
  v(0) = v(v.size() - 1) = 1.0 / std::sqrt(2.0);
  return v;
}

int run_histories(const Common& c, const HistoriesArgs& a) {
  const auto shapes = load_family(a);
  const auto xis = parse_ints(a.xi);
  const auto sigmas = parse_reals(a.sigma);
  struct Job {
    int xi;
    double sigma;
  };
  std::vector<Job> jobs;
  for (int xi : xis)
    for (double s : sigmas) jobs.push_back({xi, s});
  auto eps = parallel_map<SumRule>(jobs.size(), c.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    auto k = SmoothingKernel::gaussian(job.sigma, Readout::fraction(0, 2));
    HistoryFamily fam;
    for (const auto& e : shapes) fam.events.push_back(HistoryEvent::with_cuts(ObservableBasis::spin(e.axis), k, e.cuts));
    auto prep = job.xi == 1 ? Preparation::pure_product(std::vector<cplx>{M_SQRT1_2, M_SQRT1_2}, a.N)
                            : block_preparation(job.xi, a.N, ghz(job.xi));
    return sum_rule_violation(fam, prep);
  });
  Csv csv({"xi", "N", "sigma", "epsilon", "worst_event"});
  for (std::size_t i = 0; i < jobs.size(); ++i)
    csv.row({std::to_string(jobs[i].xi), std::to_string(a.N), num(jobs[i].sigma), num(eps[i].epsilon),
             std::to_string(eps[i].event)});
  save(c, "histories", csv, {{"N", a.N}, {"xi", xis}, {"sigma", sigmas}, {"events", shapes.size()}});
  return 0;
}

// ------------------------------------------------------------ commutator

struct CommutatorArgs {
  std::string N = "2,3,4";
  int d = 2;
  int pairs = 10;
};

CMatrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  return 0.5 * (z + z.adjoint());
}

int run_commutator(const Common& c, const CommutatorArgs& a) {
  const auto Ns = parse_ints(a.N);
  Csv csv({"pair", "N", "d", "residual", "norm_commutator", "norm_c"});
  double worst = 0.0;
  for (int p = 0; p < a.pairs; ++p) {
    auto rng = substream(c.seed, static_cast<std::uint64_t>(p));
    CMatrix A = random_hermitian(a.d, rng), B = random_hermitian(a.d, rng);
    for (int N : Ns) {
      auto r = commutator_relation(A, B, N);
      worst = std::max(worst, r.residual);
      csv.row({std::to_string(p), std::to_string(N), std::to_string(a.d), num(r.residual), num(r.norm_commutator),
               num(r.norm_c)});
    }
  }
  save(c, "commutator", csv, {{"N", Ns}, {"d", a.d}, {"pairs", a.pairs}, {"worst_residual", worst}});
  return 0;
}

// ------------------------------------------------------------ tomography

struct TomographyArgs {
  int N = 1000;
  double sigma = 0.05;
  int rounds = 1;
  int runs = 20;
  bool fresh = false;
  std::string state = "grid-pure";  // or "bloch:x,y,z"
};

MoleculeState true_state(const TomographyArgs& a, const PriorGrid& grid, std::uint64_t seed) {
  if (a.state == "grid-pure") return random_pure_grid_state(grid, seed);
  if (a.state.rfind("bloch:", 0) == 0) {
    auto v = parse_reals(a.state.substr(6));
    if (v.size() != 3) throw ValidationError("bloch state needs three components");
    return MoleculeState::bloch(v[0], v[1], v[2]);
  }
  throw ValidationError("unknown state '" + a.state + "'");
}

int run_tomography(const Common& c, const TomographyArgs& a) {
  const auto grid = default_prior(2);
  auto recs = parallel_map<std::pair<MoleculeState, TomographyRecord>>(
      static_cast<std::size_t>(a.runs), c.threads, [&](std::size_t r) {
        const std::uint64_t seed = c.seed + r;
        auto spec = spin_axes_spec(a.N, a.sigma, seed);
        spec.rounds = a.rounds;
        spec.fresh_batch = a.fresh;
        auto nu = true_state(a, grid, seed);
        return std::pair{nu, simulate_tomography(nu, spec)};
      });
  Csv csv({"run", "seed", "round", "basis", "outcome", "concentration_05", "concentration_10", "spread"});
  json runs = json::array();
  int success = 0;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const auto& [nu, rec] = recs[r];
    for (std::size_t k = 0; k < rec.rounds.size(); ++k) {
      const auto& x = rec.rounds[k];
      csv.row({std::to_string(r), std::to_string(c.seed + r), std::to_string(k), x.basis, num(x.outcome.at(0)),
               num(x.concentration_05), num(x.concentration_10), num(x.spread)});
    }
    const double m = rec.rounds.back().concentration_10;
    success += m >= 0.9;
    runs.push_back({{"seed", c.seed + r},
                    {"bloch_true", nu.bloch_vector()},
                    {"concentration_10", m},
                    {"mode", rec.rounds.back().mode},
                    {"posterior", rec.posterior.weights}});
  }
  save(c, "tomography", csv,
       {{"N", a.N}, {"sigma", a.sigma}, {"rounds", a.rounds}, {"fresh_batch", a.fresh}, {"runs", runs},
        {"successes", success}});
  std::cout << success << "/" << a.runs << " runs with mass >= 0.9 within 0.1\n";
  return 0;
}

// ------------------------------------------------------------------- nmr

struct NmrArgs {
  int N = 10000;
  double total_width = 0.1;
  std::string fractions = "0.01,0.05,0.1,0.2,0.5,0.8,1";
};

int run_nmr(const Common& c, const NmrArgs& a) {
  const auto f = parse_reals(a.fractions);
  auto pts = nmr_width_sweep(a.N, a.total_width, f, c.threads);
  Csv csv({"N", "lambda", "sigma_mix", "total_width", "F_post", "outcome_var"});
  for (const auto& p : pts)
    csv.row({std::to_string(p.N), num(p.lambda), num(p.sigma_mix), num(p.total_width), num(p.f_post),
             num(p.outcome_var)});
  save(c, "nmr", csv, {{"N", a.N}, {"total_width", a.total_width}, {"fractions", f}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-grained collective measurements on N identical molecules"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config; nested objects configure subcommands");
  app.require_subcommand(1);

  Common common;
  app.add_option("--out", common.out, "output directory (default $MACROBS_OUTPUT_DIR or .)");
  app.add_option("--seed", common.seed, "run seed");
  app.add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--timing", common.timing, "record runtime_ms (otherwise NA)");

  TypesArgs ta;
  auto* types = app.add_subcommand("types", "enumerate the types of (N, d)")->configurable();
  types->add_option("--N", ta.N)->check(CLI::PositiveNumber);
  types->add_option("--d", ta.d)->check(CLI::PositiveNumber);

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "engine vs dense oracle on random cases")->configurable();
  oracle->add_option("--max-qubits", oa.max_qubits);
  oracle->add_option("--max-qutrits", oa.max_qutrits);
  oracle->add_option("--cases", oa.cases);
  oracle->add_option("--tol", oa.tol);

  TradeoffArgs tr;
  auto* tradeoff = app.add_subcommand("tradeoff", "exact averaged fidelity and bound over an (N, sigma) grid")
                       ->configurable();
  tradeoff->add_option("--N", tr.N, "list or lo..hi[:k]");
  tradeoff->add_option("--sigma", tr.sigma, "list or lo..hi[:k]");
  tradeoff->add_option("--beta", tr.beta, "amplitudes re[:im],... (normalized)");

  ConditionalArgs ca;
  auto* cond = app.add_subcommand("conditional", "per-outcome fidelity of a qubit product state")->configurable();
  cond->add_option("--N", ca.N);
  cond->add_option("--sigma", ca.sigma);
  cond->add_option("--beta", ca.beta);
  cond->add_option("--l", ca.l, "outcomes (fraction of letter 0)");

  HistoriesArgs ha;
  auto* hist = app.add_subcommand("histories", "sum-rule violation of a binned two-time family")->configurable();
  hist->add_option("--N", ha.N);
  hist->add_option("--xi", ha.xi, "GHZ block sizes; 1 is the |+> product");
  hist->add_option("--sigma", ha.sigma, "smoothing widths, 0 for exact projectors");
  hist->add_option("--cuts", ha.cuts, "interior bin cuts of the default z, x family");
  hist->add_option("--family", ha.family, "JSON family file");

  CommutatorArgs cm;
  auto* comm = app.add_subcommand("commutator", "N [A_N, B_N] against C_N for random pairs")->configurable();
  comm->add_option("--N", cm.N);
  comm->add_option("--d", cm.d);
  comm->add_option("--pairs", cm.pairs);

  TomographyArgs to;
  auto* tomo = app.add_subcommand("tomography", "Bayesian tomography from collective measurements")->configurable();
  tomo->add_option("--N", to.N);
  tomo->add_option("--sigma", to.sigma);
  tomo->add_option("--rounds", to.rounds);
  tomo->add_option("--runs", to.runs, "runs with seeds seed, seed+1, ...");
  tomo->add_flag("--fresh", to.fresh, "fresh sample per measurement");
  tomo->add_option("--state", to.state, "grid-pure or bloch:x,y,z");

  NmrArgs na;
  auto* nmr = app.add_subcommand("nmr", "fidelity at fixed coil width, coherent share swept")->configurable();
  nmr->add_option("--N", na.N);
  nmr->add_option("--total-width", na.total_width);
  nmr->add_option("--fractions", na.fractions, "lambda / total width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*types) return run_types(common, ta);
    if (*oracle) return run_oracle_check(common, oa);
    if (*tradeoff) return run_tradeoff(common, tr);
    if (*cond) return run_conditional(common, ca);
    if (*hist) return run_histories(common, ha);
    if (*comm) return run_commutator(common, cm);
    if (*tomo) return run_tomography(common, to);
    if (*nmr) return run_nmr(common, na);
  } catch (const ResourceError& e) {
    std::cerr << "resource cap: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o: " << e.what() << '\n';
    return 4;
  } catch (const json::exception& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
