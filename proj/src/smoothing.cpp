#include "macrobs/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "macrobs/errors.hpp"

namespace macrobs {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kSame = 1e-12;

// P(za <= Z < zb) for a standard normal Z, accurate in both tails.
double normal_interval(double za, double zb) {
  if (!(zb > za)) return 0.0;
  const double r = 1.0 / std::sqrt(2.0);
  if (za >= 0.0) return 0.5 * (std::erfc(za * r) - std::erfc(zb * r));
  if (zb <= 0.0) return 0.5 * (std::erfc(-zb * r) - std::erfc(-za * r));
  return 1.0 - 0.5 * std::erfc(-za * r) - 0.5 * std::erfc(zb * r);
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

bool same_point(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > kSame) return false;
  return true;
}

}  // namespace

Readout Readout::fraction(int j, int d) {
  if (j < 0 || j >= d) throw ValidationError("fraction readout: letter index out of range");
  std::vector<double> w(d, 0.0);
  w[j] = 1.0;
  return linear(std::move(w));
}

std::vector<double> Readout::center(const int* counts, int d) const {
  int N = 0;
  for (int j = 0; j < d; ++j) N += counts[j];
  const double inv = N > 0 ? 1.0 / N : 0.0;
  if (kind == Kind::full) {
    std::vector<double> c(d);
    for (int j = 0; j < d; ++j) c[j] = counts[j] * inv;
    return c;
  }
  if (static_cast<int>(weights.size()) != d) throw ValidationError("linear readout: weight length != d");
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += weights[j] * counts[j];
  return {s * inv};
}

std::vector<double> Readout::center(const ProbVector& normalized) const {
  if (kind == Kind::full) return normalized;
  if (weights.size() != normalized.size()) throw ValidationError("linear readout: weight length != d");
  double s = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * normalized[j];
  return {s};
}

SmoothingKernel SmoothingKernel::gaussian(double sigma, Readout readout) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("kernel width must be finite and >= 0");
  SmoothingKernel k;
  k.kind_ = Kind::gaussian;
  k.sigma_ = sigma;
  k.readout_ = std::move(readout);
  return k;
}

SmoothingKernel SmoothingKernel::comb(double sigma, std::vector<double> grid, Readout readout) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("kernel width must be finite and >= 0");
  if (readout.kind != Readout::Kind::linear) throw ValidationError("comb kernels need a scalar readout");
  if (grid.empty()) throw ValidationError("comb kernel needs a non-empty grid");
  std::sort(grid.begin(), grid.end());
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ValidationError("comb grid points must be distinct");
  SmoothingKernel k;
  k.kind_ = Kind::comb;
  k.sigma_ = sigma;
  k.readout_ = std::move(readout);
  k.grid_ = std::move(grid);
  return k;
}

std::vector<double> SmoothingKernel::comb_masses(double center) const {
  const std::size_t n = grid_.size();
  std::vector<double> f(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double lo = j == 0 ? -INFINITY : 0.5 * (grid_[j - 1] + grid_[j]);
    double hi = j + 1 == n ? INFINITY : 0.5 * (grid_[j] + grid_[j + 1]);
    if (sigma_ == 0.0) {
      f[j] = (center >= lo - kSame && center < hi - kSame) ? 1.0 : 0.0;
    } else {
      f[j] = normal_interval((lo - center) / sigma_, (hi - center) / sigma_);
    }
  }
  return f;
}

double SmoothingKernel::weight(const std::vector<double>& center, const Outcome& l) const {
  if (center.size() != l.size()) throw ValidationError("outcome dimension does not match readout");
  if (kind_ == Kind::comb) {
    for (std::size_t j = 0; j < grid_.size(); ++j)
      if (std::abs(grid_[j] - l[0]) <= kSame) return comb_masses(center[0])[j];
    return 0.0;
  }
  if (sigma_ == 0.0) return same_point(center, l) ? 1.0 : 0.0;
  const double D = static_cast<double>(center.size());
  return std::pow(kTwoPi * sigma_ * sigma_, -D / 2.0) * std::exp(-sq_dist(center, l) / (2.0 * sigma_ * sigma_));
}

double SmoothingKernel::overlap(const std::vector<double>& a, const std::vector<double>& b) const {
  if (kind_ == Kind::comb) {
    auto fa = comb_masses(a[0]);
    auto fb = comb_masses(b[0]);
    double s = 0.0;
    for (std::size_t j = 0; j < fa.size(); ++j) s += std::sqrt(fa[j] * fb[j]);
    return std::min(s, 1.0);
  }
  if (sigma_ == 0.0) return same_point(a, b) ? 1.0 : 0.0;
  return std::exp(-sq_dist(a, b) / (8.0 * sigma_ * sigma_));
}

double SmoothingKernel::bin_mass(double center, double lo, double hi) const {
  if (readout_.kind != Readout::Kind::linear) throw ValidationError("bin_mass needs a scalar readout");
  if (kind_ == Kind::comb) {
    auto f = comb_masses(center);
    double s = 0.0;
    for (std::size_t j = 0; j < grid_.size(); ++j)
      if (grid_[j] >= lo && grid_[j] < hi) s += f[j];
    return s;
  }
  if (sigma_ == 0.0) return (center >= lo - kSame && center < hi - kSame) ? 1.0 : 0.0;
  return normal_interval((lo - center) / sigma_, (hi - center) / sigma_);
}

std::string SmoothingKernel::describe() const {
  std::ostringstream os;
  os << (kind_ == Kind::comb ? "comb" : "gaussian") << "(sigma=" << sigma_ << ",";
  if (readout_.kind == Readout::Kind::full) {
    os << "full";
  } else {
    os << "linear[";
    for (std::size_t j = 0; j < readout_.weights.size(); ++j) os << (j ? " " : "") << readout_.weights[j];
    os << "]";
  }
  if (kind_ == Kind::comb) os << ",grid=" << grid_.size();
  os << ")";
  return os.str();
}

KernelOverlap::KernelOverlap(const SmoothingKernel& k, std::vector<std::vector<double>> centers)
    : k_(k), centers_(std::move(centers)) {
  if (k.kind() == SmoothingKernel::Kind::comb) {
    for (const auto& c : centers_) {
      auto f = k.comb_masses(c[0]);
      for (double& x : f) x = std::sqrt(x);
      sqrt_masses_.push_back(std::move(f));
    }
  } else if (k.sigma() > 0.0) {
    inv8s2_ = 1.0 / (8.0 * k.sigma() * k.sigma());
  }
}

double KernelOverlap::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return 1.0;
  if (k_.kind() == SmoothingKernel::Kind::comb) {
    const auto& a = sqrt_masses_[i];
    const auto& b = sqrt_masses_[j];
    double s = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) s += a[m] * b[m];
    return std::min(s, 1.0);
  }
  if (k_.sigma() == 0.0) return same_point(centers_[i], centers_[j]) ? 1.0 : 0.0;
  return std::exp(-sq_dist(centers_[i], centers_[j]) * inv8s2_);
}

double gaussian_density(double sigma, const ProbVector& L, const Outcome& l) {
  if (!(sigma > 0.0)) throw ValidationError("gaussian_density: sigma must be positive");
  if (L.size() != l.size()) throw ValidationError("gaussian_density: dimension mismatch");
  const double D = static_cast<double>(L.size());
  return std::pow(kTwoPi * sigma * sigma, -D / 2.0) * std::exp(-sq_dist(L, l) / (2.0 * sigma * sigma));
}

double decoherence_kernel(const SmoothingKernel& k, const ProbVector& L, const ProbVector& Lp) {
  if (L.size() != Lp.size()) throw ValidationError("decoherence_kernel: dimension mismatch");
  return k.overlap(k.readout().center(L), k.readout().center(Lp));
}

double decoherence_kernel_quadrature(const SmoothingKernel& k, const ProbVector& L, const ProbVector& Lp) {
  auto a = k.readout().center(L);
  auto b = k.readout().center(Lp);
  if (k.discrete()) return k.overlap(a, b);
  const int D = static_cast<int>(a.size());
  const double h = k.sigma() / 20.0;
  const int half = 120;
  std::vector<double> mid(D);
  for (int i = 0; i < D; ++i) mid[i] = 0.5 * (a[i] + b[i]);
  std::vector<int> idx(D, -half);
  Outcome l(D);
  double sum = 0.0;
  for (;;) {
    for (int i = 0; i < D; ++i) l[i] = mid[i] + idx[i] * h;
    sum += std::sqrt(k.weight(a, l) * k.weight(b, l));
    int p = 0;
    while (p < D && ++idx[p] > half) idx[p++] = -half;
    if (p == D) break;
  }
  return sum * std::pow(h, D);
}

OutcomeQuadrature OutcomeQuadrature::build(const SmoothingKernel& k, const std::vector<std::vector<double>>& centers,
                                           int steps_per_sigma, double half_width) {
  OutcomeQuadrature q;
  if (centers.empty()) return q;
  if (k.kind() == SmoothingKernel::Kind::comb) {
    for (double g : k.grid()) {
      q.nodes.push_back({g});
      q.weights.push_back(1.0);
    }
    return q;
  }
  if (k.sigma() == 0.0) {
    for (const auto& c : centers) {
      bool seen = false;
      for (const auto& n : q.nodes)
        if (same_point(n, c)) { seen = true; break; }
      if (!seen) {
        q.nodes.push_back(c);
        q.weights.push_back(1.0);
      }
    }
    return q;
  }
  const double sigma = k.sigma();
  const double h = sigma / steps_per_sigma;
  const double reach = half_width * sigma;
  if (k.readout().kind == Readout::Kind::linear) {
    std::set<long> idx;
    for (const auto& c : centers) {
      long lo = static_cast<long>(std::ceil((c[0] - reach) / h));
      long hi = static_cast<long>(std::floor((c[0] + reach) / h));
      for (long i = lo; i <= hi; ++i) idx.insert(i);
    }
    for (long i : idx) {
      q.nodes.push_back({i * h});
      q.weights.push_back(h);
    }
    return q;
  }
  // Full readout: lattice in the hyperplane sum(l) = 1 with a Helmert basis.
  const int d = static_cast<int>(centers.front().size());
  std::vector<std::vector<double>> e(d - 1, std::vector<double>(d, 0.0));
  for (int kk = 1; kk < d; ++kk) {
    double nrm = std::sqrt(static_cast<double>(kk) * (kk + 1));
    for (int i = 0; i < kk; ++i) e[kk - 1][i] = 1.0 / nrm;
    e[kk - 1][kk] = -kk / nrm;
  }
  const double a0 = 1.0 / d;
  std::set<std::vector<long>> idx;
  for (const auto& c : centers) {
    std::vector<long> lo(d - 1), hi(d - 1);
    for (int kk = 0; kk < d - 1; ++kk) {
      double y = 0.0;
      for (int i = 0; i < d; ++i) y += (c[i] - a0) * e[kk][i];
      lo[kk] = static_cast<long>(std::ceil((y - reach) / h));
      hi[kk] = static_cast<long>(std::floor((y + reach) / h));
    }
    std::vector<long> cur = lo;
    for (;;) {
      idx.insert(cur);
      int p = 0;
      while (p < d - 1 && ++cur[p] > hi[p]) {
        cur[p] = lo[p];
        ++p;
      }
      if (p == d - 1) break;
    }
  }
  const double w = std::pow(h, d - 1) * std::sqrt(kTwoPi * sigma * sigma);
  for (const auto& n : idx) {
    Outcome l(d, a0);
    for (int kk = 0; kk < d - 1; ++kk)
      for (int i = 0; i < d; ++i) l[i] += h * n[kk] * e[kk][i];
    q.nodes.push_back(std::move(l));
    q.weights.push_back(w);
  }
  q.plane_reduced = true;
  return q;
}

OutcomeQuadrature outcome_quadrature(const SmoothingKernel& k, int N, int d) {
  TypeBasis basis(N, d);
  std::vector<std::vector<double>> centers;
  centers.reserve(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) centers.push_back(k.readout().center(basis.counts(i), d));
  return OutcomeQuadrature::build(k, centers);
}

LipschitzEstimate lipschitz_estimate(const SmoothingKernel& k, const std::vector<LipschitzSample>& samples, double s,
                                     double scale) {
  if (samples.empty()) throw ValidationError("lipschitz_estimate: empty sample");
  if (scale <= 0.0) scale = k.sigma();
  if (scale <= 0.0) throw ValidationError("lipschitz_estimate: pass a scale for zero-width kernels");
  LipschitzEstimate est;
  est.s = s;
  for (const auto& smp : samples) {
    double dist = 0.0;
    for (std::size_t j = 0; j < smp.L.size(); ++j) dist += std::abs(smp.L[j] - smp.Lp[j]);
    if (dist <= 0.0) continue;
    double diff = std::abs(k.weight(k.readout().center(smp.L), smp.l) - k.weight(k.readout().center(smp.Lp), smp.l));
    est.c = std::max(est.c, diff / std::pow(dist / scale, s));
    ++est.used;
  }
  return est;
}

LipschitzSweep lipschitz_refinement(const SmoothingKernel& k, const ProbVector& L, const ProbVector& dir,
                                    const Outcome& l, double t0, int levels, double s, double scale) {
  LipschitzSweep sw;
  double t = t0;
  for (int i = 0; i < levels; ++i, t *= 0.5) {
    std::vector<LipschitzSample> smp;
    // Consecutive pairs of spacing t covering L + [0, 1] dir.
    const int count = static_cast<int>(std::ceil(1.0 / t));
    for (int m = 0; m < count; ++m) {
      ProbVector a(L.size()), b(L.size());
      for (std::size_t j = 0; j < L.size(); ++j) {
        a[j] = L[j] + m * t * dir[j];
        b[j] = a[j] + t * dir[j];
      }
      smp.push_back({a, b, l});
    }
    sw.steps.push_back(t);
    sw.estimates.push_back(lipschitz_estimate(k, smp, s, scale).c);
  }
  // Diverging: the last halvings keep increasing the estimate by > 1.5x.
  if (sw.estimates.size() >= 3) {
    std::size_t n = sw.estimates.size();
    sw.diverging = sw.estimates[n - 1] > 1.5 * sw.estimates[n - 2] && sw.estimates[n - 2] > 1.5 * sw.estimates[n - 3];
  }
  return sw;
}

}  // namespace macrobs
