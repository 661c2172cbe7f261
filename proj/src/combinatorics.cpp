#include "macrobs/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "macrobs/errors.hpp"

namespace macrobs {

void validate_type(const TypeVector& L) {
  if (L.empty()) throw ValidationError("type vector must have at least one entry");
  for (int c : L)
    if (c < 0) throw ValidationError("type vector has a negative count");
}

void validate_prob(const ProbVector& R, double tol) {
  if (R.empty()) throw ValidationError("probability vector is empty");
  double s = 0.0;
  for (double r : R) {
    if (!(r >= -tol && r <= 1.0 + tol)) throw ValidationError("probability entry outside [0,1]");
    s += r;
  }
  if (std::abs(s - 1.0) > tol) throw ValidationError("probability vector does not sum to 1");
}

int type_total(const TypeVector& L) { return std::accumulate(L.begin(), L.end(), 0); }

double type_count(int N, int d) {
  if (N < 0 || d < 1) return 0.0;
  return std::round(std::exp(std::lgamma(N + d) - std::lgamma(N + 1.0) - std::lgamma(d)));
}

namespace {

void check_cap(int N, int d, std::size_t cap) {
  if (N < 0 || d < 1) throw ValidationError("need N >= 0 and d >= 1");
  if (type_count(N, d) > static_cast<double>(cap))
    throw ResourceError("number of types binom(N+d-1,d-1) exceeds cap " + std::to_string(cap));
}

}  // namespace

std::vector<TypeVector> enumerate_types(int N, int d, std::size_t cap) {
  TypeBasis basis(N, d, cap);
  std::vector<TypeVector> out;
  out.reserve(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) out.push_back(basis.type(i));
  return out;
}

TypeBasis::TypeBasis(int N, int d, std::size_t cap) : n_(N), d_(d) {
  check_cap(N, d, cap);
  const int rows = N + d + 1;
  binom_.assign(static_cast<std::size_t>(rows) * (d + 1), 0);
  for (int n = 0; n < rows; ++n) {
    binom_[n * (d + 1)] = 1;
    for (int k = 1; k <= std::min(n, d); ++k)
      binom_[n * (d + 1) + k] =
          binom_[(n - 1) * (d + 1) + k - 1] + (k <= n - 1 ? binom_[(n - 1) * (d + 1) + k] : 0);
  }
  size_ = static_cast<std::size_t>(binom(N + d - 1, d - 1));
  counts_.resize(size_ * d);
  // Odometer in ascending lexicographic order: the last free entry absorbs
  // the remainder.
  std::vector<int> c(d, 0);
  c[d - 1] = N;
  for (std::size_t idx = 0; idx < size_; ++idx) {
    std::copy(c.begin(), c.end(), counts_.begin() + idx * d);
    if (idx + 1 == size_) break;
    // Find rightmost position p < d-1 that can be incremented.
    int p = d - 2;
    while (p >= 0) {
      int tail = 0;
      for (int q = p + 1; q < d; ++q) tail += c[q];
      if (tail > 0) break;
      --p;
    }
    int tail = 0;
    for (int q = p + 1; q < d; ++q) tail += c[q];
    ++c[p];
    for (int q = p + 1; q < d; ++q) c[q] = 0;
    c[d - 1] = tail - 1;
  }
}

std::uint64_t TypeBasis::binom(int n, int k) const {
  if (k < 0 || n < 0 || k > n) return 0;
  return binom_[static_cast<std::size_t>(n) * (d_ + 1) + k];
}

TypeVector TypeBasis::type(std::size_t idx) const {
  return TypeVector(counts(idx), counts(idx) + d_);
}

std::size_t TypeBasis::index(const int* c) const {
  // Types preceding c: for each position i, those agreeing on entries < i
  // and smaller at i. With k = d-1-i free parts after i and remainder rem,
  // that count is binom(rem+k,k) - binom(rem-c_i+k,k).
  std::uint64_t r = 0;
  int rem = n_;
  for (int i = 0; i + 1 < d_; ++i) {
    const int k = d_ - 1 - i;
    r += binom(rem + k, k) - binom(rem - c[i] + k, k);
    rem -= c[i];
  }
  return static_cast<std::size_t>(r);
}

TypeVector type_of_string(const std::string& X, const std::string& alphabet) {
  TypeVector L(alphabet.size(), 0);
  for (char ch : X) {
    auto pos = alphabet.find(ch);
    if (pos == std::string::npos)
      throw ValidationError(std::string("letter '") + ch + "' is not in the alphabet");
    ++L[pos];
  }
  return L;
}

double log_type_class_size(const int* c, int d) {
  int N = 0;
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    N += c[j];
    s += std::lgamma(c[j] + 1.0);
  }
  return std::lgamma(N + 1.0) - s;
}

double log_type_class_size(const TypeVector& L) {
  validate_type(L);
  return log_type_class_size(L.data(), static_cast<int>(L.size()));
}

double log_multinomial_pmf(const int* c, const ProbVector& R) {
  const int d = static_cast<int>(R.size());
  double s = log_type_class_size(c, d);
  for (int j = 0; j < d; ++j) {
    if (c[j] == 0) continue;
    if (R[j] <= 0.0) return -std::numeric_limits<double>::infinity();
    s += c[j] * std::log(R[j]);
  }
  return s;
}

double log_multinomial_pmf(const TypeVector& L, const ProbVector& R) {
  validate_type(L);
  if (L.size() != R.size()) throw ValidationError("type and distribution dimensions differ");
  return log_multinomial_pmf(L.data(), R);
}

double multinomial_pmf(const TypeVector& L, const ProbVector& R) {
  return std::exp(log_multinomial_pmf(L, R));
}

double typical_sequence_bound(int N, int d, double eps) {
  if (!(eps > 0.0)) throw ValidationError("typical_sequence_bound: eps must be positive");
  if (N <= 0) return 1.0;
  double expo = -N * (eps / 2.0 - d * std::log(N + 1.0) / N);
  return std::clamp(std::exp(expo), 0.0, 1.0);
}

double l1_distance(const TypeVector& L, const ProbVector& R) {
  const double N = type_total(L);
  double s = 0.0;
  for (std::size_t j = 0; j < L.size(); ++j) s += std::abs(L[j] / N - R[j]);
  return s;
}

double l2_distance(const TypeVector& L, const ProbVector& R) {
  const double N = type_total(L);
  double s = 0.0;
  for (std::size_t j = 0; j < L.size(); ++j) s += (L[j] / N - R[j]) * (L[j] / N - R[j]);
  return std::sqrt(s);
}

double log_sum_exp(const std::vector<double>& xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace macrobs
