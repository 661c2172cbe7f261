#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace macrobs {

/// Occupation counts of d letters over N positions.
using TypeVector = std::vector<int>;
using ProbVector = std::vector<double>;

constexpr std::size_t kDefaultTypeCap = 10'000'000;

/// Throws ValidationError unless all counts are non-negative.
void validate_type(const TypeVector& L);
/// Throws ValidationError unless entries lie in [0,1] and sum to 1 within tol.
void validate_prob(const ProbVector& R, double tol = 1e-12);

int type_total(const TypeVector& L);

/// Number of compositions of N into d parts, binom(N+d-1, d-1), as a double
/// so callers can compare against caps without overflow.
double type_count(int N, int d);

/// All compositions of N into d parts in canonical order: ascending
/// lexicographic on the count vector, e.g. (N=2,d=2) -> (0,2),(1,1),(2,0).
std::vector<TypeVector> enumerate_types(int N, int d, std::size_t cap = kDefaultTypeCap);

/// Flat, indexable version of enumerate_types with O(d) ranking.
class TypeBasis {
 public:
  TypeBasis() = default;
  TypeBasis(int N, int d, std::size_t cap = kDefaultTypeCap);

  int N() const { return n_; }
  int d() const { return d_; }
  std::size_t size() const { return size_; }

  const int* counts(std::size_t idx) const { return counts_.data() + idx * d_; }
  int count(std::size_t idx, int j) const { return counts_[idx * d_ + j]; }
  TypeVector type(std::size_t idx) const;

  /// Position of a type in canonical order.
  std::size_t index(const int* c) const;
  std::size_t index(const TypeVector& L) const { return index(L.data()); }

 private:
  int n_ = 0;
  int d_ = 1;
  std::size_t size_ = 1;
  std::vector<int> counts_;
  // binom_[n * (d_ + 1) + k] = binom(n, k) for n <= N + d, k <= d.
  std::vector<std::uint64_t> binom_;
  std::uint64_t binom(int n, int k) const;
};

/// Counts of each alphabet letter in X. Throws on unknown letters.
TypeVector type_of_string(const std::string& X, const std::string& alphabet);

/// ln |T[L]| = ln N! - sum ln L_j!.
double log_type_class_size(const TypeVector& L);
double log_type_class_size(const int* c, int d);

/// ln m(L,R); -inf when some R_j = 0 while L_j > 0.
double log_multinomial_pmf(const int* c, const ProbVector& R);
double log_multinomial_pmf(const TypeVector& L, const ProbVector& R);
double multinomial_pmf(const TypeVector& L, const ProbVector& R);

/// exp{-N(eps/2 - d ln(N+1)/N)} clamped to [0,1].
double typical_sequence_bound(int N, int d, double eps);

/// Distances between the normalized types L/N and a probability vector.
double l1_distance(const TypeVector& L, const ProbVector& R);
double l2_distance(const TypeVector& L, const ProbVector& R);

double log_sum_exp(const std::vector<double>& xs);

}  // namespace macrobs
