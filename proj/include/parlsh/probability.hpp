#pragma once

#include "parlsh/hashers.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace parlsh {

/// Collision probability of one random hyperplane for unit vectors with the
/// given inner product: 1 - arccos(ip) / pi.
double hp_collision(double inner_product);

/// Monte Carlo lower bounds on prefix collision probabilities, tabulated on
/// the inner-product grid {-1.00, -0.95, ..., 1.00} for prefix lengths
/// 0..max_bits of one function's code.
///
/// Estimates are cleaned so that they are non-decreasing in the inner product
/// (a running minimum from high to low inner products, which only lowers
/// values) and non-increasing in the prefix length.
class CollisionTable {
 public:
  static constexpr int kBuckets = 41;
  static constexpr int kBucketsPerUnit = 20;

  CollisionTable() = default;
  CollisionTable(Family family, std::size_t dim, unsigned max_bits, std::size_t samples,
                 std::vector<double> estimates);

  /// Grid inner product of bucket a, -1 + 0.05 a.
  static double grid_value(int bucket) { return static_cast<double>(bucket - kBucketsPerUnit) / kBucketsPerUnit; }
  /// Largest grid bucket whose inner product does not exceed `ip` (after clamping).
  static int bucket_of(double inner_product);

  Family family() const { return family_; }
  std::size_t dim() const { return dim_; }
  unsigned max_bits() const { return max_bits_; }
  std::size_t samples() const { return samples_; }
  bool empty() const { return estimates_.empty(); }

  double estimate(unsigned bits, int bucket) const {
    return estimates_[static_cast<std::size_t>(bits) * kBuckets + static_cast<std::size_t>(bucket)];
  }
  /// Lower bound for the collision of a `bits`-long prefix at inner product `ip`.
  double lookup(double inner_product, unsigned bits) const { return estimate(bits, bucket_of(inner_product)); }

  const std::vector<double>& estimates() const { return estimates_; }

  /// One line per cell: "<bits> <alpha> <estimate>".
  void write_text(std::ostream& out) const;

 private:
  Family family_ = Family::cross_polytope;
  std::size_t dim_ = 0;
  unsigned max_bits_ = 0;
  std::size_t samples_ = 0;
  std::vector<double> estimates_;  // (max_bits + 1) x kBuckets
};

/// Builds a table by hashing x = e_0 and y = (alpha, sqrt(1 - alpha^2), 0, ...)
/// with `samples` fresh functions per grid value.
///
/// For the cross-polytope families one sample is one function and `max_bits`
/// defaults to its code length. For hyperplanes one sample concatenates
/// `max_bits` independent hyperplanes (default 1), which lets the table
/// machinery be checked against the analytic formula.
CollisionTable build_collision_table(Family family, std::size_t dim, std::uint64_t seed,
                                     std::size_t samples = 1000, unsigned max_bits = 0);

/// Isotonic clean-up applied by `build_collision_table`, exposed for testing.
void enforce_monotone(std::vector<double>& estimates, unsigned max_bits);

/// Lower bound on the probability that a query and a point at inner product
/// `ip` share the first `bits` bits of a concatenated code.
///
/// Hyperplanes use the analytic formula (p^bits). Cross-polytope codes are
/// consumed bit by bit, so a prefix of `bits` covers floor(bits / l) whole
/// functions and a partial one of (bits mod l) bits:
/// table(l)^(bits / l) * table(bits mod l).
class CollisionModel {
 public:
  CollisionModel() = default;
  explicit CollisionModel(Family family, std::size_t dim, CollisionTable table = {});

  Family family() const { return family_; }
  unsigned bits_per_hash() const { return bits_per_hash_; }
  const CollisionTable& table() const { return table_; }

  double function_probability(double inner_product) const;
  double prefix_probability(double inner_product, unsigned bits) const;

 private:
  Family family_ = Family::hyperplane;
  unsigned bits_per_hash_ = 1;
  CollisionTable table_;
};

}  // namespace parlsh
