#pragma once

#include "parlsh/index.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace parlsh {

struct Neighbor {
  std::uint32_t index = 0;
  double inner_product = 0.0;

  double distance() const { return angular_distance(inner_product); }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Orders by decreasing inner product, then by increasing index.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.inner_product != b.inner_product) return a.inner_product > b.inner_product;
  return a.index < b.index;
}

/// Best-so-far candidates of one query: a top buffer of up to 2k distinct
/// points, a staging buffer of k, and a seen-set over point indices.
class Accumulator {
 public:
  Accumulator(std::size_t k, std::size_t n);

  std::size_t k() const { return k_; }
  bool seen(std::uint32_t i) const { return (seen_[i >> 6] >> (i & 63)) & 1; }
  void mark_seen(std::uint32_t i) { seen_[i >> 6] |= std::uint64_t{1} << (i & 63); }

  /// Stages a candidate unless it cannot enter the top buffer; consolidates
  /// when the staging buffer fills. Returns whether it was staged.
  bool offer(std::uint32_t index, double inner_product);
  /// Merges staging into the top buffer: sort by `closer`, drop duplicates,
  /// keep the best 2k. Clears staging.
  void consolidate();

  bool have_k() const { return top_.size() >= k_; }
  /// Inner product of the k-th best consolidated candidate; -inf before k exist.
  double kth_inner_product() const;
  const std::vector<Neighbor>& top() const { return top_; }
  const std::vector<Neighbor>& staging() const { return staging_; }

 private:
  std::size_t k_;
  std::vector<Neighbor> top_;
  std::vector<Neighbor> staging_;
  std::vector<std::uint64_t> seen_;
};

/// Collision-probability lower bound for a `bits`-long prefix at the current
/// k-th candidate. Requires `acc.have_k()`.
double current_pk(const Accumulator& acc, const Index& index, unsigned bits);

struct QueryDiagnostics {
  unsigned depth = 0;                     ///< prefix length (bits) at which the search stopped
  std::size_t repetitions_at_depth = 0;   ///< repetitions (tensoring: rounds) scanned at that depth
  std::size_t candidates = 0;             ///< entries retrieved, repeats included
  std::size_t filter_rejections = 0;
  std::size_t distance_computations = 0;
  bool k_exceeds_n = false;
};

/// Neighbors ordered by increasing angular distance (ties by index).
struct QueryResult {
  std::vector<Neighbor> neighbors;
  QueryDiagnostics diagnostics;

  std::vector<std::uint32_t> indices() const;
};

/// State handed to `SearchOptions::observer` after every stopping check.
struct SearchEvent {
  unsigned depth;
  std::size_t scanned;
  const Accumulator& accumulator;
  bool stopping;
};

struct SearchOptions {
  bool filter = true;
  double epsilon = 0.0;  ///< sketch threshold slack
  std::function<void(const SearchEvent&)> observer;
};

/// Adaptive k-NN search. Each true k-nearest neighbour is reported with
/// probability at least 1 - delta over the index's randomness.
QueryResult search(const Index& index, std::span<const float> q, std::size_t k, double delta,
                   const SearchOptions& options = {});
/// Same, parameterized by target recall r (delta = 1 - r).
QueryResult search_with_recall(const Index& index, std::span<const float> q, std::size_t k, double recall,
                               const SearchOptions& options = {});

}  // namespace parlsh
