#pragma once

#include "parlsh/dataset.hpp"
#include "parlsh/hashers.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace parlsh {

inline constexpr unsigned kSketchBits = 64;

/// Slot of the sketch compared in repetition j: splitmix64(j) mod M.
unsigned select_sketch(std::uint32_t repetition, unsigned sketch_count);

/// Hamming threshold for a k-th candidate at inner product `ip`:
/// round-half-up((1 + eps) * 64 * (1 - hp_collision(ip))), clamped to [0, 64].
unsigned sketch_threshold(double kth_inner_product, double epsilon);

/// Chance that a point at inner product `ip` with the query passes a filter
/// with the given threshold: P[Binomial(64, 1 - hp_collision(ip)) <= threshold].
double pass_probability(double inner_product, unsigned threshold);

inline bool passes(unsigned threshold, std::uint64_t query_word, std::uint64_t candidate_word) {
  return static_cast<unsigned>(std::popcount(query_word ^ candidate_word)) <= threshold;
}

/// M 64-bit hyperplane sketches per point. Bit b of sketch m is the
/// hyperplane `m * 64 + b` of the bank evaluated on the point.
class SketchSet {
 public:
  SketchSet() = default;
  SketchSet(std::size_t dim, unsigned sketch_count, std::uint64_t seed);

  /// Sketches every point of `data`.
  static SketchSet build(const Dataset& data, unsigned sketch_count, std::uint64_t seed);

  unsigned sketch_count() const { return sketch_count_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return sketch_count_ == 0 ? 0 : words_.size() / sketch_count_; }

  std::vector<std::uint64_t> sketch_point(const Eigen::Ref<const Eigen::VectorXf>& v) const;
  std::uint64_t word(std::size_t point, unsigned slot) const { return words_[point * sketch_count_ + slot]; }

  const std::vector<std::uint64_t>& words() const { return words_; }
  void set_words(std::vector<std::uint64_t> words) { words_ = std::move(words); }
  const HashBank& planes() const { return planes_; }

  std::size_t memory_bytes() const;

 private:
  unsigned sketch_count_ = 0;
  std::uint64_t seed_ = 0;
  HashBank planes_;
  std::vector<std::uint64_t> words_;  // n x M
};

/// Per-query filter: the query's sketches and the current Hamming threshold.
class FilterState {
 public:
  FilterState(std::vector<std::uint64_t> query_words, double epsilon)
      : query_(std::move(query_words)), epsilon_(epsilon) {}

  unsigned threshold() const { return threshold_; }
  double epsilon() const { return epsilon_; }

  /// Recomputes the threshold for a new k-th inner product.
  void update(double kth_inner_product) { threshold_ = sketch_threshold(kth_inner_product, epsilon_); }

  bool passes(unsigned slot, std::uint64_t candidate_word) const {
    return parlsh::passes(threshold_, query_[slot], candidate_word);
  }

 private:
  std::vector<std::uint64_t> query_;
  double epsilon_;
  unsigned threshold_ = kSketchBits;
};

}  // namespace parlsh
