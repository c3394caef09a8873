#pragma once

#include "parlsh/hashers.hpp"
#include "parlsh/probability.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace parlsh {

/// How the K hash functions of each repetition are obtained.
enum class Strategy : std::uint8_t {
  independent = 0,  ///< L * K fresh functions
  pool = 1,         ///< K distinct functions sampled per repetition from a shared pool
  tensor = 2,       ///< repetition (j1, j2) interleaves tuple j1 of one collection with tuple j2 of another
};

std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& name);

struct SourceConfig {
  Strategy strategy = Strategy::pool;
  unsigned depth = 24;        ///< K, in hash-function units
  unsigned repetitions = 1;   ///< L
  unsigned pool_bits = 3072;  ///< pool strategy only
};

/// Everything a stopping criterion looks at after a repetition (or, for
/// tensoring, after a round of the m-loop) has been searched.
struct StopState {
  unsigned depth_bits = 0;   ///< current prefix length i, in bits
  std::size_t scanned = 0;   ///< repetitions searched at this depth (tensoring: m)
  bool have_k = false;       ///< whether k candidates have been found
  double kth_inner_product = -1.0;
  double delta = 0.1;
  bool exhausted = false;    ///< depth 0 has been scanned completely
  /// Chance that the k-th candidate survives sketch filtering once it collides
  /// (1 without filtering). Scales the per-repetition success probability of
  /// the independent and pool rules.
  double pass_probability = 1.0;
};

/// Supplies each repetition's hash functions under one strategy and owns that
/// strategy's stopping criterion.
class HashSource {
 public:
  HashSource() = default;

  /// Throws std::invalid_argument when the strategy's preconditions fail.
  static HashSource make(const SourceConfig& config, Family family, std::size_t dim, std::uint64_t seed);

  const SourceConfig& config() const { return config_; }
  Strategy strategy() const { return config_.strategy; }
  Family family() const { return bank_.family(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t repetitions() const { return config_.repetitions; }
  unsigned depth() const { return config_.depth; }
  unsigned bits_per_hash() const { return bank_.bits(); }
  /// Length of a full repetition code, K * l bits.
  unsigned code_bits() const { return config_.depth * bank_.bits(); }
  std::size_t function_count() const { return bank_.size(); }
  const HashBank& bank() const { return bank_; }

  /// Indices into the bank of repetition j's functions, most significant first.
  std::span<const std::uint32_t> functions_of(std::size_t repetition) const {
    return {functions_.data() + repetition * config_.depth, config_.depth};
  }

  /// Sorted bank indices referenced by at least one repetition.
  const std::vector<std::uint32_t>& used_functions() const { return used_; }

  /// Tensoring only: side length sqrt(L) and the (j1, j2) <-> repetition map (0-based).
  std::size_t tensor_side() const { return tensor_side_; }
  std::pair<std::size_t, std::size_t> tensor_pair(std::size_t repetition) const {
    return {repetition / tensor_side_, repetition % tensor_side_};
  }
  std::size_t tensor_repetition(std::size_t j1, std::size_t j2) const { return j1 * tensor_side_ + j2; }
  /// Bank index of function s of tuple t in collection c (tensoring only).
  std::uint32_t tensor_function(unsigned collection, std::size_t tuple, unsigned position) const;

  /// Codes of the used bank functions applied to `v`; other slots are untouched.
  void evaluate(const Eigen::Ref<const Eigen::VectorXf>& v, std::span<std::uint16_t> values) const {
    bank_.evaluate(v, values, used_);
  }
  /// Concatenates repetition j's function codes out of precomputed `values`.
  HashCode assemble(std::span<const std::uint16_t> values, std::size_t repetition) const;
  HashCode hash_point(std::size_t repetition, const Eigen::Ref<const Eigen::VectorXf>& v) const;

  /// Prefix-length decrement between rounds, in function units.
  unsigned depth_step() const { return config_.strategy == Strategy::tensor ? 2 : 1; }

  /// The strategy's termination rule:
  ///   independent  j * P(i) * f >= ln(1/delta)
  ///   pool         j * P(i) * f >= ln(1/delta)  and  m >= 5 i_f^2 / p
  ///   tensor       2 (1 - P(i/2))^m <= delta
  /// where P(b) is the model's b-bit prefix probability at the k-th
  /// candidate's inner product, f the state's filter pass probability, p the
  /// single-function probability, i_f the depth in whole functions and m the
  /// pool size. Depth 0 stops once exhausted.
  bool should_stop(const StopState& state, const CollisionModel& model) const;

  std::size_t memory_bytes() const;

 private:
  SourceConfig config_;
  std::uint64_t seed_ = 0;
  HashBank bank_;
  std::vector<std::uint32_t> functions_;  // repetitions x depth
  std::vector<std::uint32_t> used_;
  std::size_t tensor_side_ = 0;
};

inline HashSource make_source(const SourceConfig& config, Family family, std::size_t dim, std::uint64_t seed) {
  return HashSource::make(config, family, dim, seed);
}

}  // namespace parlsh
