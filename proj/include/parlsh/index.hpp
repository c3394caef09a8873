#pragma once

#include "parlsh/dataset.hpp"
#include "parlsh/hash_source.hpp"
#include "parlsh/hashers.hpp"
#include "parlsh/probability.hpp"
#include "parlsh/sketching.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace parlsh {

inline constexpr unsigned kMaxRepetitions = 4096;
inline constexpr unsigned kPrefixTableBits = 13;
/// Default extension of serialized index files.
inline constexpr const char* kIndexExtension = ".plsh";

struct IndexConfig {
  std::uint64_t memory_budget = 0;  ///< bytes
  unsigned prefix_bits = 24;        ///< K_bits, maximum prefix length
  unsigned repetitions = 0;         ///< L; 0 means derive from the budget
  unsigned segment_size = 12;       ///< B
  unsigned sketches = 32;           ///< M
  Family family = Family::fht_cross_polytope;
  Strategy strategy = Strategy::pool;
  unsigned pool_bits = 3072;
  std::size_t table_samples = 1000;
  double recall = 0.9;  ///< default target recall for queries
};

class InsufficientBudget : public std::runtime_error {
 public:
  InsufficientBudget(std::uint64_t budget, std::uint64_t minimum);
  std::uint64_t minimum() const { return minimum_; }

 private:
  std::uint64_t minimum_;
};

/// K in hash-function units: ceil(K_bits / l), rounded up to even for tensoring.
unsigned function_depth(const IndexConfig& config, std::size_t dim);
/// Length of the codes stored in each repetition: K_bits, or K * l for tensoring.
unsigned stored_code_bits(const IndexConfig& config, std::size_t dim);

/// Bytes the built index occupies with L repetitions:
///   dataset (float + fixed rows) + sketches (M * 8 bytes per point + planes)
///   + collision table + hash functions + L * (8n + 4 (2^13 + 1)).
std::uint64_t estimate_memory(const IndexConfig& config, std::size_t n, std::size_t dim, unsigned repetitions);

/// Largest L <= 4096 whose `estimate_memory` fits the budget; tensoring rounds
/// down to an even power of two. Throws InsufficientBudget naming the minimum.
IndexConfig derive_parameters(std::uint64_t budget, std::size_t n, std::size_t dim, Family family, Strategy strategy,
                              IndexConfig base = {});

/// One repetition: (code, point) tuples packed into 64-bit words, code in the
/// high `code_bits` bits, sorted ascending, plus the position of every 13-bit
/// code prefix.
class Repetition {
 public:
  Repetition() = default;
  /// `codes[i]` is point i's code (low `code_bits` bits).
  static Repetition build(std::span<const std::uint64_t> codes, unsigned code_bits);
  /// Adopts already sorted packed entries; the prefix table is rebuilt.
  Repetition(std::vector<std::uint64_t> entries, unsigned code_bits);

  std::size_t size() const { return entries_.size(); }
  unsigned code_bits() const { return code_bits_; }
  std::uint64_t code(std::size_t t) const { return entries_[t] >> index_bits_; }
  std::uint32_t point(std::size_t t) const { return static_cast<std::uint32_t>(entries_[t] & index_mask()); }

  /// Entries whose code shares the first `depth` bits with `query_code`.
  std::pair<std::size_t, std::size_t> range(std::uint64_t query_code, unsigned depth) const;

  const std::vector<std::uint64_t>& entries() const { return entries_; }
  const std::vector<std::uint32_t>& prefix_table() const { return prefix_table_; }
  std::size_t memory_bytes() const;

 private:
  std::uint64_t index_mask() const { return index_bits_ >= 64 ? ~0ULL : (1ULL << index_bits_) - 1; }
  std::uint64_t table_key(std::uint64_t code) const;
  void build_prefix_table();

  std::vector<std::uint64_t> entries_;
  std::vector<std::uint32_t> prefix_table_;  // 2^13 + 1 positions
  unsigned code_bits_ = 0;
  unsigned index_bits_ = 64;
};

/// Per-query traversal state: for every repetition the query's code and the
/// contiguous entry range emitted so far.
class SearchCursor {
 public:
  SearchCursor(const std::vector<Repetition>& repetitions, std::vector<std::uint64_t> query_codes,
               unsigned segment_size);

  std::size_t repetitions() const { return codes_.size(); }
  std::uint64_t query_code(std::size_t j) const { return codes_[j]; }
  std::pair<std::size_t, std::size_t> match_range(std::size_t j, unsigned depth) const {
    return (*reps_)[j].range(codes_[j], depth);
  }
  std::pair<std::size_t, std::size_t> emitted(std::size_t j) const { return emitted_[j]; }

  /// Widens repetition j to prefix length `depth` and appends the points not
  /// emitted before. The covered range grows in whole segments of B entries
  /// on each side, so up to B - 1 non-matching neighbours per side may appear.
  void retrieve_new(std::size_t j, unsigned depth, std::vector<std::uint32_t>& out);

 private:
  const std::vector<Repetition>* reps_;
  std::vector<std::uint64_t> codes_;
  std::vector<std::pair<std::size_t, std::size_t>> emitted_;
  unsigned segment_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Index {
 public:
  Index() = default;

  /// Builds every component. If `config.repetitions` is 0 it is derived from
  /// `config.memory_budget`. Repetitions are built on all available cores.
  static Index build(Dataset data, IndexConfig config, std::uint64_t seed);

  const Dataset& dataset() const { return data_; }
  const IndexConfig& config() const { return config_; }
  const HashSource& source() const { return source_; }
  const CollisionModel& model() const { return model_; }
  const SketchSet& sketches() const { return sketches_; }
  const std::vector<Repetition>& repetitions() const { return repetitions_; }
  std::uint64_t seed() const { return seed_; }
  unsigned code_bits() const { return code_bits_; }

  /// The query's stored-length code in every repetition.
  std::vector<std::uint64_t> query_codes(const Eigen::Ref<const Eigen::VectorXf>& unit) const;
  SearchCursor open_cursor(const EncodedQuery& query) const;

  /// Versioned little-endian layout: magic, version, config, seed, dataset,
  /// collision table, repetitions, sketches. Hash functions are regenerated
  /// from the seed.
  void serialize(std::ostream& out) const;
  static Index deserialize(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Index load(const std::filesystem::path& path);

  std::size_t memory_bytes() const;

 private:
  void assemble_components();

  Dataset data_;
  IndexConfig config_;
  std::uint64_t seed_ = 0;
  unsigned code_bits_ = 0;
  HashSource source_;
  CollisionModel model_;
  SketchSet sketches_;
  std::vector<Repetition> repetitions_;
};

inline SearchCursor open_cursor(const Index& index, const EncodedQuery& query) { return index.open_cursor(query); }

}  // namespace parlsh
