#include "parlsh/index.hpp"

#include "parlsh/rng.hpp"

#include <algorithm>
#include <atomic>
#include <string>
#include <thread>

namespace parlsh {

InsufficientBudget::InsufficientBudget(std::uint64_t budget, std::uint64_t minimum)
    : std::runtime_error("insufficient memory budget: " + std::to_string(budget) +
                         " bytes given, at least " + std::to_string(minimum) + " bytes required"),
      minimum_(minimum) {}

unsigned function_depth(const IndexConfig& config, std::size_t dim) {
  const unsigned bits = bits_per_hash(config.family, dim);
  if (config.strategy == Strategy::tensor) return 2 * ((config.prefix_bits + 2 * bits - 1) / (2 * bits));
  return (config.prefix_bits + bits - 1) / bits;
}

unsigned stored_code_bits(const IndexConfig& config, std::size_t dim) {
  if (config.strategy == Strategy::tensor) return function_depth(config, dim) * bits_per_hash(config.family, dim);
  return config.prefix_bits;
}

std::uint64_t estimate_memory(const IndexConfig& config, std::size_t n, std::size_t dim, unsigned repetitions) {
  const std::uint64_t L = repetitions;
  const std::uint64_t K = function_depth(config, dim);
  const std::uint64_t bits = bits_per_hash(config.family, dim);
  const std::uint64_t fn = function_storage_bytes(config.family, dim);

  std::uint64_t total = n * (dim * sizeof(float) + padded_dimension(dim) * sizeof(std::int16_t));
  total += n * std::uint64_t{config.sketches} * sizeof(std::uint64_t);
  total += std::uint64_t{config.sketches} * kSketchBits * function_storage_bytes(Family::hyperplane, dim);
  if (config.family != Family::hyperplane) total += (bits + 1) * CollisionTable::kBuckets * sizeof(double);

  std::uint64_t functions = 0;
  switch (config.strategy) {
    case Strategy::independent: functions = L * K; break;
    case Strategy::pool: functions = (config.pool_bits + bits - 1) / bits; break;
    case Strategy::tensor: {
      std::uint64_t side = 1;
      while (side * side < L) ++side;
      functions = 2 * side * (K / 2);
      break;
    }
  }
  total += functions * fn + L * K * sizeof(std::uint32_t);
  total += L * (n * sizeof(std::uint64_t) + ((1u << kPrefixTableBits) + 1) * sizeof(std::uint32_t));
  return total;
}

IndexConfig derive_parameters(std::uint64_t budget, std::size_t n, std::size_t dim, Family family, Strategy strategy,
                              IndexConfig base) {
  base.memory_budget = budget;
  base.family = family;
  base.strategy = strategy;
  const std::uint64_t minimum = estimate_memory(base, n, dim, 1);
  if (budget == 0 || minimum > budget) throw InsufficientBudget(budget, minimum);
  // estimate_memory is increasing in L.
  unsigned lo = 1, hi = kMaxRepetitions;
  while (lo < hi) {
    const unsigned mid = lo + (hi - lo + 1) / 2;
    if (estimate_memory(base, n, dim, mid) <= budget) lo = mid;
    else hi = mid - 1;
  }
  if (strategy == Strategy::tensor) {
    unsigned even_power = 1;
    while (even_power * 4 <= lo) even_power *= 4;
    lo = even_power;
  }
  base.repetitions = lo;
  return base;
}

Repetition Repetition::build(std::span<const std::uint64_t> codes, unsigned code_bits) {
  if (code_bits == 0 || code_bits > 63) throw std::invalid_argument("code length must be in [1, 63]");
  const unsigned index_bits = 64 - code_bits;
  if (index_bits < 64 && codes.size() > (1ULL << index_bits))
    throw std::invalid_argument("too many points for a " + std::to_string(code_bits) + "-bit code");
  std::vector<std::uint64_t> entries(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) entries[i] = (codes[i] << index_bits) | i;
  // Packed words are distinct, so this orders by (code, point index).
  std::sort(entries.begin(), entries.end());
  return Repetition(std::move(entries), code_bits);
}

Repetition::Repetition(std::vector<std::uint64_t> entries, unsigned code_bits)
    : entries_(std::move(entries)), code_bits_(code_bits), index_bits_(64 - code_bits) {
  if (code_bits == 0 || code_bits > 63) throw std::invalid_argument("code length must be in [1, 63]");
  build_prefix_table();
}

std::uint64_t Repetition::table_key(std::uint64_t code) const {
  return code_bits_ >= kPrefixTableBits ? code >> (code_bits_ - kPrefixTableBits)
                                        : code << (kPrefixTableBits - code_bits_);
}

void Repetition::build_prefix_table() {
  constexpr std::size_t keys = std::size_t{1} << kPrefixTableBits;
  prefix_table_.assign(keys + 1, static_cast<std::uint32_t>(entries_.size()));
  std::size_t t = 0;
  for (std::size_t key = 0; key < keys; ++key) {
    while (t < entries_.size() && table_key(code(t)) < key) ++t;
    prefix_table_[key] = static_cast<std::uint32_t>(t);
  }
}

std::pair<std::size_t, std::size_t> Repetition::range(std::uint64_t query_code, unsigned depth) const {
  if (depth == 0) return {0, entries_.size()};
  depth = std::min(depth, code_bits_);
  const unsigned table_depth = std::min(code_bits_, kPrefixTableBits);
  if (depth <= table_depth) {
    // Whole run of 13-bit keys sharing the prefix.
    const std::uint64_t prefix = query_code >> (code_bits_ - depth);
    const std::uint64_t first = prefix << (kPrefixTableBits - depth);
    const std::uint64_t last = (prefix + 1) << (kPrefixTableBits - depth);
    return {prefix_table_[first], prefix_table_[last]};
  }
  const std::uint64_t key = table_key(query_code);
  const auto begin = entries_.begin() + prefix_table_[key];
  const auto end = entries_.begin() + prefix_table_[key + 1];
  const unsigned free_bits = code_bits_ - depth;
  const std::uint64_t low_code = (query_code >> free_bits) << free_bits;
  const std::uint64_t high_code = low_code | ((1ULL << free_bits) - 1);
  const std::uint64_t low = low_code << index_bits_;
  const std::uint64_t high = (high_code << index_bits_) | index_mask();
  const auto lo = std::lower_bound(begin, end, low);
  const auto hi = std::upper_bound(lo, end, high);
  return {static_cast<std::size_t>(lo - entries_.begin()), static_cast<std::size_t>(hi - entries_.begin())};
}

std::size_t Repetition::memory_bytes() const {
  return entries_.size() * sizeof(std::uint64_t) + prefix_table_.size() * sizeof(std::uint32_t);
}

SearchCursor::SearchCursor(const std::vector<Repetition>& repetitions, std::vector<std::uint64_t> query_codes,
                           unsigned segment_size)
    : reps_(&repetitions), codes_(std::move(query_codes)), segment_(std::max(1u, segment_size)) {
  emitted_.reserve(codes_.size());
  for (std::size_t j = 0; j < codes_.size(); ++j) {
    const auto& rep = repetitions[j];
    const std::size_t start = rep.range(codes_[j], rep.code_bits()).first;
    emitted_.emplace_back(start, start);
  }
}

void SearchCursor::retrieve_new(std::size_t j, unsigned depth, std::vector<std::uint32_t>& out) {
  const Repetition& rep = (*reps_)[j];
  const auto [lo, hi] = rep.range(codes_[j], depth);
  auto& [emitted_lo, emitted_hi] = emitted_[j];
  const std::size_t B = segment_;
  if (lo < emitted_lo) {
    const std::size_t want = (emitted_lo - lo + B - 1) / B * B;
    const std::size_t new_lo = want >= emitted_lo ? 0 : emitted_lo - want;
    for (std::size_t t = new_lo; t < emitted_lo; ++t) out.push_back(rep.point(t));
    emitted_lo = new_lo;
  }
  if (hi > emitted_hi) {
    const std::size_t want = (hi - emitted_hi + B - 1) / B * B;
    const std::size_t new_hi = std::min(rep.size(), emitted_hi + want);
    for (std::size_t t = emitted_hi; t < new_hi; ++t) out.push_back(rep.point(t));
    emitted_hi = new_hi;
  }
}

void Index::assemble_components() {
  const std::size_t dim = data_.dim();
  const SourceConfig source_config{config_.strategy, function_depth(config_, dim), config_.repetitions,
                                   config_.pool_bits};
  source_ = make_source(source_config, config_.family, dim, derive_seed(seed_, 10));
  code_bits_ = stored_code_bits(config_, dim);
}

Index Index::build(Dataset data, IndexConfig config, std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("cannot build an index over an empty dataset");
  const std::size_t n = data.size();
  const std::size_t dim = data.dim();
  if (config.repetitions == 0) {
    config = derive_parameters(config.memory_budget, n, dim, config.family, config.strategy, config);
  }
  config.repetitions = std::min(config.repetitions, kMaxRepetitions);

  Index index;
  index.data_ = std::move(data);
  index.config_ = config;
  index.seed_ = seed;
  index.assemble_components();

  if (config.family != Family::hyperplane) {
    index.model_ = CollisionModel(config.family, dim,
                                  build_collision_table(config.family, dim, derive_seed(seed, 11), config.table_samples));
  } else {
    index.model_ = CollisionModel(Family::hyperplane, dim);
  }
  index.sketches_ = SketchSet::build(index.data_, config.sketches, derive_seed(seed, 12));

  // Codes of every point in every repetition, filled chunk by chunk so the
  // per-point function values never exist for the whole dataset at once.
  const HashSource& src = index.source_;
  const std::size_t L = config.repetitions;
  const std::size_t F = src.function_count();
  const unsigned full_bits = src.code_bits();
  const unsigned drop = full_bits - index.code_bits_;
  std::vector<std::vector<std::uint64_t>> codes(L, std::vector<std::uint64_t>(n));
  std::vector<std::uint16_t> values;
  constexpr std::size_t kChunk = 2048;
  const auto all = index.data_.matrix();
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    values.resize(len * F);
    src.bank().evaluate_rows(all.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)), values,
                             src.used_functions());
    for (std::size_t r = 0; r < len; ++r) {
      const std::span<const std::uint16_t> row(values.data() + r * F, F);
      for (std::size_t j = 0; j < L; ++j) codes[j][start + r] = src.assemble(row, j).bits >> drop;
    }
  }

  index.repetitions_.resize(L);
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(L)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j = next++; j < L; j = next++) {
      index.repetitions_[j] = Repetition::build(codes[j], index.code_bits_);
      std::vector<std::uint64_t>().swap(codes[j]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return index;
}

std::vector<std::uint64_t> Index::query_codes(const Eigen::Ref<const Eigen::VectorXf>& unit) const {
  std::vector<std::uint16_t> values(source_.function_count());
  source_.evaluate(unit, values);
  const unsigned drop = source_.code_bits() - code_bits_;
  std::vector<std::uint64_t> out(repetitions_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = source_.assemble(values, j).bits >> drop;
  return out;
}

SearchCursor Index::open_cursor(const EncodedQuery& query) const {
  return SearchCursor(repetitions_, query_codes(query.unit), config_.segment_size);
}

std::size_t Index::memory_bytes() const {
  std::size_t total = data_.memory_bytes() + sketches_.memory_bytes() + source_.memory_bytes();
  total += model_.table().estimates().size() * sizeof(double);
  for (const auto& rep : repetitions_) total += rep.memory_bytes();
  return total;
}

}  // namespace parlsh
