#include "parlsh/hash_source.hpp"

#include "parlsh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace parlsh {

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::independent: return "independent";
    case Strategy::pool: return "pool";
    case Strategy::tensor: return "tensor";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "independent") return Strategy::independent;
  if (name == "pool") return Strategy::pool;
  if (name == "tensor") return Strategy::tensor;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

namespace {

bool is_even_power_of_two(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) return false;
  unsigned log = 0;
  while ((std::size_t{1} << log) < n) ++log;
  return log % 2 == 0;
}

}  // namespace

HashSource HashSource::make(const SourceConfig& config, Family family, std::size_t dim, std::uint64_t seed) {
  if (config.depth == 0) throw std::invalid_argument("depth K must be positive");
  if (config.repetitions == 0) throw std::invalid_argument("repetition count L must be positive");
  const unsigned bits = parlsh::bits_per_hash(family, dim);
  if (config.depth * bits > 64) throw std::invalid_argument("K * bits per hash exceeds 64 bits");

  HashSource src;
  src.config_ = config;
  src.seed_ = seed;
  const std::size_t L = config.repetitions;
  const std::size_t K = config.depth;
  const std::uint64_t bank_seed = derive_seed(seed, 1);
  src.functions_.resize(L * K);

  switch (config.strategy) {
    case Strategy::independent: {
      src.bank_ = HashBank(family, dim, L * K, bank_seed);
      std::iota(src.functions_.begin(), src.functions_.end(), 0u);
      break;
    }
    case Strategy::pool: {
      if (config.pool_bits < K * bits)
        throw std::invalid_argument("pool of " + std::to_string(config.pool_bits) + " bits is smaller than K * l = " +
                                    std::to_string(K * bits));
      const std::size_t pool = (config.pool_bits + bits - 1) / bits;
      src.bank_ = HashBank(family, dim, pool, bank_seed);
      // Partial Fisher-Yates: the first K slots are a uniform sample without replacement.
      std::vector<std::uint32_t> perm(pool);
      for (std::size_t j = 0; j < L; ++j) {
        std::iota(perm.begin(), perm.end(), 0u);
        Rng rng(derive_seed(derive_seed(seed, 2), j));
        for (std::size_t s = 0; s < K; ++s) {
          const std::size_t pick = s + static_cast<std::size_t>(rng.below(pool - s));
          std::swap(perm[s], perm[pick]);
          src.functions_[j * K + s] = perm[s];
        }
      }
      break;
    }
    case Strategy::tensor: {
      if (!is_even_power_of_two(L)) throw std::invalid_argument("tensoring needs L to be an even power of two");
      if (K % 2 != 0) throw std::invalid_argument("tensoring needs an even K");
      std::size_t side = 1;
      while (side * side < L) ++side;
      src.tensor_side_ = side;
      src.bank_ = HashBank(family, dim, 2 * side * (K / 2), bank_seed);
      for (std::size_t j1 = 0; j1 < side; ++j1) {
        for (std::size_t j2 = 0; j2 < side; ++j2) {
          std::uint32_t* dst = src.functions_.data() + src.tensor_repetition(j1, j2) * K;
          for (unsigned s = 0; s < K / 2; ++s) {
            dst[2 * s] = src.tensor_function(0, j1, s);
            dst[2 * s + 1] = src.tensor_function(1, j2, s);
          }
        }
      }
      break;
    }
  }
  src.used_ = src.functions_;
  std::sort(src.used_.begin(), src.used_.end());
  src.used_.erase(std::unique(src.used_.begin(), src.used_.end()), src.used_.end());
  return src;
}

std::uint32_t HashSource::tensor_function(unsigned collection, std::size_t tuple, unsigned position) const {
  return static_cast<std::uint32_t>((collection * tensor_side_ + tuple) * (config_.depth / 2) + position);
}

HashCode HashSource::assemble(std::span<const std::uint16_t> values, std::size_t repetition) const {
  const unsigned bits = bank_.bits();
  std::uint64_t code = 0;
  for (std::uint32_t f : functions_of(repetition)) code = (code << bits) | values[f];
  return {code, code_bits()};
}

HashCode HashSource::hash_point(std::size_t repetition, const Eigen::Ref<const Eigen::VectorXf>& v) const {
  std::vector<std::uint16_t> values(bank_.size());
  bank_.evaluate(v, values);
  return assemble(values, repetition);
}

bool HashSource::should_stop(const StopState& state, const CollisionModel& model) const {
  if (state.depth_bits == 0) return state.exhausted;
  if (!state.have_k) return false;
  const double target = std::log(1.0 / state.delta);
  const double ip = state.kth_inner_product;
  const auto scanned = static_cast<double>(state.scanned);
  switch (config_.strategy) {
    case Strategy::independent:
      return scanned * model.prefix_probability(ip, state.depth_bits) * state.pass_probability >= target;
    case Strategy::pool: {
      const double p = model.function_probability(ip);
      const unsigned bits = bank_.bits();
      const double functions_deep = static_cast<double>((state.depth_bits + bits - 1) / bits);
      const bool pool_large_enough =
          p > 0.0 && static_cast<double>(bank_.size()) >= 5.0 * functions_deep * functions_deep / p;
      return pool_large_enough &&
             scanned * model.prefix_probability(ip, state.depth_bits) * state.pass_probability >= target;
    }
    case Strategy::tensor: {
      const unsigned half_bits = state.depth_bits / 2;
      const double miss = 1.0 - model.prefix_probability(ip, half_bits);
      return 2.0 * std::pow(miss, scanned) <= state.delta;
    }
  }
  return false;
}

std::size_t HashSource::memory_bytes() const {
  return bank_.memory_bytes() + functions_.size() * sizeof(std::uint32_t);
}

}  // namespace parlsh
