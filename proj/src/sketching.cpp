#include "parlsh/sketching.hpp"

#include "parlsh/probability.hpp"
#include "parlsh/rng.hpp"

#include <algorithm>
#include <cmath>

namespace parlsh {

unsigned select_sketch(std::uint32_t repetition, unsigned sketch_count) {
  return static_cast<unsigned>(splitmix64(repetition) % sketch_count);
}

unsigned sketch_threshold(double kth_inner_product, double epsilon) {
  const double expected = (1.0 + epsilon) * kSketchBits * (1.0 - hp_collision(kth_inner_product));
  if (!(expected < kSketchBits)) return kSketchBits;  // also catches +inf epsilon
  const double rounded = std::floor(expected + 0.5);
  return static_cast<unsigned>(std::clamp(rounded, 0.0, static_cast<double>(kSketchBits)));
}

double pass_probability(double inner_product, unsigned threshold) {
  if (threshold >= kSketchBits) return 1.0;
  const double flip = 1.0 - hp_collision(inner_product);
  if (flip <= 0.0) return 1.0;
  if (flip >= 1.0) return 0.0;
  // Binomial pmf by the ratio recurrence, starting from (1 - flip)^64.
  const double odds = flip / (1.0 - flip);
  double pmf = std::pow(1.0 - flip, kSketchBits);
  double sum = pmf;
  for (unsigned t = 0; t < threshold; ++t) {
    pmf *= odds * (kSketchBits - t) / (t + 1.0);
    sum += pmf;
  }
  return std::min(sum, 1.0);
}

SketchSet::SketchSet(std::size_t dim, unsigned sketch_count, std::uint64_t seed)
    : sketch_count_(sketch_count),
      seed_(seed),
      planes_(Family::hyperplane, dim, static_cast<std::size_t>(sketch_count) * kSketchBits, seed) {}

SketchSet SketchSet::build(const Dataset& data, unsigned sketch_count, std::uint64_t seed) {
  SketchSet set(data.dim(), sketch_count, seed);
  if (sketch_count == 0) return set;
  const std::size_t n = data.size();
  const std::size_t bits = set.planes_.size();
  set.words_.assign(n * sketch_count, 0);
  constexpr std::size_t kChunk = 4096;
  std::vector<std::uint16_t> signs;
  const auto all = data.matrix();
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    signs.resize(len * bits);
    set.planes_.evaluate_rows(all.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)), signs);
    for (std::size_t r = 0; r < len; ++r) {
      std::uint64_t* dst = set.words_.data() + (start + r) * sketch_count;
      const std::uint16_t* src = signs.data() + r * bits;
      for (std::size_t b = 0; b < bits; ++b) dst[b / kSketchBits] |= static_cast<std::uint64_t>(src[b]) << (b % kSketchBits);
    }
  }
  return set;
}

std::vector<std::uint64_t> SketchSet::sketch_point(const Eigen::Ref<const Eigen::VectorXf>& v) const {
  std::vector<std::uint16_t> signs(planes_.size());
  planes_.evaluate(v, signs);
  std::vector<std::uint64_t> out(sketch_count_, 0);
  for (std::size_t b = 0; b < signs.size(); ++b) out[b / kSketchBits] |= static_cast<std::uint64_t>(signs[b]) << (b % kSketchBits);
  return out;
}

std::size_t SketchSet::memory_bytes() const {
  return words_.size() * sizeof(std::uint64_t) + planes_.memory_bytes();
}

}  // namespace parlsh
