#include "parlsh/probability.hpp"

#include "parlsh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace parlsh {

double hp_collision(double inner_product) {
  return 1.0 - std::acos(std::clamp(inner_product, -1.0, 1.0)) / std::numbers::pi;
}

CollisionTable::CollisionTable(Family family, std::size_t dim, unsigned max_bits, std::size_t samples,
                               std::vector<double> estimates)
    : family_(family), dim_(dim), max_bits_(max_bits), samples_(samples), estimates_(std::move(estimates)) {
  if (estimates_.size() != static_cast<std::size_t>(max_bits_ + 1) * kBuckets)
    throw std::invalid_argument("collision table has the wrong number of cells");
}

int CollisionTable::bucket_of(double inner_product) {
  const double ip = std::clamp(inner_product, -1.0, 1.0);
  // The epsilon keeps values printed on the grid (0.95 etc.) in their own bucket.
  const int bucket = static_cast<int>(std::floor((ip + 1.0) * kBucketsPerUnit + 1e-9));
  return std::clamp(bucket, 0, kBuckets - 1);
}

void CollisionTable::write_text(std::ostream& out) const {
  for (unsigned b = 0; b <= max_bits_; ++b) {
    for (int a = 0; a < kBuckets; ++a) out << b << ' ' << grid_value(a) << ' ' << estimate(b, a) << '\n';
  }
}

void enforce_monotone(std::vector<double>& estimates, unsigned max_bits) {
  constexpr int n = CollisionTable::kBuckets;
  auto cell = [&](unsigned b, int a) -> double& { return estimates[static_cast<std::size_t>(b) * n + a]; };
  for (int a = 0; a < n; ++a) cell(0, a) = 1.0;
  for (unsigned b = 1; b <= max_bits; ++b) {
    for (int a = n - 2; a >= 0; --a) cell(b, a) = std::min(cell(b, a), cell(b, a + 1));
    for (int a = 0; a < n; ++a) cell(b, a) = std::clamp(std::min(cell(b, a), cell(b - 1, a)), 0.0, 1.0);
  }
}

namespace {

// Codes of x = e_0 and y = alpha e_0 + beta e_1 under one sampled function.
struct CodePair {
  std::uint64_t x;
  std::uint64_t y;
};

class TableSampler {
 public:
  TableSampler(Family family, std::size_t dim, unsigned max_bits) : family_(family), dim_(dim), max_bits_(max_bits) {}

  // Draws the randomness of sample s; it is shared by every grid value.
  void draw(std::uint64_t seed) {
    switch (family_) {
      case Family::hyperplane: {
        // Only the first two coordinates of each direction meet x and y.
        hp_.resize(2, max_bits_);
        for (unsigned b = 0; b < max_bits_; ++b) {
          const HyperplaneHash h(dim_, derive_seed(seed, b));
          hp_(0, b) = h.direction()[0];
          hp_(1, b) = dim_ > 1 ? h.direction()[1] : 0.0f;
        }
        break;
      }
      case Family::cross_polytope: {
        // R x is column 0 of R and R y mixes columns 0 and 1, so only those
        // two Gaussian columns are drawn.
        Rng rng(seed);
        columns_.resize(static_cast<Eigen::Index>(dim_), 2);
        for (Eigen::Index r = 0; r < columns_.rows(); ++r)
          for (Eigen::Index c = 0; c < 2; ++c) columns_(r, c) = static_cast<float>(rng.normal());
        break;
      }
      case Family::fht_cross_polytope: {
        const FhtCrossPolytopeHash f(dim_, seed);
        Eigen::VectorXf e0 = Eigen::VectorXf::Zero(static_cast<Eigen::Index>(dim_));
        Eigen::VectorXf e1 = e0;
        e0[0] = 1.0f;
        if (dim_ > 1) e1[1] = 1.0f;
        rx_ = f.rotate(e0);
        r1_ = f.rotate(e1);
        break;
      }
    }
  }

  CodePair codes(double alpha) const {
    const double beta = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
    switch (family_) {
      case Family::hyperplane: {
        std::uint64_t cx = 0, cy = 0;
        for (unsigned b = 0; b < max_bits_; ++b) {
          const double px = hp_(0, b);
          const double py = alpha * hp_(0, b) + beta * hp_(1, b);
          cx = (cx << 1) | (px >= 0.0 ? 1u : 0u);
          cy = (cy << 1) | (py >= 0.0 ? 1u : 0u);
        }
        return {cx, cy};
      }
      case Family::cross_polytope: {
        const Eigen::VectorXf rx = columns_.col(0);
        const Eigen::VectorXf ry = (alpha * columns_.col(0).cast<double>() + beta * columns_.col(1).cast<double>()).cast<float>();
        return {cross_polytope_code({rx.data(), dim_}), cross_polytope_code({ry.data(), dim_})};
      }
      case Family::fht_cross_polytope: {
        // The transform is linear, so rotate(y) = alpha rotate(e_0) + beta rotate(e_1).
        const Eigen::VectorXf ry = (alpha * rx_.cast<double>() + beta * r1_.cast<double>()).cast<float>();
        const auto n = static_cast<std::size_t>(rx_.size());
        return {cross_polytope_code({rx_.data(), n}), cross_polytope_code({ry.data(), n})};
      }
    }
    return {0, 0};
  }

 private:
  Family family_;
  std::size_t dim_;
  unsigned max_bits_;
  Eigen::MatrixXf hp_;
  Eigen::MatrixXf columns_;
  Eigen::VectorXf rx_;
  Eigen::VectorXf r1_;
};

}  // namespace

CollisionTable build_collision_table(Family family, std::size_t dim, std::uint64_t seed, std::size_t samples,
                                     unsigned max_bits) {
  if (dim < 2) throw std::invalid_argument("collision tables need dimension >= 2");
  if (samples == 0) throw std::invalid_argument("collision tables need at least one sample");
  if (max_bits == 0) max_bits = bits_per_hash(family, dim);
  if (max_bits > 63) throw std::invalid_argument("too many bits for a collision table");
  constexpr int n = CollisionTable::kBuckets;
  std::vector<std::size_t> hits(static_cast<std::size_t>(max_bits + 1) * n, 0);
  TableSampler sampler(family, dim, max_bits);
  for (std::size_t s = 0; s < samples; ++s) {
    sampler.draw(derive_seed(seed, s));
    for (int a = 0; a < n; ++a) {
      const CodePair c = sampler.codes(CollisionTable::grid_value(a));
      const std::uint64_t diff = c.x ^ c.y;
      for (unsigned b = 0; b <= max_bits; ++b) {
        if ((diff >> (max_bits - b)) == 0) ++hits[static_cast<std::size_t>(b) * n + a];
      }
    }
  }
  std::vector<double> estimates(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) estimates[i] = static_cast<double>(hits[i]) / static_cast<double>(samples);
  enforce_monotone(estimates, max_bits);
  return CollisionTable(family, dim, max_bits, samples, std::move(estimates));
}

CollisionModel::CollisionModel(Family family, std::size_t dim, CollisionTable table)
    : family_(family), bits_per_hash_(parlsh::bits_per_hash(family, dim)), table_(std::move(table)) {
  if (family != Family::hyperplane) {
    if (table_.empty()) throw std::invalid_argument("cross-polytope families need a collision table");
    if (table_.max_bits() < bits_per_hash_) throw std::invalid_argument("collision table covers too few bits");
  }
}

double CollisionModel::function_probability(double inner_product) const {
  if (family_ == Family::hyperplane) return hp_collision(inner_product);
  return table_.lookup(inner_product, bits_per_hash_);
}

double CollisionModel::prefix_probability(double inner_product, unsigned bits) const {
  if (family_ == Family::hyperplane) return std::pow(hp_collision(inner_product), static_cast<double>(bits));
  const unsigned whole = bits / bits_per_hash_;
  const unsigned rest = bits % bits_per_hash_;
  const int bucket = CollisionTable::bucket_of(inner_product);
  return std::pow(table_.estimate(bits_per_hash_, bucket), static_cast<double>(whole)) * table_.estimate(rest, bucket);
}

}  // namespace parlsh
