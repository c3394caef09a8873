#include "parlsh/harness.hpp"

#include "parlsh/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace parlsh {

std::vector<Neighbor> brute_force_knn(const Dataset& data, std::span<const float> q, std::size_t k) {
  if (k > data.size()) throw std::invalid_argument("k exceeds the number of points");
  const std::vector<float> unit = normalized(q);
  std::vector<Neighbor> all(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    all[i] = {static_cast<std::uint32_t>(i), data.inner_product_float(i, unit)};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  return all;
}

GroundTruth brute_force_batch(const Dataset& data, const RowMajorMatrixXf& queries, std::size_t k, unsigned threads) {
  if (k > data.size()) throw std::invalid_argument("k exceeds the number of points");
  if (static_cast<std::size_t>(queries.cols()) != data.dim()) throw std::invalid_argument("query dimension mismatch");
  const std::size_t m = static_cast<std::size_t>(queries.rows());
  GroundTruth truth(m);
  if (k == 0 || m == 0) return truth;

  // Float scores are off by far less than this for unit vectors; anything
  // within the margin of the k-th float score is re-scored exactly.
  constexpr float kMargin = 1e-3f;
  constexpr std::size_t kBlock = 32;
  const auto points = data.matrix();
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    Eigen::MatrixXf scores;
    std::vector<float> column;
    for (std::size_t start = next.fetch_add(kBlock); start < m; start = next.fetch_add(kBlock)) {
      const std::size_t len = std::min(kBlock, m - start);
      RowMajorMatrixXf block(static_cast<Eigen::Index>(len), queries.cols());
      std::vector<std::vector<float>> units(len);
      for (std::size_t r = 0; r < len; ++r) {
        const auto row = queries.row(static_cast<Eigen::Index>(start + r));
        units[r] = normalized(std::span<const float>(row.data(), data.dim()));
        block.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXf>(units[r].data(), static_cast<Eigen::Index>(data.dim()));
      }
      scores.noalias() = points * block.transpose();
      for (std::size_t r = 0; r < len; ++r) {
        const float* s = scores.col(static_cast<Eigen::Index>(r)).data();
        column.assign(s, s + data.size());
        std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(k - 1), column.end(),
                         std::greater<>());
        const float cut = column[k - 1] - kMargin;
        std::vector<Neighbor> cands;
        for (std::size_t i = 0; i < data.size(); ++i) {
          if (s[i] >= cut) cands.push_back({static_cast<std::uint32_t>(i), data.inner_product_float(i, units[r])});
        }
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(), closer);
        auto& out = truth[start + r];
        out.reserve(k);
        for (std::size_t t = 0; t < k; ++t) out.push_back(cands[t].index);
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>((m + kBlock - 1) / kBlock));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  return truth;
}

double recall(std::span<const std::uint32_t> result, std::span<const std::uint32_t> truth, std::size_t k) {
  if (k == 0) return 1.0;
  const std::size_t depth = std::min(k, truth.size());
  std::vector<std::uint32_t> expected(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(depth));
  std::sort(expected.begin(), expected.end());
  std::size_t hits = 0;
  for (std::uint32_t r : result) hits += std::binary_search(expected.begin(), expected.end(), r) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2 || spec.d < 1) throw std::invalid_argument("synthetic instance needs n >= 2 and d >= 1");
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto m = static_cast<Eigen::Index>(spec.m);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const double sigma = std::sqrt(1.0 / (2.0 * static_cast<double>(spec.d)));

  SyntheticData out;
  out.points = RowMajorMatrixXf::Zero(n, 3 * d);
  out.queries = RowMajorMatrixXf::Zero(m, 3 * d);

  Rng points(derive_seed(spec.seed, 0));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (Eigen::Index c = d; c < 3 * d; ++c) out.points(i, c) = static_cast<float>(sigma * points.normal());
  }
  Rng planted(derive_seed(spec.seed, 1));
  Eigen::VectorXf v(d);
  for (Eigen::Index c = 0; c < d; ++c) v(c) = static_cast<float>(sigma * planted.normal());
  for (Eigen::Index c = 0; c < d; ++c) out.points(n - 1, c) = v(c);
  for (Eigen::Index c = 0; c < d; ++c) out.points(n - 1, d + c) = static_cast<float>(sigma * planted.normal());

  Rng queries(derive_seed(spec.seed, 2));
  const double r_norm = std::sqrt(0.5);
  std::vector<double> r(spec.d);
  for (Eigen::Index i = 0; i < m; ++i) {
    double sq = 0.0;
    for (auto& c : r) {
      c = queries.normal();
      sq += c * c;
    }
    const double scale = r_norm / std::sqrt(sq);
    for (Eigen::Index c = 0; c < d; ++c) {
      out.queries(i, c) = v(c);
      out.queries(i, 2 * d + c) = static_cast<float>(r[static_cast<std::size_t>(c)] * scale);
    }
  }
  return out;
}

RowMajorMatrixXf random_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed) {
  RowMajorMatrixXf out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  Rng rng(seed);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(i, c) = static_cast<float>(rng.normal());
  }
  return out;
}

}  // namespace parlsh
