#pragma once

#include "parlsh/dataset.hpp"
#include "parlsh/query.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace parlsh {

/// Exact k nearest points to `q` (normalized first) by float inner product
/// accumulated in double, ties broken by smaller index. Requires k <= n.
std::vector<Neighbor> brute_force_knn(const Dataset& data, std::span<const float> q, std::size_t k);

/// Per query, the exact k nearest point indices.
using GroundTruth = std::vector<std::vector<std::uint32_t>>;

/// `brute_force_knn` for every row of `queries`. Candidates are preselected
/// with a float matrix product and re-scored exactly, so the result matches
/// the single-query oracle. Runs on `threads` workers (0: all cores).
GroundTruth brute_force_batch(const Dataset& data, const RowMajorMatrixXf& queries, std::size_t k,
                              unsigned threads = 0);

/// |result ∩ truth[0..k)| / k.
double recall(std::span<const std::uint32_t> result, std::span<const std::uint32_t> truth, std::size_t k);

/// The hard instance: n points and m queries in dimension 3d where the last
/// point is every query's nearest neighbour in expectation.
///   x_i = (0, y_i, z_i) for i < n - 1,  x_{n-1} = (v, w, 0),  q_i = (v, 0, r_i)
/// with coordinates drawn from N(0, 1/(2d)) and each r_i rescaled to length
/// sqrt(1/2). Vectors are returned unnormalized.
struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t m = 100;
  std::size_t d = 100;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  RowMajorMatrixXf points;
  RowMajorMatrixXf queries;
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

/// n vectors with i.i.d. standard normal coordinates (uniform directions).
RowMajorMatrixXf random_gaussian(std::size_t n, std::size_t dim, std::uint64_t seed);

}  // namespace parlsh
