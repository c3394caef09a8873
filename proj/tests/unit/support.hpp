#pragma once

// Test-side randomness comes from the standard distributions, independent of
// the library's own generator.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <random>
#include <vector>

namespace testing {

inline std::vector<float> random_unit(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  double sq = 0.0;
  for (auto& c : v) {
    c = normal(gen);
    sq += c * c;
  }
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / std::sqrt(sq));
  return out;
}

inline double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

// (alpha, sqrt(1 - alpha^2), 0, ...) in dimension dim.
inline std::vector<float> at_inner_product(double alpha, std::size_t dim) {
  std::vector<float> v(dim, 0.0f);
  v[0] = static_cast<float>(alpha);
  v[1] = static_cast<float>(std::sqrt(1.0 - alpha * alpha));
  return v;
}

inline std::vector<float> basis(std::size_t i, std::size_t dim) {
  std::vector<float> v(dim, 0.0f);
  v[i] = 1.0f;
  return v;
}

inline Eigen::Map<const Eigen::VectorXf> as_eigen(const std::vector<float>& v) {
  return Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Standard error of a proportion estimated from `draws` samples.
inline double standard_error(double p, double draws) { return std::sqrt(std::max(p * (1.0 - p), 1e-12) / draws); }

}  // namespace testing
