#include "parlsh/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace parlsh {

std::int16_t to_fixed(float c) {
  const double scaled = std::round(static_cast<double>(c) * kFixedScale);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

std::vector<float> normalized(std::span<const float> v) {
  double sq = 0.0;
  for (float c : v) sq += static_cast<double>(c) * c;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("zero vector");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

std::int64_t fixed_dot_scalar(std::span<const std::int16_t> a, std::span<const std::int16_t> b) {
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<std::int32_t>(a[i]) * b[i];
  return acc;
}

std::int64_t fixed_dot(std::span<const std::int16_t> a, std::span<const std::int16_t> b) {
#if defined(__AVX2__)
  // Rows are padded to multiples of 16 lanes. Each madd lane holds at most
  // 2 * 32767^2 < 2^31, and for unit vectors the lane sums stay near 2^30.
  if (a.size() % 16 == 0) {
    __m256i acc = _mm256_setzero_si256();
    for (std::size_t i = 0; i < a.size(); i += 16) {
      const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data() + i));
      const __m256i y = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + i));
      acc = _mm256_add_epi32(acc, _mm256_madd_epi16(x, y));
    }
    alignas(32) std::int32_t lanes[8];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    std::int64_t sum = 0;
    for (std::int32_t lane : lanes) sum += lane;
    return sum;
  }
#endif
  return fixed_dot_scalar(a, b);
}

double angular_distance(double inner_product) {
  return std::acos(std::clamp(inner_product, -1.0, 1.0));
}

void Dataset::check_dimension(std::size_t dim) {
  if (dim_ == 0 && count_ == 0) {
    if (dim == 0) throw std::invalid_argument("dimension must be positive");
    dim_ = dim;
    stride_ = padded_dimension(dim);
    return;
  }
  if (dim != dim_) {
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                                std::to_string(dim));
  }
}

void Dataset::reserve(std::size_t n) {
  floats_.reserve(n * dim_);
  fixed_.reserve(n * stride_);
}

std::uint32_t Dataset::insert(std::span<const float> v) {
  check_dimension(v.size());
  return insert_unit(normalized(v));
}

std::uint32_t Dataset::insert_unit(std::span<const float> unit) {
  check_dimension(unit.size());
  if (count_ >= std::numeric_limits<std::uint32_t>::max()) throw std::length_error("dataset full");
  floats_.insert(floats_.end(), unit.begin(), unit.end());
  const std::size_t base = fixed_.size();
  fixed_.resize(base + stride_, 0);
  for (std::size_t j = 0; j < dim_; ++j) fixed_[base + j] = to_fixed(unit[j]);
  return static_cast<std::uint32_t>(count_++);
}

EncodedQuery Dataset::encode(std::span<const float> q) const {
  if (q.size() != dim_) {
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                                std::to_string(q.size()));
  }
  const std::vector<float> unit = normalized(q);
  EncodedQuery out;
  out.unit = Eigen::Map<const Eigen::VectorXf>(unit.data(), static_cast<Eigen::Index>(dim_));
  out.fixed.assign(stride_, 0);
  for (std::size_t j = 0; j < dim_; ++j) out.fixed[j] = to_fixed(unit[j]);
  return out;
}

double Dataset::inner_product_float(std::size_t i, std::span<const float> q) const {
  const float* row = floats_.data() + i * dim_;
  double acc = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) acc += static_cast<double>(row[j]) * q[j];
  return acc;
}

std::size_t Dataset::memory_bytes() const {
  return count_ * (dim_ * sizeof(float) + stride_ * sizeof(std::int16_t));
}

}  // namespace parlsh
