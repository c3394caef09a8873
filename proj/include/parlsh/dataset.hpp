#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <new>
#include <span>
#include <stdexcept>
#include <vector>

namespace parlsh {

template <typename T, std::size_t Alignment>
struct AlignedAllocator {
  using value_type = T;

  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U, Alignment>;
  };

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {}

  T* allocate(std::size_t count) {
    return static_cast<T*>(::operator new(count * sizeof(T), std::align_val_t{Alignment}));
  }
  void deallocate(T* ptr, std::size_t) noexcept { ::operator delete(ptr, std::align_val_t{Alignment}); }

  template <typename U>
  bool operator==(const AlignedAllocator<U, Alignment>&) const noexcept {
    return true;
  }
};

/// Row alignment of the fixed-point storage, in bytes (one 256-bit register).
inline constexpr std::size_t kRowAlignment = 32;
/// Fixed-point scale: a coordinate c is stored as round(c * 2^15).
inline constexpr double kFixedScale = 32768.0;

using FixedRow = std::vector<std::int16_t, AlignedAllocator<std::int16_t, kRowAlignment>>;
using RowMajorMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Number of 16-bit coordinates per stored row: `dim` rounded up to a multiple of 16.
constexpr std::size_t padded_dimension(std::size_t dim) { return (dim + 15) / 16 * 16; }

/// round(c * 2^15), clamped to the int16 range, so +1.0 maps to 32767.
std::int16_t to_fixed(float c);

/// Unit-length copy of `v`. Throws std::invalid_argument on a zero (or non-finite) vector.
std::vector<float> normalized(std::span<const float> v);

template <typename Derived>
Eigen::VectorXf normalized(const Eigen::MatrixBase<Derived>& v) {
  Eigen::VectorXf out = v.template cast<float>();
  const double norm = out.template cast<double>().norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("zero vector");
  return (out.template cast<double>() / norm).template cast<float>();
}

/// Raw fixed-point dot product, Σ a_j b_j, of two rows of equal padded length.
std::int64_t fixed_dot(std::span<const std::int16_t> a, std::span<const std::int16_t> b);
/// Portable reference for `fixed_dot`; the vector kernel must agree with it exactly.
std::int64_t fixed_dot_scalar(std::span<const std::int16_t> a, std::span<const std::int16_t> b);

/// Fixed-point inner product scaled back to [-1, 1].
inline double fixed_inner_product(std::span<const std::int16_t> a, std::span<const std::int16_t> b) {
  return static_cast<double>(fixed_dot(a, b)) / (kFixedScale * kFixedScale);
}

/// arccos of the inner product, clamped into [-1, 1] first.
double angular_distance(double inner_product);

/// A normalized query in both representations.
struct EncodedQuery {
  Eigen::VectorXf unit;
  FixedRow fixed;
};

/// Append-only store of unit vectors, kept both as floats and as padded
/// 16-bit fixed-point rows. Point i is the same vector in both forms.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dim) : dim_(dim), stride_(padded_dimension(dim)) {}

  /// Normalizes `v` and appends it. The first insertion into a dataset
  /// constructed without a dimension fixes it. Returns the new point index.
  std::uint32_t insert(std::span<const float> v);

  template <typename Derived>
  std::uint32_t insert(const Eigen::MatrixBase<Derived>& v) {
    const Eigen::VectorXf tmp = v.template cast<float>();
    return insert(std::span<const float>(tmp.data(), static_cast<std::size_t>(tmp.size())));
  }

  /// Appends a vector that is already unit length, bit for bit. Used when
  /// reloading a serialized dataset.
  std::uint32_t insert_unit(std::span<const float> unit);

  void reserve(std::size_t n);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t dim() const { return dim_; }
  std::size_t padded_dim() const { return stride_; }

  std::span<const float> float_row(std::size_t i) const { return {floats_.data() + i * dim_, dim_}; }
  std::span<const std::int16_t> fixed_row(std::size_t i) const {
    return {fixed_.data() + i * stride_, stride_};
  }

  Eigen::Map<const Eigen::VectorXf> vector(std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXf>(floats_.data() + i * dim_, static_cast<Eigen::Index>(dim_));
  }
  /// All points as an n x d row-major matrix view.
  Eigen::Map<const RowMajorMatrixXf> matrix() const {
    return Eigen::Map<const RowMajorMatrixXf>(floats_.data(), static_cast<Eigen::Index>(count_),
                                              static_cast<Eigen::Index>(dim_));
  }

  /// Normalizes a raw query and converts it to a padded fixed-point row.
  EncodedQuery encode(std::span<const float> q) const;

  double inner_product_fixed(std::size_t i, std::span<const std::int16_t> q) const {
    return fixed_inner_product(fixed_row(i), q);
  }
  /// Float inner product accumulated in double precision; the exact
  /// reference used for ground truth and final ranking.
  double inner_product_float(std::size_t i, std::span<const float> q) const;

  std::size_t memory_bytes() const;

 private:
  void check_dimension(std::size_t dim);

  std::size_t dim_ = 0;
  std::size_t stride_ = 0;
  std::size_t count_ = 0;
  std::vector<float> floats_;
  FixedRow fixed_;
};

}  // namespace parlsh
