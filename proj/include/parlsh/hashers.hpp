#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace parlsh {

/// Locality-sensitive hash families for angular distance.
enum class Family : std::uint8_t {
  hyperplane = 0,          ///< one random hyperplane, one bit
  cross_polytope = 1,      ///< Gaussian-matrix cross-polytope
  fht_cross_polytope = 2,  ///< cross-polytope with three sign-flip + Hadamard rounds
};

std::string to_string(Family family);
Family parse_family(const std::string& name);

/// Bits produced by one function: 1 for hyperplanes, ceil(log2(2d)) otherwise.
unsigned bits_per_hash(Family family, std::size_t dim);

/// Smallest power of two >= dim.
std::size_t hadamard_dimension(std::size_t dim);

/// A bit string of `length` meaningful low-order bits. When codes are
/// concatenated, earlier functions occupy the more significant positions.
struct HashCode {
  std::uint64_t bits = 0;
  unsigned length = 0;

  HashCode append(HashCode next) const {
    if (next.length >= 64) return next;
    return {(bits << next.length) | next.bits, length + next.length};
  }
  /// The leading `n` bits as a code of length n.
  HashCode prefix(unsigned n) const { return {n == 0 ? 0 : bits >> (length - n), n}; }
  friend bool operator==(const HashCode&, const HashCode&) = default;
};

/// In-place unnormalized Walsh-Hadamard transform; `values.size()` must be a power of two.
void fwht(std::span<float> values);

/// Cross-polytope code for a rotated vector: 2j + (1 if the coordinate is
/// negative), where j is the first index of maximum absolute value.
std::uint32_t cross_polytope_code(std::span<const float> rotated);

class HyperplaneHash {
 public:
  HyperplaneHash(std::size_t dim, std::uint64_t seed);
  explicit HyperplaneHash(Eigen::VectorXf direction) : direction_(std::move(direction)) {}

  HashCode operator()(const Eigen::Ref<const Eigen::VectorXf>& v) const {
    return {direction_.dot(v) >= 0.0f ? 1u : 0u, 1};
  }
  const Eigen::VectorXf& direction() const { return direction_; }

 private:
  Eigen::VectorXf direction_;
};

class CrossPolytopeHash {
 public:
  CrossPolytopeHash(std::size_t dim, std::uint64_t seed);
  explicit CrossPolytopeHash(Eigen::MatrixXf rotation);

  HashCode operator()(const Eigen::Ref<const Eigen::VectorXf>& v) const;
  const Eigen::MatrixXf& rotation() const { return rotation_; }
  unsigned bits() const { return bits_; }

 private:
  Eigen::MatrixXf rotation_;
  unsigned bits_;
};

class FhtCrossPolytopeHash {
 public:
  FhtCrossPolytopeHash(std::size_t dim, std::uint64_t seed);
  /// Each sign vector has the working (power-of-two) dimension.
  FhtCrossPolytopeHash(std::size_t dim, std::array<Eigen::VectorXf, 3> signs);

  HashCode operator()(const Eigen::Ref<const Eigen::VectorXf>& v) const;
  /// Applies the three rounds to `v`, zero-padded, and returns the rotated vector.
  Eigen::VectorXf rotate(const Eigen::Ref<const Eigen::VectorXf>& v) const;
  /// The code of the dim-length vector at `v`, with `work` (working
  /// dimension) as scratch space.
  std::uint32_t code(const float* v, std::span<float> work) const;
  unsigned bits() const { return bits_; }

 private:
  std::size_t dim_;
  std::array<Eigen::VectorXf, 3> signs_;
  unsigned bits_;
};

HashCode hp_hash(const HyperplaneHash& f, const Eigen::Ref<const Eigen::VectorXf>& v);
HashCode cp_hash(const CrossPolytopeHash& f, const Eigen::Ref<const Eigen::VectorXf>& v);
HashCode fht_cp_hash(const FhtCrossPolytopeHash& f, const Eigen::Ref<const Eigen::VectorXf>& v);

/// A numbered collection of functions from one family, evaluated together.
/// Function i is generated from `derive_seed(seed, i)`, so a bank is fully
/// determined by (family, dim, count, seed).
class HashBank {
 public:
  HashBank() = default;
  HashBank(Family family, std::size_t dim, std::size_t count, std::uint64_t seed);

  Family family() const { return family_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  unsigned bits() const { return bits_; }

  /// Writes the code of every function applied to `v` into `out[0..size())`.
  /// A non-empty `only` restricts evaluation to those functions; the other
  /// slots of `out` are left untouched.
  void evaluate(const Eigen::Ref<const Eigen::VectorXf>& v, std::span<std::uint16_t> out,
                std::span<const std::uint32_t> only = {}) const;
  /// Evaluates the functions on each row of `rows`; `out` is rows x size, row-major.
  void evaluate_rows(const Eigen::Ref<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& rows,
                     std::span<std::uint16_t> out, std::span<const std::uint32_t> only = {}) const;

  std::size_t memory_bytes() const;

 private:
  Family family_ = Family::hyperplane;
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::uint64_t seed_ = 0;
  unsigned bits_ = 1;
  // hyperplane: count x dim directions; cross-polytope: (count*dim) x dim stacked rotations.
  Eigen::MatrixXf projections_;
  std::vector<FhtCrossPolytopeHash> fht_;
};

/// Bytes needed to store one function of `family` in dimension `dim`.
std::size_t function_storage_bytes(Family family, std::size_t dim);

}  // namespace parlsh
