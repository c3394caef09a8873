#include "parlsh/hashers.hpp"

#include "parlsh/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace parlsh {

std::string to_string(Family family) {
  switch (family) {
    case Family::hyperplane: return "hp";
    case Family::cross_polytope: return "cp";
    case Family::fht_cross_polytope: return "fht-cp";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  if (name == "hp") return Family::hyperplane;
  if (name == "cp") return Family::cross_polytope;
  if (name == "fht-cp") return Family::fht_cross_polytope;
  throw std::invalid_argument("unknown hash family '" + name + "'");
}

unsigned bits_per_hash(Family family, std::size_t dim) {
  if (family == Family::hyperplane) return 1;
  unsigned bits = 0;
  while ((std::size_t{1} << bits) < 2 * dim) ++bits;
  return bits;
}

std::size_t hadamard_dimension(std::size_t dim) {
  std::size_t n = 1;
  while (n < dim) n <<= 1;
  return n;
}

void fwht(std::span<float> values) {
  const std::size_t n = values.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const float x = values[j];
        const float y = values[j + h];
        values[j] = x + y;
        values[j + h] = x - y;
      }
    }
  }
}

std::uint32_t cross_polytope_code(std::span<const float> rotated) {
  std::size_t best = 0;
  float best_abs = -1.0f;
  for (std::size_t j = 0; j < rotated.size(); ++j) {
    const float a = std::fabs(rotated[j]);
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  return static_cast<std::uint32_t>(2 * best + (rotated[best] < 0.0f ? 1 : 0));
}

HyperplaneHash::HyperplaneHash(std::size_t dim, std::uint64_t seed) : direction_(static_cast<Eigen::Index>(dim)) {
  Rng rng(seed);
  for (Eigen::Index i = 0; i < direction_.size(); ++i) direction_[i] = static_cast<float>(rng.normal());
}

CrossPolytopeHash::CrossPolytopeHash(std::size_t dim, std::uint64_t seed)
    : rotation_(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)),
      bits_(bits_per_hash(Family::cross_polytope, dim)) {
  Rng rng(seed);
  for (Eigen::Index r = 0; r < rotation_.rows(); ++r)
    for (Eigen::Index c = 0; c < rotation_.cols(); ++c) rotation_(r, c) = static_cast<float>(rng.normal());
}

CrossPolytopeHash::CrossPolytopeHash(Eigen::MatrixXf rotation)
    : rotation_(std::move(rotation)),
      bits_(bits_per_hash(Family::cross_polytope, static_cast<std::size_t>(rotation_.rows()))) {}

HashCode CrossPolytopeHash::operator()(const Eigen::Ref<const Eigen::VectorXf>& v) const {
  const Eigen::VectorXf rotated = rotation_ * v;
  return {cross_polytope_code({rotated.data(), static_cast<std::size_t>(rotated.size())}), bits_};
}

FhtCrossPolytopeHash::FhtCrossPolytopeHash(std::size_t dim, std::uint64_t seed)
    : dim_(dim), bits_(bits_per_hash(Family::fht_cross_polytope, dim)) {
  const auto working = static_cast<Eigen::Index>(hadamard_dimension(dim));
  Rng rng(seed);
  for (auto& s : signs_) {
    s.resize(working);
    for (Eigen::Index i = 0; i < working; ++i) s[i] = rng.below(2) ? 1.0f : -1.0f;
  }
}

FhtCrossPolytopeHash::FhtCrossPolytopeHash(std::size_t dim, std::array<Eigen::VectorXf, 3> signs)
    : dim_(dim), signs_(std::move(signs)), bits_(bits_per_hash(Family::fht_cross_polytope, dim)) {
  for (const auto& s : signs_) {
    if (static_cast<std::size_t>(s.size()) != hadamard_dimension(dim))
      throw std::invalid_argument("sign vector must have the Hadamard working dimension");
  }
}

Eigen::VectorXf FhtCrossPolytopeHash::rotate(const Eigen::Ref<const Eigen::VectorXf>& v) const {
  Eigen::VectorXf x = Eigen::VectorXf::Zero(signs_[0].size());
  x.head(v.size()) = v;
  for (const auto& s : signs_) {
    x.array() *= s.array();
    fwht({x.data(), static_cast<std::size_t>(x.size())});
  }
  return x;
}

HashCode FhtCrossPolytopeHash::operator()(const Eigen::Ref<const Eigen::VectorXf>& v) const {
  const Eigen::VectorXf rotated = rotate(v);
  return {cross_polytope_code({rotated.data(), static_cast<std::size_t>(rotated.size())}), bits_};
}

std::uint32_t FhtCrossPolytopeHash::code(const float* v, std::span<float> work) const {
  std::copy(v, v + dim_, work.begin());
  std::fill(work.begin() + static_cast<std::ptrdiff_t>(dim_), work.end(), 0.0f);
  for (const auto& s : signs_) {
    const float* sign = s.data();
    for (std::size_t i = 0; i < work.size(); ++i) work[i] *= sign[i];
    fwht(work);
  }
  return cross_polytope_code(work);
}

HashCode hp_hash(const HyperplaneHash& f, const Eigen::Ref<const Eigen::VectorXf>& v) { return f(v); }
HashCode cp_hash(const CrossPolytopeHash& f, const Eigen::Ref<const Eigen::VectorXf>& v) { return f(v); }
HashCode fht_cp_hash(const FhtCrossPolytopeHash& f, const Eigen::Ref<const Eigen::VectorXf>& v) { return f(v); }

HashBank::HashBank(Family family, std::size_t dim, std::size_t count, std::uint64_t seed)
    : family_(family), dim_(dim), count_(count), seed_(seed), bits_(bits_per_hash(family, dim)) {
  const auto d = static_cast<Eigen::Index>(dim);
  switch (family) {
    case Family::hyperplane:
      projections_.resize(static_cast<Eigen::Index>(count), d);
      for (std::size_t i = 0; i < count; ++i)
        projections_.row(static_cast<Eigen::Index>(i)) = HyperplaneHash(dim, derive_seed(seed, i)).direction().transpose();
      break;
    case Family::cross_polytope:
      projections_.resize(static_cast<Eigen::Index>(count) * d, d);
      for (std::size_t i = 0; i < count; ++i)
        projections_.middleRows(static_cast<Eigen::Index>(i) * d, d) = CrossPolytopeHash(dim, derive_seed(seed, i)).rotation();
      break;
    case Family::fht_cross_polytope:
      fht_.reserve(count);
      for (std::size_t i = 0; i < count; ++i) fht_.emplace_back(dim, derive_seed(seed, i));
      break;
  }
}

void HashBank::evaluate(const Eigen::Ref<const Eigen::VectorXf>& v, std::span<std::uint16_t> out,
                        std::span<const std::uint32_t> only) const {
  const Eigen::RowVectorXf row = v.transpose();
  evaluate_rows(row, out, only);
}

void HashBank::evaluate_rows(
    const Eigen::Ref<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& rows,
    std::span<std::uint16_t> out, std::span<const std::uint32_t> only) const {
  const Eigen::Index n = rows.rows();
  std::vector<std::uint32_t> all;
  if (only.empty()) {
    all.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) all[i] = static_cast<std::uint32_t>(i);
    only = all;
  }
  if (family_ == Family::fht_cross_polytope) {
    std::vector<float> work(hadamard_dimension(dim_));
    for (Eigen::Index r = 0; r < n; ++r) {
      const float* v = rows.row(r).data();
      std::uint16_t* dst = out.data() + static_cast<std::size_t>(r) * count_;
      for (std::uint32_t f : only) dst[f] = static_cast<std::uint16_t>(fht_[f].code(v, work));
    }
    return;
  }
  // Batched products: one chunk of rows against every selected projection.
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::Index block = family_ == Family::hyperplane ? 1 : d;
  Eigen::MatrixXf gathered;
  const Eigen::MatrixXf* projections = &projections_;
  if (only.size() != count_) {
    gathered.resize(static_cast<Eigen::Index>(only.size()) * block, d);
    for (std::size_t t = 0; t < only.size(); ++t)
      gathered.middleRows(static_cast<Eigen::Index>(t) * block, block) =
          projections_.middleRows(static_cast<Eigen::Index>(only[t]) * block, block);
    projections = &gathered;
  }
  constexpr Eigen::Index kChunk = 256;
  Eigen::MatrixXf proj;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    proj.noalias() = *projections * rows.middleRows(start, len).transpose();
    for (Eigen::Index r = 0; r < len; ++r) {
      std::uint16_t* dst = out.data() + static_cast<std::size_t>(start + r) * count_;
      const float* col = proj.col(r).data();
      if (family_ == Family::hyperplane) {
        for (std::size_t t = 0; t < only.size(); ++t) dst[only[t]] = col[t] >= 0.0f ? 1 : 0;
      } else {
        for (std::size_t t = 0; t < only.size(); ++t)
          dst[only[t]] = static_cast<std::uint16_t>(cross_polytope_code({col + t * dim_, dim_}));
      }
    }
  }
}

std::size_t function_storage_bytes(Family family, std::size_t dim) {
  switch (family) {
    case Family::hyperplane: return dim * sizeof(float);
    case Family::cross_polytope: return dim * dim * sizeof(float);
    case Family::fht_cross_polytope: return 3 * hadamard_dimension(dim) * sizeof(float);
  }
  return 0;
}

std::size_t HashBank::memory_bytes() const { return count_ * function_storage_bytes(family_, dim_); }

}  // namespace parlsh
