#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parlsh/dataset.hpp"
#include "parlsh/hashers.hpp"
#include "parlsh/rng.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace parlsh;
using testing::as_eigen;

namespace {

// Independent argmax-of-absolute-value encoding.
std::uint32_t reference_cp_code(const Eigen::VectorXf& r) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < r.size(); ++j)
    if (std::abs(r[j]) > std::abs(r[best])) best = j;
  return static_cast<std::uint32_t>(2 * best + (r[best] < 0 ? 1 : 0));
}

template <typename MakeHash>
double collision_rate(std::size_t draws, const std::vector<float>& a, const std::vector<float>& b, MakeHash make) {
  std::size_t hits = 0;
  for (std::size_t s = 0; s < draws; ++s) {
    const auto h = make(s);
    hits += h(as_eigen(a)) == h(as_eigen(b)) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace

TEST_CASE("bits per hash") {
  CHECK(bits_per_hash(Family::hyperplane, 100) == 1);
  CHECK(bits_per_hash(Family::cross_polytope, 4) == 3);
  CHECK(bits_per_hash(Family::cross_polytope, 100) == 8);
  CHECK(bits_per_hash(Family::fht_cross_polytope, 128) == 8);
  CHECK(bits_per_hash(Family::fht_cross_polytope, 129) == 9);
  CHECK(hadamard_dimension(100) == 128);
  CHECK(hadamard_dimension(128) == 128);
  CHECK(hadamard_dimension(1) == 1);
}

TEST_CASE("family names") {
  for (Family f : {Family::hyperplane, Family::cross_polytope, Family::fht_cross_polytope})
    CHECK(parse_family(to_string(f)) == f);
  CHECK_THROWS_AS(parse_family("minhash"), std::invalid_argument);
}

TEST_CASE("hash code concatenation and prefixes") {
  const HashCode a{0b101, 3};
  const HashCode b{0b01, 2};
  const HashCode ab = a.append(b);
  CHECK(ab.bits == 0b10101);
  CHECK(ab.length == 5);
  CHECK(ab.prefix(3) == a);
  CHECK(ab.prefix(0) == HashCode{0, 0});
  CHECK(HashCode{}.append(HashCode{~0ULL, 64}).bits == ~0ULL);
}

TEST_CASE("hyperplane hash") {
  const HyperplaneHash h(Eigen::Vector2f(1.0f, 0.0f));
  CHECK(h(Eigen::Vector2f(1.0f, 0.0f)).bits == 1);
  CHECK(h(Eigen::Vector2f(-1.0f, 0.0f)).bits == 0);
  CHECK(h(Eigen::Vector2f(0.0f, 1.0f)).bits == 1);  // zero inner product counts as non-negative
  CHECK(hp_hash(h, Eigen::Vector2f(1.0f, 0.0f)).length == 1);
}

TEST_CASE("hyperplane collision rate is 1 - theta / pi") {
  const std::size_t dim = 10;
  const double theta = std::numbers::pi / 3;
  const auto x = testing::basis(0, dim);
  const auto y = testing::at_inner_product(std::cos(theta), dim);
  const double rate = collision_rate(100000, x, y, [&](std::size_t s) { return HyperplaneHash(dim, derive_seed(11, s)); });
  CHECK(std::abs(rate - (1.0 - theta / std::numbers::pi)) <= 0.01);
}

TEST_CASE("cross-polytope hash with the identity rotation") {
  const CrossPolytopeHash h(Eigen::MatrixXf::Identity(4, 4));
  CHECK(h.bits() == 3);
  const HashCode e3 = cp_hash(h, as_eigen(testing::basis(3, 4)));
  CHECK(e3.bits == 6);
  CHECK(e3.length == 3);
  const Eigen::Vector4f minus_e0(-1.0f, 0.0f, 0.0f, 0.0f);
  CHECK(h(minus_e0).bits == 1);
  // Ties go to the lowest index.
  CHECK(h(Eigen::Vector4f(0.0f, 0.5f, -0.5f, 0.5f)).bits == 2);
}

TEST_CASE("cross-polytope code matches an independent argmax") {
  std::mt19937_64 gen(12);
  for (int t = 0; t < 500; ++t) {
    const CrossPolytopeHash h(20, derive_seed(12, t));
    const auto v = testing::random_unit(gen, 20);
    const Eigen::VectorXf rotated = h.rotation() * as_eigen(v);
    CHECK(h(as_eigen(v)).bits == reference_cp_code(rotated));
  }
}

TEST_CASE("fast Walsh-Hadamard transform") {
  std::vector<float> e0{1, 0, 0, 0};
  fwht(e0);
  CHECK(e0 == std::vector<float>{1, 1, 1, 1});
  std::vector<float> v{1, 2, 3, 4};
  fwht(v);
  CHECK(v == std::vector<float>{10, -2, -4, 0});
  fwht(v);  // H H = n I
  CHECK(v == std::vector<float>{4, 8, 12, 16});
}

TEST_CASE("Hadamard cross-polytope with all-positive signs maps e0 to axis 0") {
  const std::size_t dim = 6;
  std::array<Eigen::VectorXf, 3> signs;
  for (auto& s : signs) s = Eigen::VectorXf::Ones(8);
  const FhtCrossPolytopeHash h(dim, signs);
  const Eigen::VectorXf rotated = h.rotate(as_eigen(testing::basis(0, dim)));
  // H 1 = 8 e0 and H e0 = 1, so three rounds give 8 * (1, ..., 1): a full tie.
  CHECK(rotated == Eigen::VectorXf::Constant(8, 8.0f));
  CHECK(fht_cp_hash(h, as_eigen(testing::basis(0, dim))).bits == 0);
  CHECK(h.bits() == 4);
}

TEST_CASE("Hadamard cross-polytope replays deterministically") {
  std::mt19937_64 gen(13);
  const FhtCrossPolytopeHash h(100, 99);
  const FhtCrossPolytopeHash again(100, 99);
  std::vector<float> work(128);
  for (int t = 0; t < 10000; ++t) {
    const auto v = testing::random_unit(gen, 100);
    const HashCode c = h(as_eigen(v));
    CHECK(c == again(as_eigen(v)));
    CHECK(c.bits == h.code(v.data(), work));
    CHECK(c.bits < 256);
  }
}

TEST_CASE("Hadamard and exact cross-polytope collide at similar rates") {
  const std::size_t dim = 100;
  const std::size_t draws = 100000;
  std::mt19937_64 gen(14);
  std::normal_distribution<double> normal;
  // Exact CP is rotation invariant, so only two Gaussian columns matter for
  // x = e0 and y = alpha e0 + beta e1.
  const double alpha = 0.5, beta = std::sqrt(0.75);
  std::size_t exact_hits = 0;
  Eigen::VectorXf rx(dim), ry(dim);
  for (std::size_t s = 0; s < draws; ++s) {
    for (std::size_t r = 0; r < dim; ++r) {
      const double c0 = normal(gen), c1 = normal(gen);
      rx[static_cast<Eigen::Index>(r)] = static_cast<float>(c0);
      ry[static_cast<Eigen::Index>(r)] = static_cast<float>(alpha * c0 + beta * c1);
    }
    exact_hits += reference_cp_code(rx) == reference_cp_code(ry) ? 1 : 0;
  }
  const double exact = static_cast<double>(exact_hits) / draws;

  const auto x = testing::random_unit(gen, dim);
  auto z = testing::random_unit(gen, dim);
  const double xz = testing::dot(x, z);
  std::vector<float> y(dim);
  double norm = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    z[i] = static_cast<float>(z[i] - xz * x[i]);
    norm += static_cast<double>(z[i]) * z[i];
  }
  for (std::size_t i = 0; i < dim; ++i) y[i] = static_cast<float>(alpha * x[i] + beta * z[i] / std::sqrt(norm));
  const double fht =
      collision_rate(draws, x, y, [&](std::size_t s) { return FhtCrossPolytopeHash(dim, derive_seed(15, s)); });
  CAPTURE(exact);
  CAPTURE(fht);
  CHECK(std::abs(exact - fht) <= 0.05);
}

TEST_CASE("closer pairs collide more often under every family") {
  const std::size_t draws = 100000;
  for (std::size_t dim : {4u, 100u}) {
    // q, x and y span three coordinates, so a CP rotation only needs its
    // first three columns.
    const auto q = testing::basis(0, dim);
    const auto x = testing::at_inner_product(0.8, dim);
    std::vector<float> y(dim, 0.0f);
    y[0] = 0.3f;
    y[2] = static_cast<float>(std::sqrt(1.0 - 0.09));

    std::mt19937_64 gen(16 + dim);
    std::normal_distribution<float> normal;
    Eigen::MatrixXf rotation = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    auto make_cp = [&](std::size_t) {
      for (Eigen::Index r = 0; r < rotation.rows(); ++r)
        for (Eigen::Index c = 0; c < std::min<Eigen::Index>(3, rotation.cols()); ++c) rotation(r, c) = normal(gen);
      return CrossPolytopeHash(rotation);
    };
    auto make_hp = [&](std::size_t s) { return HyperplaneHash(dim, derive_seed(17, s)); };
    auto make_fht = [&](std::size_t s) { return FhtCrossPolytopeHash(dim, derive_seed(18, s)); };

    auto check = [&](const char* name, double near, double far) {
      CAPTURE(name);
      CAPTURE(dim);
      const double se = std::sqrt(testing::standard_error(near, draws) * testing::standard_error(near, draws) +
                                  testing::standard_error(far, draws) * testing::standard_error(far, draws));
      CHECK(near >= far - 3 * se);
      CHECK(near > far);
    };
    check("hp", collision_rate(draws, q, x, make_hp), collision_rate(draws, q, y, make_hp));
    check("cp", collision_rate(draws, q, x, make_cp), collision_rate(draws, q, y, make_cp));
    check("fht-cp", collision_rate(draws, q, x, make_fht), collision_rate(draws, q, y, make_fht));
  }
}

TEST_CASE("dropping trailing bits never lowers the collision rate") {
  const std::size_t dim = 100, draws = 10000;
  std::mt19937_64 gen(19);
  const auto a = testing::random_unit(gen, dim);
  const auto b = testing::random_unit(gen, dim);
  const unsigned bits = bits_per_hash(Family::fht_cross_polytope, dim);
  std::vector<std::size_t> hits(bits + 1, 0);
  for (std::size_t s = 0; s < draws; ++s) {
    const FhtCrossPolytopeHash h(dim, derive_seed(20, s));
    const HashCode ca = h(as_eigen(a)), cb = h(as_eigen(b));
    for (unsigned len = 0; len <= bits; ++len) hits[len] += ca.prefix(len) == cb.prefix(len) ? 1 : 0;
  }
  CHECK(hits[0] == draws);
  for (unsigned len = 1; len <= bits; ++len) CHECK(hits[len - 1] >= hits[len]);
}

TEST_CASE("a bank evaluates the same functions as individually seeded hashes") {
  std::mt19937_64 gen(21);
  const std::size_t dim = 24, count = 9;
  const std::uint64_t seed = 77;
  RowMajorMatrixXf rows(5, dim);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) rows.row(r) = as_eigen(testing::random_unit(gen, dim)).transpose();

  for (Family family : {Family::hyperplane, Family::cross_polytope, Family::fht_cross_polytope}) {
    CAPTURE(to_string(family));
    const HashBank bank(family, dim, count, seed);
    CHECK(bank.size() == count);
    CHECK(bank.memory_bytes() == count * function_storage_bytes(family, dim));
    std::vector<std::uint16_t> batch(static_cast<std::size_t>(rows.rows()) * count);
    bank.evaluate_rows(rows, batch);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      const Eigen::VectorXf v = rows.row(r).transpose();
      std::vector<std::uint16_t> single(count);
      bank.evaluate(v, single);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t expected = 0;
        const std::uint64_t s = derive_seed(seed, i);
        switch (family) {
          case Family::hyperplane: expected = HyperplaneHash(dim, s)(v).bits; break;
          case Family::cross_polytope: expected = CrossPolytopeHash(dim, s)(v).bits; break;
          case Family::fht_cross_polytope: expected = FhtCrossPolytopeHash(dim, s)(v).bits; break;
        }
        CHECK(single[i] == expected);
        CHECK(batch[static_cast<std::size_t>(r) * count + i] == expected);
      }
    }
    // A subset touches only its own slots.
    const std::vector<std::uint32_t> only{1, 4, 8};
    std::vector<std::uint16_t> partial(count, 0xffff);
    bank.evaluate(rows.row(0).transpose(), partial, only);
    for (std::size_t i = 0; i < count; ++i) {
      const bool selected = i == 1 || i == 4 || i == 8;
      CHECK((partial[i] == 0xffff) == !selected);
      if (selected) CHECK(partial[i] == batch[i]);
    }
  }
}
