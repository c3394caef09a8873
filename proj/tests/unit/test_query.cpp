#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parlsh/harness.hpp"
#include "parlsh/query.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

using namespace parlsh;

namespace {

Dataset random_dataset(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Dataset data(dim);
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) data.insert(testing::random_unit(gen, dim));
  return data;
}

IndexConfig fixed_config(unsigned repetitions, Family family = Family::fht_cross_polytope,
                         Strategy strategy = Strategy::pool) {
  IndexConfig c;
  c.repetitions = repetitions;
  c.family = family;
  c.strategy = strategy;
  c.table_samples = 200;
  return c;
}

// Unit vector at inner product `alpha` with e0, otherwise random.
std::vector<float> around_e0(double alpha, std::size_t dim, std::mt19937_64& gen) {
  auto r = testing::random_unit(gen, dim);
  r[0] = 0.0f;
  double norm = 0.0;
  for (float c : r) norm += static_cast<double>(c) * c;
  std::vector<float> v(dim);
  const double beta = std::sqrt(1.0 - alpha * alpha);
  for (std::size_t i = 1; i < dim; ++i) v[i] = static_cast<float>(beta * r[i] / std::sqrt(norm));
  v[0] = static_cast<float>(alpha);
  return v;
}

}  // namespace

TEST_CASE("consolidate keeps the best candidates") {
  SUBCASE("k = 1, a better staged point becomes the best") {
    Accumulator acc(1, 10);
    acc.offer(3, 0.2);
    CHECK(acc.have_k());
    CHECK(acc.kth_inner_product() == 0.2);
    acc.offer(7, 0.9);
    CHECK(acc.top().front().index == 7);
    CHECK(acc.kth_inner_product() == 0.9);
  }
  SUBCASE("duplicates across buffers count once") {
    Accumulator acc(3, 10);
    acc.offer(1, 0.5);
    acc.offer(2, 0.4);
    acc.offer(3, 0.3);
    acc.offer(1, 0.5);
    acc.offer(2, 0.4);
    acc.consolidate();
    REQUIRE(acc.top().size() == 3);
    CHECK(acc.top()[0].index == 1);
    CHECK(acc.top()[1].index == 2);
    CHECK(acc.top()[2].index == 3);
  }
  SUBCASE("ties are ordered by index") {
    Accumulator acc(2, 10);
    acc.offer(5, 0.5);
    acc.offer(2, 0.5);
    CHECK(acc.top()[0].index == 2);
    CHECK(acc.top()[1].index == 5);
  }
  SUBCASE("before k candidates the k-th inner product is -inf") {
    Accumulator acc(2, 10);
    acc.offer(1, 0.1);
    acc.consolidate();
    CHECK_FALSE(acc.have_k());
    CHECK(std::isinf(acc.kth_inner_product()));
  }
  SUBCASE("the seen set") {
    Accumulator acc(1, 130);
    CHECK_FALSE(acc.seen(129));
    acc.mark_seen(129);
    acc.mark_seen(64);
    CHECK(acc.seen(129));
    CHECK(acc.seen(64));
    CHECK_FALSE(acc.seen(63));
  }
}

TEST_CASE("consolidate-based selection matches a reference top-k") {
  std::mt19937_64 gen(80);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t k = 1 + gen() % 8;
    const std::size_t universe = 1 + gen() % 40;
    std::map<std::uint32_t, double> value;
    for (std::uint32_t i = 0; i < universe; ++i) value[i] = static_cast<double>(gen() % 20) / 20.0;  // many ties
    Accumulator acc(k, universe);
    const std::size_t offers = gen() % 80;
    std::vector<Neighbor> distinct;
    for (std::size_t t = 0; t < offers; ++t) {
      const auto i = static_cast<std::uint32_t>(gen() % universe);
      acc.offer(i, value[i]);
      if (std::none_of(distinct.begin(), distinct.end(), [&](const Neighbor& n) { return n.index == i; }))
        distinct.push_back({i, value[i]});
    }
    acc.consolidate();
    std::sort(distinct.begin(), distinct.end(), closer);
    distinct.resize(std::min(distinct.size(), k));
    std::vector<Neighbor> got(acc.top().begin(), acc.top().begin() + static_cast<std::ptrdiff_t>(std::min(k, acc.top().size())));
    REQUIRE(got == distinct);
    CHECK(acc.top().size() <= 2 * k);
  }
}

TEST_CASE("current collision bound") {
  const Index hp = Index::build(random_dataset(50, 8, 81), fixed_config(2, Family::hyperplane), 1);
  Accumulator acc(1, 50);
  acc.offer(0, 0.0);
  CHECK(current_pk(acc, hp, 2) == doctest::Approx(0.25));
  CHECK(current_pk(acc, hp, 1) == doctest::Approx(0.5));
  Accumulator exact(1, 50);
  exact.offer(0, 1.0);
  CHECK(current_pk(exact, hp, 24) == 1.0);

  const Index cp = Index::build(random_dataset(50, 8, 82), fixed_config(2), 1);
  Accumulator grid(1, 50);
  grid.offer(0, 0.5);
  for (unsigned b = 0; b <= cp.model().bits_per_hash(); ++b) CHECK(current_pk(grid, cp, b) == doctest::Approx(cp.model().table().lookup(0.5, b)));
}

TEST_CASE("three points on a circle") {
  Dataset data(2);
  for (double deg : {0.0, 100.0, 200.0}) {
    const double t = deg * std::numbers::pi / 180.0;
    data.insert(std::vector<float>{static_cast<float>(std::cos(t)), static_cast<float>(std::sin(t))});
  }
  const Index index = Index::build(std::move(data), fixed_config(4), 83);
  const double q30 = 30.0 * std::numbers::pi / 180.0;
  const std::vector<float> q{static_cast<float>(std::cos(q30)), static_cast<float>(std::sin(q30))};
  // Angular distances 30, 70 and 170 degrees.
  const QueryResult r = search_with_recall(index, q, 2, 0.9);
  CHECK(r.indices() == std::vector<std::uint32_t>{0, 1});
  CHECK(r.neighbors[0].distance() == doctest::Approx(q30).epsilon(1e-6));
  CHECK(r.neighbors[1].distance() == doctest::Approx(70.0 * std::numbers::pi / 180.0).epsilon(1e-6));
}

TEST_CASE("exhaustive searches equal brute force") {
  std::mt19937_64 gen(84);
  for (Family family : {Family::hyperplane, Family::fht_cross_polytope, Family::cross_polytope}) {
    for (Strategy strategy : {Strategy::independent, Strategy::pool, Strategy::tensor}) {
      CAPTURE(to_string(family));
      CAPTURE(to_string(strategy));
      const Index index = Index::build(random_dataset(1000, 12, 85), fixed_config(strategy == Strategy::tensor ? 4 : 2, family, strategy), 86);
      for (int t = 0; t < 40; ++t) {
        const auto q = testing::random_unit(gen, 12);
        const QueryResult r = search(index, q, 10, 1e-9);
        CHECK(r.neighbors == brute_force_knn(index.dataset(), q, 10));
        CHECK(r.diagnostics.depth == 0);
        CHECK(r.diagnostics.distance_computations == 1000);
      }
    }
  }
}

TEST_CASE("k larger than n returns every point, flagged") {
  const Index index = Index::build(random_dataset(5, 6, 87), fixed_config(3), 88);
  std::mt19937_64 gen(89);
  const auto q = testing::random_unit(gen, 6);
  const QueryResult r = search_with_recall(index, q, 10, 0.5);
  CHECK(r.diagnostics.k_exceeds_n);
  CHECK(r.neighbors == brute_force_knn(index.dataset(), q, 5));
}

TEST_CASE("argument errors") {
  const Index empty;
  CHECK_THROWS_AS(search(empty, std::vector<float>{1.0f}, 1, 0.1), std::invalid_argument);
  const Index index = Index::build(random_dataset(20, 4, 90), fixed_config(2), 91);
  const std::vector<float> q{1, 0, 0, 0};
  CHECK_THROWS_AS(search(index, q, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(search(index, q, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(search(index, q, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(search(index, std::vector<float>{0, 0, 0, 0}, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(search(index, std::vector<float>{1, 0}, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(search_with_recall(index, q, 1, 1.0), std::invalid_argument);
}

TEST_CASE("an unbounded threshold slack is the same as no filter") {
  const Index index = Index::build(random_dataset(3000, 16, 92), fixed_config(16), 93);
  std::mt19937_64 gen(94);
  SearchOptions open;
  open.epsilon = std::numeric_limits<double>::infinity();
  SearchOptions off;
  off.filter = false;
  for (int t = 0; t < 50; ++t) {
    const auto q = testing::random_unit(gen, 16);
    const QueryResult a = search_with_recall(index, q, 10, 0.8, open);
    const QueryResult b = search_with_recall(index, q, 10, 0.8, off);
    CHECK(a.neighbors == b.neighbors);
    CHECK(a.diagnostics.distance_computations == b.diagnostics.distance_computations);
    CHECK(a.diagnostics.depth == b.diagnostics.depth);
    CHECK(a.diagnostics.filter_rejections == 0);
  }
}

TEST_CASE("results are distinct, ordered, and never recomputed") {
  const Index index = Index::build(random_dataset(4000, 24, 95), fixed_config(24), 96);
  std::mt19937_64 gen(97);
  for (int t = 0; t < 100; ++t) {
    const auto q = testing::random_unit(gen, 24);
    const QueryResult r = search_with_recall(index, q, 10, 0.7);
    REQUIRE(r.neighbors.size() == 10);
    for (std::size_t i = 1; i < r.neighbors.size(); ++i) CHECK(closer(r.neighbors[i - 1], r.neighbors[i]));
    CHECK(r.diagnostics.distance_computations <= 4000);
    CHECK(r.diagnostics.distance_computations + r.diagnostics.filter_rejections <= r.diagnostics.candidates);
  }
}

TEST_CASE("the k-th candidate never beats the true k-th neighbour") {
  const std::size_t n = 2000, dim = 20, k = 10;
  for (Strategy strategy : {Strategy::pool, Strategy::independent, Strategy::tensor}) {
    CAPTURE(to_string(strategy));
    const Index index = Index::build(random_dataset(n, dim, 98), fixed_config(16, Family::fht_cross_polytope, strategy), 99);
    std::mt19937_64 gen(100);
    const int queries = strategy == Strategy::pool ? 1000 : 200;
    std::size_t events = 0;
    for (int t = 0; t < queries; ++t) {
      const auto q = testing::random_unit(gen, dim);
      const double true_kth = brute_force_knn(index.dataset(), q, k).back().inner_product;
      SearchOptions options;
      options.observer = [&](const SearchEvent& e) {
        ++events;
        if (!e.accumulator.have_k()) return;
        // Fixed-point noise is below 1e-3 for unit vectors.
        CHECK(e.accumulator.kth_inner_product() <= true_kth + 1e-3);
        CHECK(e.accumulator.staging().empty());
      };
      search_with_recall(index, q, k, 0.9, options);
    }
    CHECK(events >= static_cast<std::size_t>(queries));
  }
}

TEST_CASE("planted neighbour is found with probability at least 1 - delta") {
  // One point at inner product 0.8 with the query, the rest at 0.2.
  const std::size_t n = 100, dim = 16, trials = 2000;
  const double delta = 0.1;
  std::mt19937_64 gen(101);
  const auto q = testing::basis(0, dim);
  Dataset data(dim);
  for (std::size_t i = 0; i + 1 < n; ++i) data.insert(around_e0(0.2, dim, gen));
  data.insert(around_e0(0.8, dim, gen));
  std::size_t found = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Index index = Index::build(data, fixed_config(30, Family::hyperplane, Strategy::independent), 1000 + t);
    const QueryResult r = search(index, q, 1, delta);
    found += r.neighbors.front().index == n - 1 ? 1 : 0;
  }
  const double rate = static_cast<double>(found) / trials;
  CAPTURE(rate);
  CHECK(rate >= 1.0 - delta - 0.02);
}

TEST_CASE("a query equal to a data point finds it") {
  const std::size_t trials = 500;
  const Dataset data = random_dataset(500, 16, 102);
  const auto row = data.float_row(123);
  const std::vector<float> q(row.begin(), row.end());
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Index index = Index::build(data, fixed_config(8), 2000 + t);
    hits += search(index, q, 1, 0.1).neighbors.front().index == 123 ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / trials >= 0.88);
}
