#include "parlsh/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace parlsh {

Accumulator::Accumulator(std::size_t k, std::size_t n) : k_(k), seen_((n + 63) / 64, 0) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  top_.reserve(2 * k);
  staging_.reserve(k);
}

bool Accumulator::offer(std::uint32_t index, double inner_product) {
  // The guard compares against the weakest retained entry rather than the
  // k-th, so points within fixed-point noise of the k-th survive until the
  // final exact re-ranking. The top k are the same either way.
  if (top_.size() >= 2 * k_ && closer(top_.back(), {index, inner_product})) return false;
  staging_.push_back({index, inner_product});
  if (staging_.size() >= k_) consolidate();
  return true;
}

void Accumulator::consolidate() {
  if (staging_.empty()) return;
  top_.insert(top_.end(), staging_.begin(), staging_.end());
  staging_.clear();
  std::sort(top_.begin(), top_.end(), closer);
  top_.erase(std::unique(top_.begin(), top_.end(), [](const Neighbor& a, const Neighbor& b) { return a.index == b.index; }),
             top_.end());
  if (top_.size() > 2 * k_) top_.resize(2 * k_);
}

double Accumulator::kth_inner_product() const {
  return have_k() ? top_[k_ - 1].inner_product : -std::numeric_limits<double>::infinity();
}

double current_pk(const Accumulator& acc, const Index& index, unsigned bits) {
  return index.model().prefix_probability(acc.kth_inner_product(), bits);
}

std::vector<std::uint32_t> QueryResult::indices() const {
  std::vector<std::uint32_t> out;
  out.reserve(neighbors.size());
  for (const auto& nb : neighbors) out.push_back(nb.index);
  return out;
}

QueryResult search(const Index& index, std::span<const float> q, std::size_t k, double delta,
                   const SearchOptions& options) {
  const Dataset& data = index.dataset();
  if (data.empty()) throw std::invalid_argument("search on an empty index");
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");

  QueryResult result;
  QueryDiagnostics& diag = result.diagnostics;
  const std::size_t n = data.size();
  if (k > n) {
    diag.k_exceeds_n = true;
    k = n;
  }

  const EncodedQuery query = data.encode(q);
  const HashSource& source = index.source();
  const SketchSet& sketches = index.sketches();
  const bool filtering = options.filter && sketches.sketch_count() > 0;
  SearchCursor cursor = index.open_cursor(query);
  FilterState filter(filtering ? sketches.sketch_point(query.unit) : std::vector<std::uint64_t>{}, options.epsilon);
  Accumulator acc(k, n);
  double filter_kth = std::numeric_limits<double>::quiet_NaN();
  double filter_pass = 1.0;
  bool filter_pass_stale = false;

  auto refresh_filter = [&] {
    if (!filtering || !acc.have_k()) return;
    const double kth = acc.kth_inner_product();
    if (kth != filter_kth) {
      filter.update(kth);
      filter_kth = kth;
      filter_pass_stale = true;
    }
  };

  auto compute = [&](std::uint32_t p) {
    const double ip = data.inner_product_fixed(p, query.fixed);
    acc.mark_seen(p);
    ++diag.distance_computations;
    acc.offer(p, ip);
    refresh_filter();
  };

  std::vector<std::uint32_t> batch;
  auto scan = [&](std::size_t j, unsigned depth) {
    batch.clear();
    cursor.retrieve_new(j, depth, batch);
    diag.candidates += batch.size();
    const unsigned slot = filtering ? select_sketch(static_cast<std::uint32_t>(j), sketches.sketch_count()) : 0;
    for (std::uint32_t p : batch) {
      if (acc.seen(p)) continue;
      if (filtering && !filter.passes(slot, sketches.word(p, slot))) {
        ++diag.filter_rejections;
        continue;
      }
      compute(p);
    }
  };

  auto stop_here = [&](unsigned depth, std::size_t scanned) {
    acc.consolidate();
    refresh_filter();
    if (filter_pass_stale) {
      filter_pass = pass_probability(filter_kth, filter.threshold());
      filter_pass_stale = false;
    }
    const StopState state{depth, scanned, acc.have_k(), acc.kth_inner_product(), delta, depth == 0, filter_pass};
    const bool stop = source.should_stop(state, index.model());
    if (options.observer) options.observer(SearchEvent{depth, scanned, acc, stop});
    if (stop) {
      diag.depth = depth;
      diag.repetitions_at_depth = scanned;
    }
    return stop;
  };

  bool stopped = false;
  const unsigned bits = source.bits_per_hash();
  const auto top_depth = static_cast<int>(index.code_bits());
  if (source.strategy() == Strategy::tensor) {
    const std::size_t side = source.tensor_side();
    for (int depth = top_depth; depth > 0 && !stopped; depth -= static_cast<int>(2 * bits)) {
      const auto d = static_cast<unsigned>(depth);
      // Round m adds every pair whose larger coordinate is m.
      for (std::size_t m = 0; m < side && !stopped; ++m) {
        for (std::size_t j = 0; j <= m; ++j) scan(source.tensor_repetition(j, m), d);
        for (std::size_t j = 0; j < m; ++j) scan(source.tensor_repetition(m, j), d);
        stopped = stop_here(d, m + 1);
      }
    }
  } else {
    const std::size_t L = cursor.repetitions();
    for (int depth = top_depth; depth > 0 && !stopped; --depth) {
      const auto d = static_cast<unsigned>(depth);
      for (std::size_t j = 0; j < L && !stopped; ++j) {
        scan(j, d);
        stopped = stop_here(d, j + 1);
      }
    }
  }

  if (!stopped) {
    // Prefix length 0 matches every point: finish with an unfiltered scan.
    diag.candidates += n;
    for (std::uint32_t p = 0; p < n; ++p) {
      if (!acc.seen(p)) compute(p);
    }
    stop_here(0, cursor.repetitions());
  }

  acc.consolidate();
  const std::span<const float> unit(query.unit.data(), data.dim());
  result.neighbors = acc.top();
  for (auto& nb : result.neighbors) nb.inner_product = data.inner_product_float(nb.index, unit);
  std::sort(result.neighbors.begin(), result.neighbors.end(), closer);
  if (result.neighbors.size() > k) result.neighbors.resize(k);
  return result;
}

QueryResult search_with_recall(const Index& index, std::span<const float> q, std::size_t k, double recall,
                               const SearchOptions& options) {
  if (!(recall > 0.0 && recall < 1.0)) throw std::invalid_argument("recall must lie in (0, 1)");
  return search(index, q, k, 1.0 - recall, options);
}

}  // namespace parlsh
