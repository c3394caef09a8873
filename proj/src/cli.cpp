#include "parlsh/cli.hpp"

#include "parlsh/harness.hpp"
#include "parlsh/index.hpp"
#include "parlsh/io.hpp"
#include "parlsh/query.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

namespace parlsh {
namespace {

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

RowMajorMatrixXf load_vectors(const std::string& path, const std::string& format) {
  return read_vectors(path, format.empty() ? guess_vector_format(path) : parse_vector_format(format));
}

struct BuildArgs {
  std::string input, format, out, family = "fht-cp", strategy = "pool";
  std::uint64_t space = 0;
  double recall = 0.9;
  std::uint64_t seed = 1;
  unsigned repetitions = 0;
  unsigned sketches = 32;
  unsigned segment = 12;
  unsigned prefix_bits = 24;
};

struct QueryArgs {
  std::string index, queries, truth, report;
  std::size_t k = 10;
  std::optional<double> recall;
  bool no_filter = false;
};

struct BenchArgs {
  std::string index, queries, truth;
  std::size_t k = 10;
  std::vector<double> targets{0.1, 0.2, 0.5, 0.7, 0.9, 0.95};
};

struct SyntheticArgs {
  SyntheticSpec spec;
  std::string out;
};

struct TruthArgs {
  std::string input, queries, out;
  std::size_t k = 10;
};

int do_build(const BuildArgs& a, std::ostream& out) {
  const Dataset data = make_dataset(load_vectors(a.input, a.format));
  IndexConfig config;
  config.memory_budget = a.space;
  config.recall = a.recall;
  config.family = parse_family(a.family);
  config.strategy = parse_strategy(a.strategy);
  config.repetitions = a.repetitions;
  config.sketches = a.sketches;
  config.segment_size = a.segment;
  config.prefix_bits = a.prefix_bits;
  const auto start = std::chrono::steady_clock::now();
  const Index index = Index::build(data, config, a.seed);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  index.save(a.out);
  out << "points=" << index.dataset().size() << " dim=" << index.dataset().dim()
      << " repetitions=" << index.config().repetitions << " code_bits=" << index.code_bits()
      << " bytes=" << index.memory_bytes() << " build_seconds=" << fixed6(seconds) << "\n";
  return 0;
}

int do_query(const QueryArgs& a, std::ostream& out) {
  const Index index = Index::load(a.index);
  const RowMajorMatrixXf queries = load_vectors(a.queries, "");
  const double target = a.recall.value_or(index.config().recall);
  GroundTruth truth;
  if (!a.truth.empty()) {
    truth = read_ivecs(a.truth);
    if (truth.size() < static_cast<std::size_t>(queries.rows())) throw std::runtime_error("truth file has too few rows");
  }
  SearchOptions options;
  options.filter = !a.no_filter;

  std::ofstream report(a.report);
  if (!report) throw std::runtime_error("cannot open " + a.report + " for writing");
  report << "query" << (truth.empty() ? "" : ",recall") << ",depth,repetitions,candidates,distance_computations\n";

  double recall_sum = 0.0;
  double seconds = 0.0;
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    const std::span<const float> q(queries.row(i).data(), static_cast<std::size_t>(queries.cols()));
    const auto start = std::chrono::steady_clock::now();
    const QueryResult result = search_with_recall(index, q, a.k, target, options);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto& d = result.diagnostics;
    report << i;
    if (!truth.empty()) {
      const double r = recall(result.indices(), truth[static_cast<std::size_t>(i)], a.k);
      recall_sum += r;
      report << "," << fixed6(r);
    }
    report << "," << d.depth << "," << d.repetitions_at_depth << "," << d.candidates << "," << d.distance_computations
           << "\n";
  }
  const auto m = static_cast<double>(queries.rows());
  if (!truth.empty()) {
    report << "# mean_recall=" << fixed6(m > 0 ? recall_sum / m : 0.0) << "\n";
    out << "mean_recall=" << fixed6(m > 0 ? recall_sum / m : 0.0) << " ";
  }
  out << "queries=" << queries.rows() << " qps=" << fixed6(seconds > 0 ? m / seconds : 0.0) << "\n";
  return 0;
}

int do_bench(const BenchArgs& a, std::ostream& out) {
  const Index index = Index::load(a.index);
  const RowMajorMatrixXf queries = load_vectors(a.queries, "");
  const GroundTruth truth =
      a.truth.empty() ? brute_force_batch(index.dataset(), queries, a.k) : read_ivecs(a.truth);
  if (truth.size() < static_cast<std::size_t>(queries.rows())) throw std::runtime_error("truth file has too few rows");
  out << "target,mean_recall,qps,mean_distance_computations\n";
  for (double target : a.targets) {
    double recall_sum = 0.0, seconds = 0.0, computations = 0.0;
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
      const std::span<const float> q(queries.row(i).data(), static_cast<std::size_t>(queries.cols()));
      const auto start = std::chrono::steady_clock::now();
      const QueryResult result = search_with_recall(index, q, a.k, target);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      recall_sum += recall(result.indices(), truth[static_cast<std::size_t>(i)], a.k);
      computations += static_cast<double>(result.diagnostics.distance_computations);
    }
    const auto m = static_cast<double>(std::max<Eigen::Index>(1, queries.rows()));
    out << fixed6(target) << "," << fixed6(recall_sum / m) << "," << fixed6(seconds > 0 ? m / seconds : 0.0) << ","
        << fixed6(computations / m) << "\n";
  }
  return 0;
}

int do_synthetic(const SyntheticArgs& a, std::ostream& out) {
  const SyntheticData data = gen_synthetic(a.spec);
  write_fvecs(a.out + ".data.fvecs", data.points);
  write_fvecs(a.out + ".queries.fvecs", data.queries);
  out << "wrote " << a.out << ".data.fvecs and " << a.out << ".queries.fvecs\n";
  return 0;
}

int do_truth(const TruthArgs& a, std::ostream& out) {
  const Dataset data = make_dataset(load_vectors(a.input, ""));
  const RowMajorMatrixXf queries = load_vectors(a.queries, "");
  write_ivecs(a.out, brute_force_batch(data, queries, a.k));
  out << "wrote " << queries.rows() << " rows to " << a.out << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parameterless LSH index for angular k-nearest-neighbour search"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build an index and write it to disk");
  b->add_option("--input", build.input, "Data vectors")->required();
  b->add_option("--format", build.format, "fvecs or text (default: from extension)")
      ->check(CLI::IsMember({"fvecs", "text"}));
  b->add_option("--space", build.space, "Memory budget in bytes")->required();
  b->add_option("--recall", build.recall, "Default target recall for queries")->check(CLI::Range(0.0, 1.0));
  b->add_option("--family", build.family, "hp, cp or fht-cp")->check(CLI::IsMember({"hp", "cp", "fht-cp"}));
  b->add_option("--strategy", build.strategy, "independent, pool or tensor")
      ->check(CLI::IsMember({"independent", "pool", "tensor"}));
  b->add_option("--seed", build.seed, "Random seed");
  b->add_option("--repetitions", build.repetitions, "Fix L instead of deriving it from --space");
  b->add_option("--sketches", build.sketches, "Sketches per point");
  b->add_option("--segment", build.segment, "Segment size B")->check(CLI::PositiveNumber);
  b->add_option("--prefix-bits", build.prefix_bits, "Maximum prefix length in bits")->check(CLI::Range(1, 63));
  b->add_option("--out", build.out, "Index file")->required();

  QueryArgs query;
  auto* q = app.add_subcommand("query", "Answer queries and write a per-query report");
  q->add_option("--index", query.index)->required();
  q->add_option("--queries", query.queries)->required();
  q->add_option("--k", query.k)->check(CLI::PositiveNumber);
  q->add_option("--recall", query.recall, "Target recall (default: the index's)")->check(CLI::Range(0.0, 1.0));
  q->add_option("--truth", query.truth, "ivecs ground truth; enables the recall column");
  q->add_option("--report", query.report, "CSV report")->required();
  q->add_flag("--no-filter", query.no_filter, "Disable sketch filtering");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Mean recall and QPS across target recalls");
  be->add_option("--index", bench.index)->required();
  be->add_option("--queries", bench.queries)->required();
  be->add_option("--truth", bench.truth, "ivecs ground truth (default: computed)");
  be->add_option("--k", bench.k)->check(CLI::PositiveNumber);
  be->add_option("--targets", bench.targets, "Target recalls");

  SyntheticArgs synthetic;
  auto* g = app.add_subcommand("gen-synthetic", "Write the hard synthetic instance");
  g->add_option("--n", synthetic.spec.n, "Points")->required();
  g->add_option("--d", synthetic.spec.d, "Block dimension (vectors have 3d coordinates)")->required();
  g->add_option("--m", synthetic.spec.m, "Queries")->required();
  g->add_option("--seed", synthetic.spec.seed);
  g->add_option("--out", synthetic.out, "Output prefix")->required();

  TruthArgs truth;
  auto* t = app.add_subcommand("truth", "Exact k nearest neighbours as ivecs");
  t->add_option("--input", truth.input)->required();
  t->add_option("--queries", truth.queries)->required();
  t->add_option("--k", truth.k)->check(CLI::PositiveNumber);
  t->add_option("--out", truth.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*b) return do_build(build, out);
    if (*q) return do_query(query, out);
    if (*be) return do_bench(bench, out);
    if (*g) return do_synthetic(synthetic, out);
    if (*t) return do_truth(truth, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace parlsh
