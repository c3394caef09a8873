#include "parlsh/index.hpp"

#include "parlsh/rng.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace parlsh {

static_assert(std::endian::native == std::endian::little, "index files are written in host order");

namespace {

constexpr char kMagic[8] = {'P', 'L', 'S', 'H', 'I', 'D', 'X', '1'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  template <typename T>
  void put_array(const T* data, std::size_t count) {
    put<std::uint64_t>(count);
    out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get() {
    T value{};
    read(&value, sizeof(T));
    return value;
  }
  template <typename T>
  std::vector<T> get_array(std::uint64_t limit) {
    const auto count = get<std::uint64_t>();
    if (count > limit) throw FormatError("corrupt index file: array length " + std::to_string(count));
    std::vector<T> out(count);
    read(out.data(), count * sizeof(T));
    return out;
  }
  void read(void* dst, std::size_t bytes) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes) throw FormatError("truncated index file");
  }

 private:
  std::istream& in_;
};

constexpr std::uint64_t kMaxArray = std::uint64_t{1} << 40;

}  // namespace

void Index::serialize(std::ostream& out) const {
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.put(kFormatVersion);
  w.put(kRngVersion);

  w.put<std::uint64_t>(config_.memory_budget);
  w.put<std::uint32_t>(config_.prefix_bits);
  w.put<std::uint32_t>(config_.repetitions);
  w.put<std::uint32_t>(config_.segment_size);
  w.put<std::uint32_t>(config_.sketches);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(config_.family));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(config_.strategy));
  w.put<std::uint32_t>(config_.pool_bits);
  w.put<std::uint64_t>(config_.table_samples);
  w.put<double>(config_.recall);
  w.put<std::uint64_t>(seed_);

  w.put<std::uint64_t>(data_.size());
  w.put<std::uint64_t>(data_.dim());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const auto row = data_.float_row(i);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size_bytes()));
  }

  const CollisionTable& table = model_.table();
  w.put<std::uint8_t>(table.empty() ? 0 : 1);
  if (!table.empty()) {
    w.put<std::uint32_t>(table.max_bits());
    w.put<std::uint64_t>(table.samples());
    w.put_array(table.estimates().data(), table.estimates().size());
  }

  w.put<std::uint64_t>(repetitions_.size());
  for (const auto& rep : repetitions_) {
    w.put<std::uint32_t>(rep.code_bits());
    w.put_array(rep.entries().data(), rep.entries().size());
  }

  w.put<std::uint32_t>(sketches_.sketch_count());
  w.put<std::uint64_t>(sketches_.seed());
  w.put_array(sketches_.words().data(), sketches_.words().size());
  if (!out) throw std::runtime_error("failed to write index");
}

Index Index::deserialize(std::istream& in) {
  Reader r(in);
  char magic[sizeof(kMagic)];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not an index file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) throw FormatError("unsupported index version " + std::to_string(version));
  const auto rng_version = r.get<std::uint32_t>();
  if (rng_version != kRngVersion) throw FormatError("index written with random generator version " + std::to_string(rng_version));

  Index index;
  IndexConfig& c = index.config_;
  c.memory_budget = r.get<std::uint64_t>();
  c.prefix_bits = r.get<std::uint32_t>();
  c.repetitions = r.get<std::uint32_t>();
  c.segment_size = r.get<std::uint32_t>();
  c.sketches = r.get<std::uint32_t>();
  const auto family = r.get<std::uint8_t>();
  const auto strategy = r.get<std::uint8_t>();
  if (family > 2 || strategy > 2) throw FormatError("corrupt index file: unknown family or strategy");
  c.family = static_cast<Family>(family);
  c.strategy = static_cast<Strategy>(strategy);
  c.pool_bits = r.get<std::uint32_t>();
  c.table_samples = r.get<std::uint64_t>();
  c.recall = r.get<double>();
  index.seed_ = r.get<std::uint64_t>();

  const auto n = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint64_t>();
  if (dim == 0 || n > kMaxArray || dim > (1u << 20)) throw FormatError("corrupt index file: bad dataset shape");
  index.data_ = Dataset(dim);
  index.data_.reserve(n);
  std::vector<float> row(dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    r.read(row.data(), dim * sizeof(float));
    index.data_.insert_unit(row);
  }

  try {
    index.assemble_components();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("corrupt index file: ") + e.what());
  }

  if (r.get<std::uint8_t>() != 0) {
    const auto max_bits = r.get<std::uint32_t>();
    const auto samples = r.get<std::uint64_t>();
    auto estimates = r.get_array<double>(std::uint64_t{65} * CollisionTable::kBuckets);
    if (estimates.size() != (std::uint64_t{max_bits} + 1) * CollisionTable::kBuckets)
      throw FormatError("corrupt index file: collision table size");
    index.model_ = CollisionModel(c.family, dim, CollisionTable(c.family, dim, max_bits, samples, std::move(estimates)));
  } else {
    index.model_ = CollisionModel(c.family, dim);
  }

  const auto L = r.get<std::uint64_t>();
  if (L != c.repetitions) throw FormatError("corrupt index file: repetition count");
  index.repetitions_.reserve(L);
  for (std::uint64_t j = 0; j < L; ++j) {
    const auto code_bits = r.get<std::uint32_t>();
    auto entries = r.get_array<std::uint64_t>(kMaxArray);
    if (code_bits != index.code_bits_ || entries.size() != n) throw FormatError("corrupt index file: repetition shape");
    index.repetitions_.emplace_back(std::move(entries), code_bits);
  }

  const auto M = r.get<std::uint32_t>();
  const auto sketch_seed = r.get<std::uint64_t>();
  auto words = r.get_array<std::uint64_t>(kMaxArray);
  if (M != c.sketches || words.size() != n * M) throw FormatError("corrupt index file: sketch shape");
  index.sketches_ = SketchSet(dim, M, sketch_seed);
  index.sketches_.set_words(std::move(words));
  return index;
}

void Index::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  serialize(out);
}

Index Index::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return deserialize(in);
}

}  // namespace parlsh
