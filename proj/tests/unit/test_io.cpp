#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parlsh/io.hpp"

#include <filesystem>
#include <fstream>

#include <unistd.h>

using namespace parlsh;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("parlsh_io_" + std::to_string(::getpid()) + "_" + name);
}

RowMajorMatrixXf sample() {
  RowMajorMatrixXf m(3, 4);
  m << 1, 2, 3, 4, -0.5f, 0.25f, 1e-3f, 7, 0, 0, 0, 1;
  return m;
}

}  // namespace

TEST_CASE("fvecs round trip and byte layout") {
  const auto path = temp_file("a.fvecs");
  write_fvecs(path, sample());
  CHECK(fs::file_size(path) == 3 * (4 + 4 * 4));
  std::ifstream in(path, std::ios::binary);
  unsigned char head[8];
  in.read(reinterpret_cast<char*>(head), 8);
  CHECK(head[0] == 4);
  CHECK(head[1] == 0);
  CHECK(head[7] == 0x3f);  // 1.0f little-endian ends in 0x3f
  CHECK(read_fvecs(path) == sample());
  CHECK(read_vectors(path, guess_vector_format(path)) == sample());
  fs::remove(path);
}

TEST_CASE("text round trip skips blanks and comments") {
  const auto path = temp_file("a.txt");
  write_text_vectors(path, sample());
  CHECK(read_text_vectors(path) == sample());
  {
    std::ofstream out(path);
    out << "# header\n1 2\n\n  3\t4 \n";
  }
  const auto m = read_text_vectors(path);
  REQUIRE(m.rows() == 2);
  CHECK(m(1, 0) == 3.0f);
  CHECK(m(1, 1) == 4.0f);
  fs::remove(path);
}

TEST_CASE("malformed inputs are rejected") {
  const auto path = temp_file("bad.fvecs");
  {
    std::ofstream out(path, std::ios::binary);
    const std::int32_t d = 3;
    const float x = 1.0f;
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&x), 4);
  }
  CHECK_THROWS_AS(read_fvecs(path), std::runtime_error);
  const auto text = temp_file("bad.txt");
  {
    std::ofstream out(text);
    out << "1 2\n3\n";
  }
  CHECK_THROWS_AS(read_text_vectors(text), std::runtime_error);
  {
    std::ofstream out(text);
    out << "1 x\n";
  }
  CHECK_THROWS_AS(read_text_vectors(text), std::runtime_error);
  CHECK_THROWS_AS(read_fvecs(temp_file("missing.fvecs")), std::runtime_error);
  CHECK_THROWS_AS(parse_vector_format("csv"), std::invalid_argument);
  fs::remove(path);
  fs::remove(text);
}

TEST_CASE("ivecs round trip") {
  const auto path = temp_file("t.ivecs");
  const std::vector<std::vector<std::uint32_t>> rows{{1, 2, 3}, {}, {7}};
  write_ivecs(path, rows);
  CHECK(fs::file_size(path) == 4 * (1 + 3) + 4 + 4 * 2);
  CHECK(read_ivecs(path) == rows);
  fs::remove(path);
}

TEST_CASE("make_dataset normalizes every row") {
  const Dataset data = make_dataset(sample());
  CHECK(data.size() == 3);
  CHECK(data.dim() == 4);
  CHECK(data.float_row(2)[3] == 1.0f);
}
