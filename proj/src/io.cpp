#include "parlsh/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace parlsh {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <typename T>
bool read_le(std::istream& in, T& value) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) return false;
  std::uint32_t raw = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) raw |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  std::memcpy(&value, &raw, sizeof(T));
  return true;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  std::uint32_t raw = 0;
  std::memcpy(&raw, &value, sizeof(T));
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(raw >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

}  // namespace

VectorFormat parse_vector_format(const std::string& name) {
  if (name == "fvecs") return VectorFormat::fvecs;
  if (name == "text" || name == "txt") return VectorFormat::text;
  throw std::invalid_argument("unknown vector format '" + name + "'");
}

VectorFormat guess_vector_format(const std::filesystem::path& path) {
  return path.extension() == ".fvecs" ? VectorFormat::fvecs : VectorFormat::text;
}

RowMajorMatrixXf read_fvecs(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<float> values;
  std::int32_t dim = 0;
  std::int32_t row_dim = 0;
  std::size_t rows = 0;
  while (read_le(in, row_dim)) {
    if (row_dim <= 0) throw std::runtime_error(path.string() + ": invalid dimension in fvecs record");
    if (rows == 0) dim = row_dim;
    if (row_dim != dim) throw std::runtime_error(path.string() + ": inconsistent dimensions");
    for (std::int32_t j = 0; j < dim; ++j) {
      float v = 0;
      if (!read_le(in, v)) throw std::runtime_error(path.string() + ": truncated fvecs record");
      values.push_back(v);
    }
    ++rows;
  }
  RowMajorMatrixXf out(static_cast<Eigen::Index>(rows), dim);
  if (rows > 0) std::memcpy(out.data(), values.data(), values.size() * sizeof(float));
  return out;
}

RowMajorMatrixXf read_text_vectors(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<float> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::size_t count = 0;
    float v = 0;
    while (fields >> v) {
      values.push_back(v);
      ++count;
    }
    if (!fields.eof()) throw std::runtime_error(path.string() + ": unparsable coordinate on line " + std::to_string(rows + 1));
    if (rows == 0) dim = count;
    if (count != dim) throw std::runtime_error(path.string() + ": inconsistent dimensions");
    ++rows;
  }
  RowMajorMatrixXf out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  if (rows > 0) std::memcpy(out.data(), values.data(), values.size() * sizeof(float));
  return out;
}

RowMajorMatrixXf read_vectors(const std::filesystem::path& path, VectorFormat format) {
  return format == VectorFormat::fvecs ? read_fvecs(path) : read_text_vectors(path);
}

void write_fvecs(const std::filesystem::path& path, const RowMajorMatrixXf& rows) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    write_le(out, static_cast<std::int32_t>(rows.cols()));
    for (Eigen::Index j = 0; j < rows.cols(); ++j) write_le(out, rows(i, j));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_text_vectors(const std::filesystem::path& path, const RowMajorMatrixXf& rows) {
  std::ofstream out = open_out(path);
  out.precision(9);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << (j ? " " : "") << rows(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::vector<std::uint32_t>> read_ivecs(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<std::uint32_t>> rows;
  std::int32_t count = 0;
  while (read_le(in, count)) {
    if (count < 0) throw std::runtime_error(path.string() + ": negative ivecs count");
    std::vector<std::uint32_t> row(static_cast<std::size_t>(count));
    for (auto& v : row) {
      if (!read_le(in, v)) throw std::runtime_error(path.string() + ": truncated ivecs record");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ivecs(const std::filesystem::path& path, const std::vector<std::vector<std::uint32_t>>& rows) {
  std::ofstream out = open_out(path);
  for (const auto& row : rows) {
    write_le(out, static_cast<std::int32_t>(row.size()));
    for (std::uint32_t v : row) write_le(out, v);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Dataset make_dataset(const RowMajorMatrixXf& rows) {
  Dataset data(static_cast<std::size_t>(rows.cols()));
  data.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) data.insert(rows.row(i).transpose());
  return data;
}

}  // namespace parlsh
