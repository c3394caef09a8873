#pragma once

#include "parlsh/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace parlsh {

/// Vector file layouts understood by the readers.
///
/// fvecs: little-endian; per vector a 4-byte signed dimension d followed by
///        d 4-byte IEEE floats. Every vector in a file must share d.
/// text:  one vector per line, coordinates separated by whitespace. Blank
///        lines and lines starting with '#' are skipped.
enum class VectorFormat { fvecs, text };

VectorFormat parse_vector_format(const std::string& name);
/// `fvecs` for a ".fvecs" extension, `text` otherwise.
VectorFormat guess_vector_format(const std::filesystem::path& path);

RowMajorMatrixXf read_fvecs(const std::filesystem::path& path);
RowMajorMatrixXf read_text_vectors(const std::filesystem::path& path);
RowMajorMatrixXf read_vectors(const std::filesystem::path& path, VectorFormat format);

void write_fvecs(const std::filesystem::path& path, const RowMajorMatrixXf& rows);
void write_text_vectors(const std::filesystem::path& path, const RowMajorMatrixXf& rows);

/// ivecs: per row a 4-byte count k followed by k 4-byte indices.
std::vector<std::vector<std::uint32_t>> read_ivecs(const std::filesystem::path& path);
void write_ivecs(const std::filesystem::path& path, const std::vector<std::vector<std::uint32_t>>& rows);

/// Inserts every row of `rows` (normalizing each) into a fresh dataset.
Dataset make_dataset(const RowMajorMatrixXf& rows);

}  // namespace parlsh
