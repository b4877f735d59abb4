#pragma once

#include <filesystem>

#include "latq/types.hpp"

namespace latq::io {

// Binary matrix container, little-endian throughout:
//   bytes  0..7   magic "LATQMAT1"
//   bytes  8..11  dtype tag: "f64\0" or "i64\0"
//   bytes 12..19  row count,    uint64
//   bytes 20..27  column count, uint64
//   bytes 28..    rows*cols values in row-major order
// Rows and columns must be at least 1; f64 payloads must be finite.
// Readers throw IoError when the file cannot be opened and MalformedFile
// when the contents violate the layout above.

void write_matrix(const std::filesystem::path& path,
                  const Eigen::Ref<const Matrix>& m);
void write_matrix(const std::filesystem::path& path,
                  const Eigen::Ref<const IntMatrix>& m);

Matrix read_f64(const std::filesystem::path& path);
IntMatrix read_i64(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace latq::io
