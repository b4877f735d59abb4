#include "latq/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "latq/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; big-endian hosts are unsupported");

namespace latq::io {

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'A', 'T', 'Q', 'M', 'A', 'T', '1'};
constexpr std::array<char, 4> kTagF64 = {'f', '6', '4', '\0'};
constexpr std::array<char, 4> kTagI64 = {'i', '6', '4', '\0'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename Scalar, typename Derived>
void write_payload(const std::filesystem::path& path,
                   const std::array<char, 4>& tag,
                   const Eigen::MatrixBase<Derived>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out.write(kMagic.data(), kMagic.size());
  out.write(tag.data(), tag.size());
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const Scalar v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(Scalar));
    }
  }
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

struct Header {
  std::array<char, 4> tag;
  std::uint64_t rows, cols;
};

Header read_header(std::ifstream& in, const std::filesystem::path& path,
                   std::uintmax_t file_size) {
  std::array<char, 8> magic{};
  Header h{};
  in.read(magic.data(), magic.size());
  in.read(h.tag.data(), h.tag.size());
  in.read(reinterpret_cast<char*>(&h.rows), sizeof(h.rows));
  in.read(reinterpret_cast<char*>(&h.cols), sizeof(h.cols));
  if (!in || magic != kMagic) {
    throw MalformedFile("bad magic or truncated header: " + path.string());
  }
  if (h.tag != kTagF64 && h.tag != kTagI64) {
    throw MalformedFile("unknown dtype tag: " + path.string());
  }
  if (h.rows < 1 || h.cols < 1 || h.rows > (1u << 24) || h.cols > (1u << 24)) {
    throw MalformedFile("row/column counts out of range: " + path.string());
  }
  const std::uint64_t expected = 28 + h.rows * h.cols * 8;
  if (file_size != expected) {
    throw MalformedFile("payload size mismatch: " + path.string());
  }
  return h;
}

std::ifstream open_input(const std::filesystem::path& path,
                         std::uintmax_t& file_size) {
  std::error_code ec;
  file_size = std::filesystem::file_size(path, ec);
  std::ifstream in(path, std::ios::binary);
  if (ec || !in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  return in;
}

}  // namespace

void write_matrix(const std::filesystem::path& path,
                  const Eigen::Ref<const Matrix>& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("write_matrix: matrix must be non-empty");
  }
  require_finite(m, "write_matrix");
  write_payload<double>(path, kTagF64, m);
}

void write_matrix(const std::filesystem::path& path,
                  const Eigen::Ref<const IntMatrix>& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("write_matrix: matrix must be non-empty");
  }
  write_payload<std::int64_t>(path, kTagI64, m);
}

Matrix read_f64(const std::filesystem::path& path) {
  std::uintmax_t size = 0;
  std::ifstream in = open_input(path, size);
  const Header h = read_header(in, path, size);
  if (h.tag != kTagF64) {
    throw MalformedFile("expected f64 payload: " + path.string());
  }
  Matrix m(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(i, j) = v;
    }
  }
  if (!in) {
    throw MalformedFile("truncated payload: " + path.string());
  }
  if (!m.allFinite()) {
    throw MalformedFile("non-finite values in payload: " + path.string());
  }
  return m;
}

IntMatrix read_i64(const std::filesystem::path& path) {
  std::uintmax_t size = 0;
  std::ifstream in = open_input(path, size);
  const Header h = read_header(in, path, size);
  if (h.tag != kTagI64) {
    throw MalformedFile("expected i64 payload: " + path.string());
  }
  IntMatrix m(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::int64_t v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(i, j) = v;
    }
  }
  if (!in) {
    throw MalformedFile("truncated payload: " + path.string());
  }
  return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

}  // namespace latq::io
