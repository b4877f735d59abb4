#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "latq/types.hpp"

namespace latq::linalg {

// Bijection on {0..size-1}. map()[pos] is the source index placed at
// position pos, i.e. the matrix form T has T(map[pos], pos) = 1.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<Index> map);  // validates bijectivity

  static Permutation identity(Index n);
  static Permutation reversal(Index n);
  // Accepts indices in {1..n}, as stored in permutation files.
  static Permutation from_one_based(const std::vector<std::int64_t>& map);

  Index size() const { return static_cast<Index>(map_.size()); }
  Index operator[](Index pos) const { return map_[static_cast<size_t>(pos)]; }
  const std::vector<Index>& map() const { return map_; }

  Permutation inverse() const;
  // Visits the same positions in the opposite order: the matrix form is
  // this one times the reversal.
  Permutation composed_with_reversal() const;
  bool is_identity() const;
  std::vector<std::int64_t> one_based() const;

  bool operator==(const Permutation& other) const { return map_ == other.map_; }

 private:
  std::vector<Index> map_;
};

enum class Axis { Rows, Cols };
enum class Direction { Forward, Inverse };

// Moves rows or columns per the permutation. Forward multiplies by the
// permutation matrix on the natural side (left for rows, right for columns),
// Inverse by its inverse. Entries move without arithmetic, so round trips
// are bit-exact.
template <typename Derived>
typename Derived::PlainObject apply_permutation(
    const Eigen::MatrixBase<Derived>& m, const Permutation& perm, Axis axis,
    Direction dir) {
  const Index extent = axis == Axis::Rows ? m.rows() : m.cols();
  if (perm.size() != extent) {
    throw std::invalid_argument("apply_permutation: size mismatch");
  }
  typename Derived::PlainObject out(m.rows(), m.cols());
  for (Index pos = 0; pos < extent; ++pos) {
    const Index src = perm[pos];
    if (axis == Axis::Rows) {
      if (dir == Direction::Forward) {
        out.row(src) = m.row(pos);
      } else {
        out.row(pos) = m.row(src);
      }
    } else {
      if (dir == Direction::Forward) {
        out.col(pos) = m.col(src);
      } else {
        out.col(src) = m.col(pos);
      }
    }
  }
  return out;
}

}  // namespace latq::linalg
