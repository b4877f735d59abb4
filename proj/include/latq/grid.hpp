#pragma once

#include <cstdint>

#include "latq/types.hpp"

namespace latq::lattice {

// Rounding domain for integer coefficients: all of Z, or a clipped
// contiguous range [lo, hi].
struct QuantGrid {
  bool clipped{false};
  std::int64_t lo{0};
  std::int64_t hi{0};

  static QuantGrid unbounded() { return {}; }
  static QuantGrid clipped_range(std::int64_t lo, std::int64_t hi);
  // Two's-complement range for a bit width in [2, 16]: [-2^(b-1), 2^(b-1)-1].
  // bits == 0 selects the unbounded grid.
  static QuantGrid for_bits(int bits);

  bool contains(std::int64_t v) const {
    return !clipped || (v >= lo && v <= hi);
  }
  bool operator==(const QuantGrid&) const = default;
};

// Nearest integer with ties to even, clamped into the grid when clipped.
// v must be finite.
std::int64_t round_to_grid(double v, const QuantGrid& grid);

}  // namespace latq::lattice
