#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "latq/grid.hpp"
#include "latq/types.hpp"

namespace latq::lattice {

// Closest-vector instance: basis (n x c, full column rank) and target (n).
struct CvpInstance {
  Matrix basis;
  Vector target;
  void validate() const;
};

// Plane coefficients observed per basis column, indexed by column.
struct BabaiTrace {
  Vector zeta;
};

struct BabaiResult {
  IntVector coeffs;
  Vector residual;  // basis * coeffs - target
};

// Nearest-plane rounding, processed from the last basis column to the
// first. With use_lll the basis is reduced first and the coefficients are
// mapped back through the reduction transform; that path requires an
// unbounded grid (IncompatibleOptions otherwise).
BabaiResult babai_nearest_plane(const CvpInstance& inst, bool use_lll,
                                const QuantGrid& grid,
                                BabaiTrace* trace = nullptr);

struct LllResult {
  Matrix reduced;        // basis * transform, one canonical product
  IntMatrix transform;   // unimodular integer matrix
};

// Lovasz-condition basis reduction with exact integer bookkeeping of the
// transform. Requires 0.25 < delta < 1.
LllResult lll_reduce(const Eigen::Ref<const Matrix>& basis,
                     double delta = 0.75);

struct CvpOptimum {
  IntVector coeffs;
  double err_sq;
};

// Exhaustive search over the integer box of half-width `radius` around the
// nearest-plane solution, intersected with the grid. Requires c <= 6 and
// at most 1e7 candidate points (SearchSpaceTooLarge otherwise). Ties are
// broken by enumeration order, so results are deterministic.
CvpOptimum cvp_bruteforce(const CvpInstance& inst, const QuantGrid& grid,
                          int radius = 3);

// Coordinate-wise rounding of the least-squares coefficients, for
// comparison against the nearest-plane solution.
IntVector rtn(const CvpInstance& inst, const QuantGrid& grid);

enum class RegionMethod { Voronoi, Rtn, Babai, BabaiReversed };

struct RegionWindow {
  double x0, x1, y0, y1;
};

// Assignment regions of a 2-D lattice over a sampled window: for each
// sample point the chosen integer coefficient pair under the method.
struct RegionMap {
  RegionWindow window;
  Index resolution;                              // samples per axis
  std::vector<double> xs, ys;                    // flattened row-major
  std::vector<std::array<std::int64_t, 2>> coeffs;
};

RegionMap region_map(const Eigen::Ref<const Matrix>& basis,
                     const RegionWindow& window, Index resolution,
                     RegionMethod method);

// CSV with header "x,y,z1,z2", LF line endings.
void write_region_csv(const RegionMap& map, std::ostream& out);

}  // namespace latq::lattice
