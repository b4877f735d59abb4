#pragma once

// Independent reference implementations used only to verify library output.

#include "latq/types.hpp"

namespace oracles {

using latq::Index;
using latq::IntMatrix;
using latq::Matrix;

// Triple-loop matrix product, no library math involved beyond scalar ops.
Matrix naive_matmul(const Matrix& a, const Matrix& b);

// Exact integer determinant via Bareiss fraction-free elimination.
// Throws std::overflow_error if intermediates leave the 128-bit range.
std::int64_t bareiss_det(const IntMatrix& m);

// Best scale over a dense sweep of `points` values spanning
// [lo_frac, hi_frac] * s_ref, judged by round-trip squared error on the
// clipped grid [glo, ghi]. Returns the minimal cost found.
double dense_scale_sweep_cost(const latq::Vector& group, double s_ref,
                              double lo_frac, double hi_frac, int points,
                              std::int64_t glo, std::int64_t ghi);

}  // namespace oracles
