#pragma once

// Every numeric tolerance used by the library and its checks lives here.
namespace latq::tol {

// Factorization pivots at or below this are treated as non-positive.
inline constexpr double kPivot = 1e-12;

// Squared-error comparisons (bound dominance, equivalence of dequantized
// outputs, reconstruction residuals).
inline constexpr double kErrorComparison = 1e-9;

// Squared-error agreement across different factorizations of the same
// Gram matrix.
inline constexpr double kCrossFactor = 1e-8;

// Matrix reconstruction and orthonormality residuals (max-abs).
inline constexpr double kReconstruction = 1e-10;

// Minimum distance of any rounding coefficient from the nearest
// half-integer for an instance to count as tie-free.
inline constexpr double kBoundaryMargin = 1e-6;

// Slack applied to the Lovasz condition during basis reduction.
inline constexpr double kLovasz = 1e-12;

// Eigenvalues above -kEigenClamp clamp to zero when building a symmetric
// square-root factor; anything more negative rejects the matrix.
inline constexpr double kEigenClamp = 1e-10;

}  // namespace latq::tol
