#pragma once

#include <cstdint>
#include <vector>

#include "latq/quantize.hpp"

namespace latq::analysis {

// Which iteration direction the bound is stated for: the back-to-front
// nearest-plane quantizer under the problem's order, or the front-to-back
// error-propagating quantizer under that same order.
enum class BoundDirection { BabaiBackToFront, GptqFrontToBack };

struct BoundReport {
  Vector per_channel_bound;
  Vector per_channel_actual;
  linalg::Permutation order_used;
  Vector d_diag;  // LDL pivots of the (direction-adjusted) ordered Hessian
};

// Worst-case per-channel squared error 1/4 * sum_j d_j * s_j^2 in the
// direction's processing frame, together with the actual errors of the
// matching quantizer. Requires an unbounded grid (IncompatibleOptions
// otherwise).
BoundReport error_bound(const quant::QuantProblem& p, BoundDirection dir);

// Returns a copy of p whose weight column `channel` sits at offset_scale
// times the worst-case corner of the rounding cell around the zero code,
// so the nearest-plane quantizer realizes that fraction of the bound. The
// default backs off the exact corner by 1e-10 so every rounding decision
// stays clear of floating-point noise; pass 1.0 for the exact corner.
// Requires an unbounded grid.
quant::QuantProblem corner_witness(const quant::QuantProblem& p, Index channel,
                                   double offset_scale = 1.0 - 1e-10);

struct McResult {
  double mean_ratio;
  double std_error;
  std::uint64_t samples;
};

// Monte Carlo mean of actual/bound squared error over weights drawn
// uniformly from the nearest-plane rounding cell (the analytic mean is
// 1/3). Each trial replaces the template's weights, runs babai_quantize,
// and contributes one ratio per channel; trial t draws from
// Rng::substream(seed, t). Requires an unbounded grid and trials >= 1000.
McResult expected_error_mc(const quant::QuantProblem& tpl,
                           std::uint64_t trials, std::uint64_t seed);

enum class FactorKind { RawCalib, Cholesky, EigenSqrt };

// Factor F with F^t F = X^t X + lambda I: the calibration matrix itself
// (rows sqrt(lambda) I appended when lambda > 0), the upper Cholesky
// factor, or the symmetric eigendecomposition square root.
Matrix hessian_factor(const quant::QuantProblem& p, FactorKind kind);

struct FactorInvarianceReport {
  FactorKind kind;
  bool coeffs_match;      // integer solutions equal those from RawCalib
  double max_err_diff;    // squared-error gap vs RawCalib, worst channel
  double max_gram_diff;   // max-abs |F^t F - (X^t X + lambda I)|
  bool pass;
};

// Runs the nearest-plane solver on the per-channel instances induced by
// `kind` and by RawCalib and compares outcomes. Tolerances:
// tol::kCrossFactor on errors, tol::kReconstruction on the Gram check.
FactorInvarianceReport check_factor_invariance(const quant::QuantProblem& p,
                                               FactorKind kind);

struct QrReuseReport {
  Vector per_channel_recon_err;  // max-abs reconstruction gap per channel
  bool pass;
};

// One orthogonalization of X*T serves every channel: checks that
// Q * (R * diag(T^-1 s_i)) rebuilds X * diag(s_i) * T within
// tol::kErrorComparison for each requested channel.
QrReuseReport check_qr_reuse(const Eigen::Ref<const Matrix>& calib,
                             const linalg::Permutation& order,
                             const Eigen::Ref<const Matrix>& scales,
                             const std::vector<Index>& channels);

struct RefinementReport {
  double omega_max_diff;
  bool z_identical;
  double dequant_max_diff;
  bool pass;
};

// Runs babai_quantize and babai_quantize_refined on the same problem and
// verifies the extra propagation term changes nothing: rounding inputs
// within tol::kErrorComparison, identical codes, identical dequant.
RefinementReport check_refinement_noop(const quant::QuantProblem& p);

}  // namespace latq::analysis
