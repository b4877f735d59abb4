#pragma once

#include <optional>

#include "latq/grid.hpp"
#include "latq/lattice.hpp"
#include "latq/linalg.hpp"
#include "latq/types.hpp"

namespace latq::quant {

// One linear layer to quantize: weights and per-element scales are c x r
// (input dim x output channels), calibration activations are n x c with
// n >= c, scales strictly positive, lambda >= 0.
struct QuantProblem {
  Matrix weights;
  Matrix scales;
  Matrix calib;
  double lambda{0.0};
  lattice::QuantGrid grid;
  linalg::Permutation order;  // iteration order over the c input dims

  void validate() const;
};

struct QuantResult {
  IntMatrix z;               // integer codes, c x r
  Matrix dequant;            // z .* scales, computed with exactly one multiply
  Vector per_channel_err;    // squared error |X (dequant_col - w_col)|^2
};

// Rounding inputs observed at each step, stored by processed row (i.e. in
// the permuted frame): omega before scale division, zeta after.
struct QuantTrace {
  Matrix omega;
  Matrix zeta;
};

// Error-propagating quantizer iterating front to back over the ordered
// dims: rounds row j, then feeds the dequantization error into the not yet
// quantized rows through the unit-lower LDL factor of the inverse Hessian.
QuantResult gptq(const QuantProblem& p, QuantTrace* trace = nullptr);

// Nearest-plane quantizer iterating back to front: projects the weights
// through the upper Cholesky factor of the Hessian and peels one plane per
// step.
QuantResult babai_quantize(const QuantProblem& p, QuantTrace* trace = nullptr);

// babai_quantize plus an extra propagation term added to the projected
// target after every step. The term is algebraically redundant; the
// variant exists so the redundancy can be checked executably.
QuantResult babai_quantize_refined(const QuantProblem& p,
                                   QuantTrace* trace = nullptr);

// Absolute-error formulation of gptq: keeps the running weights as
// original minus inverse-factor times accumulated dequantization offsets.
QuantResult gptq_type2_front(const QuantProblem& p, QuantTrace* trace = nullptr);

// Back-to-front counterpart of gptq_type2_front, built on the unit-upper
// UDU factor of the inverse Hessian.
QuantResult gptq_type2_back(const QuantProblem& p, QuantTrace* trace = nullptr);

// Round-to-nearest baseline; ignores calibration data and order except for
// the error report.
QuantResult rtn_quantize(const QuantProblem& p);

enum class ScaleMethod { AbsMax, Mse };

// Per-group scales over consecutive runs of `group_size` rows within each
// column (group_size == 0 means one group per column). AbsMax maps the
// group's largest magnitude onto the grid edge; Mse additionally sweeps
// 100 shrink factors over [0.2, 1.0] of that scale and keeps the one with
// the smallest round-trip squared error. All-zero groups get scale 1.
// Unbounded grids always get scale 1.
Matrix compute_scales(const Eigen::Ref<const Matrix>& weights,
                      const lattice::QuantGrid& grid, ScaleMethod method,
                      Index group_size);

enum class ActTarget { Gptq, Babai };

// Activation-magnitude order: positions sorted by diag(X^t X + lambda I),
// descending for Gptq, ascending for Babai, ties broken toward the lower
// original index.
linalg::Permutation order_act(const Eigen::Ref<const Matrix>& calib,
                              double lambda, ActTarget target);

// Greedy order that repeatedly picks the smallest remaining diagonal entry
// of the Hessian's Schur complement. Ties break toward the lower index.
linalg::Permutation order_min_pivot(const Eigen::Ref<const Matrix>& hessian);

// lambda to use when the caller does not fix one: 0.01 * mean diagonal of
// X^t X.
double resolve_lambda(const Eigen::Ref<const Matrix>& calib,
                      std::optional<double> requested);

}  // namespace latq::quant
