#include "latq/quantize.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "latq/errors.hpp"
#include "latq/tolerances.hpp"

namespace latq::quant {

namespace {

using linalg::Axis;
using linalg::Direction;
using linalg::Permutation;

struct Prepared {
  Index c, r;
  Matrix weights;  // rows gathered into processing order
  Matrix scales;
  Matrix hessian;  // ordered and damped
};

Prepared prepare(const QuantProblem& p) {
  p.validate();
  Prepared prep;
  prep.c = p.weights.rows();
  prep.r = p.weights.cols();
  prep.hessian = linalg::damped_hessian(p.calib, p.lambda, p.order);
  prep.weights =
      linalg::apply_permutation(p.weights, p.order, Axis::Rows, Direction::Inverse);
  prep.scales =
      linalg::apply_permutation(p.scales, p.order, Axis::Rows, Direction::Inverse);
  return prep;
}

IntVector round_row(const RowVector& zeta, const lattice::QuantGrid& grid) {
  IntVector z(zeta.size());
  for (Index i = 0; i < zeta.size(); ++i) {
    z(i) = lattice::round_to_grid(zeta(i), grid);
  }
  return z;
}

// Assembles the result from codes and dequantized rows living in the
// processing order: scatters both back and measures per-channel error.
QuantResult finish(const QuantProblem& p, const IntMatrix& z_ordered,
                   const Matrix& dequant_ordered) {
  QuantResult res;
  res.z = linalg::apply_permutation(z_ordered, p.order, Axis::Rows,
                                    Direction::Forward);
  res.dequant = linalg::apply_permutation(dequant_ordered, p.order, Axis::Rows,
                                          Direction::Forward);
  res.per_channel_err =
      (p.calib * (res.dequant - p.weights)).colwise().squaredNorm().transpose();
  return res;
}

QuantResult babai_impl(const QuantProblem& p, QuantTrace* trace,
                       bool redundant_update) {
  Prepared prep = prepare(p);
  const Index c = prep.c;
  const Index r = prep.r;
  const linalg::TriFactor chol = linalg::cholesky_upper(prep.hessian);
  Matrix extra_term;  // cholesky factor times unit-upper inverse-Hessian factor
  if (redundant_update) {
    const Matrix hess_inv = linalg::spd_inverse(prep.hessian);
    const linalg::TriFactor udu = linalg::udu_upper(hess_inv);
    extra_term = chol.matrix * udu.matrix;
  }
  Matrix projected = chol.matrix * prep.weights;
  IntMatrix z_ordered(c, r);
  Matrix dequant_ordered(c, r);
  if (trace) {
    trace->omega.resize(c, r);
    trace->zeta.resize(c, r);
  }
  for (Index j = c - 1; j >= 0; --j) {
    const RowVector omega = projected.row(j) / chol.matrix(j, j);
    const RowVector zeta = omega.cwiseQuotient(prep.scales.row(j));
    const IntVector z = round_row(zeta, p.grid);
    const RowVector dq =
        z.cast<double>().transpose().cwiseProduct(prep.scales.row(j));
    z_ordered.row(j) = z.transpose();
    dequant_ordered.row(j) = dq;
    projected.topRows(j + 1).noalias() -= chol.matrix.col(j).head(j + 1) * dq;
    if (redundant_update) {
      const RowVector err = dq - omega;
      projected.noalias() += extra_term.col(j) * err;
    }
    if (trace) {
      trace->omega.row(j) = omega;
      trace->zeta.row(j) = zeta;
    }
  }
  return finish(p, z_ordered, dequant_ordered);
}

}  // namespace

void QuantProblem::validate() const {
  const Index c = weights.rows();
  const Index r = weights.cols();
  if (c < 1 || r < 1) {
    throw std::invalid_argument("QuantProblem: weights must be c x r, c,r >= 1");
  }
  if (scales.rows() != c || scales.cols() != r) {
    throw std::invalid_argument("QuantProblem: scales shape must match weights");
  }
  if (calib.cols() != c || calib.rows() < c) {
    throw std::invalid_argument(
        "QuantProblem: calib must be n x c with n >= c");
  }
  require_finite(weights, "QuantProblem weights");
  require_finite(scales, "QuantProblem scales");
  require_finite(calib, "QuantProblem calib");
  if ((scales.array() <= 0.0).any()) {
    throw std::invalid_argument("QuantProblem: scales must be positive");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("QuantProblem: lambda must be >= 0");
  }
  if (order.size() != c) {
    throw std::invalid_argument("QuantProblem: order size must equal c");
  }
}

QuantResult gptq(const QuantProblem& p, QuantTrace* trace) {
  Prepared prep = prepare(p);
  const Index c = prep.c;
  const Index r = prep.r;
  const Matrix hess_inv = linalg::spd_inverse(prep.hessian);
  const linalg::TriFactor ldl = linalg::ldl_lower(hess_inv);
  Matrix working = prep.weights;
  IntMatrix z_ordered(c, r);
  Matrix dequant_ordered(c, r);
  if (trace) {
    trace->omega.resize(c, r);
    trace->zeta.resize(c, r);
  }
  for (Index j = 0; j < c; ++j) {
    const RowVector omega = working.row(j);
    const RowVector zeta = omega.cwiseQuotient(prep.scales.row(j));
    const IntVector z = round_row(zeta, p.grid);
    const RowVector dq =
        z.cast<double>().transpose().cwiseProduct(prep.scales.row(j));
    z_ordered.row(j) = z.transpose();
    dequant_ordered.row(j) = dq;
    const RowVector err = dq - omega;
    // Row j itself would only be overwritten with dq; later rows are the
    // ones that feed subsequent steps.
    if (j + 1 < c) {
      working.bottomRows(c - j - 1).noalias() +=
          ldl.matrix.col(j).tail(c - j - 1) * err;
    }
    if (trace) {
      trace->omega.row(j) = omega;
      trace->zeta.row(j) = zeta;
    }
  }
  return finish(p, z_ordered, dequant_ordered);
}

QuantResult babai_quantize(const QuantProblem& p, QuantTrace* trace) {
  return babai_impl(p, trace, false);
}

QuantResult babai_quantize_refined(const QuantProblem& p, QuantTrace* trace) {
  return babai_impl(p, trace, true);
}

QuantResult gptq_type2_front(const QuantProblem& p, QuantTrace* trace) {
  Prepared prep = prepare(p);
  const Index c = prep.c;
  const Index r = prep.r;
  const Matrix hess_inv = linalg::spd_inverse(prep.hessian);
  const linalg::TriFactor ldl = linalg::ldl_lower(hess_inv);
  const Matrix lower_inv =
      ldl.matrix.triangularView<Eigen::UnitLower>().solve(Matrix::Identity(c, c));
  const Matrix base = prep.weights;
  Matrix working = base;
  Matrix offsets = Matrix::Zero(c, r);  // dequantized minus original, per row
  IntMatrix z_ordered(c, r);
  Matrix dequant_ordered(c, r);
  if (trace) {
    trace->omega.resize(c, r);
    trace->zeta.resize(c, r);
  }
  for (Index j = 0; j < c; ++j) {
    const RowVector omega = working.row(j);
    const RowVector zeta = omega.cwiseQuotient(prep.scales.row(j));
    const IntVector z = round_row(zeta, p.grid);
    const RowVector dq =
        z.cast<double>().transpose().cwiseProduct(prep.scales.row(j));
    z_ordered.row(j) = z.transpose();
    dequant_ordered.row(j) = dq;
    offsets.row(j) = dq - base.row(j);
    working = base - lower_inv * offsets;
    if (trace) {
      trace->omega.row(j) = omega;
      trace->zeta.row(j) = zeta;
    }
  }
  return finish(p, z_ordered, dequant_ordered);
}

QuantResult gptq_type2_back(const QuantProblem& p, QuantTrace* trace) {
  Prepared prep = prepare(p);
  const Index c = prep.c;
  const Index r = prep.r;
  const Matrix hess_inv = linalg::spd_inverse(prep.hessian);
  const linalg::TriFactor udu = linalg::udu_upper(hess_inv);
  const Matrix upper_inv =
      udu.matrix.triangularView<Eigen::UnitUpper>().solve(Matrix::Identity(c, c));
  const Matrix base = prep.weights;
  Matrix working = base;
  Matrix offsets = Matrix::Zero(c, r);
  IntMatrix z_ordered(c, r);
  Matrix dequant_ordered(c, r);
  if (trace) {
    trace->omega.resize(c, r);
    trace->zeta.resize(c, r);
  }
  for (Index j = c - 1; j >= 0; --j) {
    const RowVector omega = working.row(j);
    const RowVector zeta = omega.cwiseQuotient(prep.scales.row(j));
    const IntVector z = round_row(zeta, p.grid);
    const RowVector dq =
        z.cast<double>().transpose().cwiseProduct(prep.scales.row(j));
    z_ordered.row(j) = z.transpose();
    dequant_ordered.row(j) = dq;
    offsets.row(j) = dq - base.row(j);
    working = base - upper_inv * offsets;
    if (trace) {
      trace->omega.row(j) = omega;
      trace->zeta.row(j) = zeta;
    }
  }
  return finish(p, z_ordered, dequant_ordered);
}

QuantResult rtn_quantize(const QuantProblem& p) {
  p.validate();
  const Index c = p.weights.rows();
  const Index r = p.weights.cols();
  QuantResult res;
  res.z.resize(c, r);
  res.dequant.resize(c, r);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < r; ++i) {
      const std::int64_t z =
          lattice::round_to_grid(p.weights(j, i) / p.scales(j, i), p.grid);
      res.z(j, i) = z;
      res.dequant(j, i) = static_cast<double>(z) * p.scales(j, i);
    }
  }
  res.per_channel_err =
      (p.calib * (res.dequant - p.weights)).colwise().squaredNorm().transpose();
  return res;
}

Matrix compute_scales(const Eigen::Ref<const Matrix>& weights,
                      const lattice::QuantGrid& grid, ScaleMethod method,
                      Index group_size) {
  require_finite(weights, "compute_scales");
  const Index c = weights.rows();
  const Index r = weights.cols();
  if (c < 1 || r < 1) {
    throw std::invalid_argument("compute_scales: weights must be non-empty");
  }
  if (group_size < 0 || group_size > c) {
    throw std::invalid_argument("compute_scales: bad group size");
  }
  if (!grid.clipped) {
    return Matrix::Ones(c, r);
  }
  const Index step = group_size == 0 ? c : group_size;
  const double edge =
      static_cast<double>(std::max(std::llabs(grid.lo), std::llabs(grid.hi)));
  Matrix scales(c, r);
  for (Index col = 0; col < r; ++col) {
    for (Index start = 0; start < c; start += step) {
      const Index len = std::min(step, c - start);
      const auto group = weights.col(col).segment(start, len);
      const double peak = group.cwiseAbs().maxCoeff();
      double s = 1.0;
      if (peak > 0.0) {
        const double s_absmax = peak / edge;
        s = s_absmax;
        if (method == ScaleMethod::Mse) {
          double best_cost = std::numeric_limits<double>::infinity();
          for (int k = 0; k < 100; ++k) {
            const double shrink = 0.2 + 0.8 * static_cast<double>(k) / 99.0;
            const double cand = shrink * s_absmax;
            double cost = 0.0;
            for (Index t = 0; t < len; ++t) {
              const double w = group(t);
              const double q =
                  static_cast<double>(lattice::round_to_grid(w / cand, grid)) *
                  cand;
              cost += (w - q) * (w - q);
            }
            if (cost < best_cost) {
              best_cost = cost;
              s = cand;
            }
          }
        }
      }
      scales.col(col).segment(start, len).setConstant(s);
    }
  }
  return scales;
}

linalg::Permutation order_act(const Eigen::Ref<const Matrix>& calib,
                              double lambda, ActTarget target) {
  require_finite(calib, "order_act");
  if (lambda < 0) {
    throw std::invalid_argument("order_act: lambda must be >= 0");
  }
  const Index c = calib.cols();
  Vector diag(c);
  for (Index j = 0; j < c; ++j) diag(j) = calib.col(j).squaredNorm() + lambda;
  std::vector<Index> idx(static_cast<size_t>(c));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (target == ActTarget::Babai) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return diag(a) < diag(b); });
  } else {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return diag(a) > diag(b); });
  }
  return linalg::Permutation(std::move(idx));
}

linalg::Permutation order_min_pivot(const Eigen::Ref<const Matrix>& hessian) {
  const Index c = hessian.rows();
  if (hessian.cols() != c || c < 1) {
    throw std::invalid_argument("order_min_pivot: hessian must be square");
  }
  require_finite(hessian, "order_min_pivot");
  Matrix work = hessian;
  std::vector<bool> taken(static_cast<size_t>(c), false);
  std::vector<Index> map;
  map.reserve(static_cast<size_t>(c));
  for (Index pos = 0; pos < c; ++pos) {
    Index pick = -1;
    for (Index j = 0; j < c; ++j) {
      if (taken[static_cast<size_t>(j)]) continue;
      if (pick < 0 || work(j, j) < work(pick, pick)) pick = j;
    }
    const double pivot = work(pick, pick);
    if (pivot <= tol::kPivot) {
      throw NotPositiveDefinite("order_min_pivot: non-positive pivot");
    }
    map.push_back(pick);
    taken[static_cast<size_t>(pick)] = true;
    const Vector picked = work.col(pick);  // copy before the rank-1 update
    work.noalias() -= (picked * picked.transpose()) / pivot;
  }
  return linalg::Permutation(std::move(map));
}

double resolve_lambda(const Eigen::Ref<const Matrix>& calib,
                      std::optional<double> requested) {
  if (requested.has_value()) {
    if (*requested < 0) {
      throw std::invalid_argument("resolve_lambda: lambda must be >= 0");
    }
    return *requested;
  }
  require_finite(calib, "resolve_lambda");
  const Index c = calib.cols();
  double mean_diag = 0.0;
  for (Index j = 0; j < c; ++j) mean_diag += calib.col(j).squaredNorm();
  mean_diag /= static_cast<double>(c);
  return 0.01 * mean_diag;
}

}  // namespace latq::quant
