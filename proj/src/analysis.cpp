#include "latq/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "latq/errors.hpp"
#include "latq/parallel.hpp"
#include "latq/rng.hpp"
#include "latq/tolerances.hpp"

namespace latq::analysis {

namespace {

using linalg::Axis;
using linalg::Direction;

void require_unbounded(const quant::QuantProblem& p, const char* what) {
  if (p.grid.clipped) {
    throw IncompatibleOptions(std::string(what) +
                              ": requires an unbounded grid");
  }
}

Matrix gathered_scales(const quant::QuantProblem& p) {
  return linalg::apply_permutation(p.scales, p.order, Axis::Rows,
                                   Direction::Inverse);
}

}  // namespace

BoundReport error_bound(const quant::QuantProblem& p, BoundDirection dir) {
  p.validate();
  require_unbounded(p, "error_bound");
  const Index c = p.weights.rows();
  const Index r = p.weights.cols();
  const Matrix hessian = linalg::damped_hessian(p.calib, p.lambda, p.order);
  Matrix scales = gathered_scales(p);

  BoundReport report;
  report.order_used = p.order;
  if (dir == BoundDirection::BabaiBackToFront) {
    const linalg::TriFactor ldl = linalg::ldl_lower(hessian);
    report.d_diag = ldl.diag;
    report.per_channel_actual = quant::babai_quantize(p).per_channel_err;
  } else {
    // Front-to-back processing sees the ordered dims reversed; the pivots
    // come from the reversal-conjugated Hessian and the scales flip to
    // match.
    const Matrix flipped = hessian.reverse();
    const linalg::TriFactor ldl = linalg::ldl_lower(flipped);
    report.d_diag = ldl.diag;
    scales = scales.colwise().reverse().eval();
    report.per_channel_actual = quant::gptq(p).per_channel_err;
  }
  report.per_channel_bound.resize(r);
  for (Index i = 0; i < r; ++i) {
    double sum = 0.0;
    for (Index j = 0; j < c; ++j) {
      const double s = scales(j, i);
      sum += report.d_diag(j) * s * s;
    }
    report.per_channel_bound(i) = 0.25 * sum;
  }
  return report;
}

quant::QuantProblem corner_witness(const quant::QuantProblem& p, Index channel,
                                   double offset_scale) {
  p.validate();
  require_unbounded(p, "corner_witness");
  const Index c = p.weights.rows();
  if (channel < 0 || channel >= p.weights.cols()) {
    throw std::invalid_argument("corner_witness: channel out of range");
  }
  if (!(offset_scale >= 0.0 && offset_scale <= 1.0)) {
    throw std::invalid_argument("corner_witness: offset_scale must be in [0, 1]");
  }
  const Matrix hessian = linalg::damped_hessian(p.calib, p.lambda, p.order);
  const linalg::TriFactor chol = linalg::cholesky_upper(hessian);
  const Matrix scales = gathered_scales(p);
  Vector offset(c);
  for (Index j = 0; j < c; ++j) {
    offset(j) = offset_scale * 0.5 * chol.matrix(j, j) * scales(j, channel);
  }
  Vector witness_ordered =
      chol.matrix.triangularView<Eigen::Upper>().solve(offset);
  Matrix witness = linalg::apply_permutation(
      Matrix(witness_ordered), p.order, Axis::Rows, Direction::Forward);
  quant::QuantProblem out = p;
  out.weights.col(channel) = witness.col(0);
  return out;
}

McResult expected_error_mc(const quant::QuantProblem& tpl, std::uint64_t trials,
                           std::uint64_t seed) {
  tpl.validate();
  require_unbounded(tpl, "expected_error_mc");
  if (trials < 1000) {
    throw std::invalid_argument("expected_error_mc: trials must be >= 1000");
  }
  const Index c = tpl.weights.rows();
  const Index r = tpl.weights.cols();
  const Matrix hessian = linalg::damped_hessian(tpl.calib, tpl.lambda, tpl.order);
  const linalg::TriFactor chol = linalg::cholesky_upper(hessian);
  const Matrix scales = gathered_scales(tpl);
  Matrix half_edges(c, r);
  Vector bound(r);
  for (Index i = 0; i < r; ++i) {
    double sum = 0.0;
    for (Index j = 0; j < c; ++j) {
      half_edges(j, i) = 0.5 * chol.matrix(j, j) * scales(j, i);
      sum += half_edges(j, i) * half_edges(j, i);
    }
    bound(i) = sum;
  }

  std::vector<double> ratios(static_cast<size_t>(trials) * static_cast<size_t>(r));
  parallel_for(static_cast<Index>(trials), [&](Index t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    Matrix cell_point(c, r);
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) {
        cell_point(j, i) =
            (2.0 * rng.unif01() - 1.0) * half_edges(j, i);
      }
    }
    Matrix weights_ordered =
        chol.matrix.triangularView<Eigen::Upper>().solve(cell_point);
    quant::QuantProblem prob = tpl;
    prob.weights = linalg::apply_permutation(weights_ordered, tpl.order,
                                             Axis::Rows, Direction::Forward);
    const quant::QuantResult res = quant::babai_quantize(prob);
    for (Index i = 0; i < r; ++i) {
      ratios[static_cast<size_t>(t) * static_cast<size_t>(r) +
             static_cast<size_t>(i)] = res.per_channel_err(i) / bound(i);
    }
  });

  const auto n = static_cast<double>(ratios.size());
  double mean = 0.0;
  for (double v : ratios) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : ratios) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  return {mean, std::sqrt(var / n), ratios.size()};
}

Matrix hessian_factor(const quant::QuantProblem& p, FactorKind kind) {
  p.validate();
  const Index n = p.calib.rows();
  const Index c = p.calib.cols();
  switch (kind) {
    case FactorKind::RawCalib: {
      if (p.lambda == 0.0) return p.calib;
      Matrix stacked(n + c, c);
      stacked.topRows(n) = p.calib;
      stacked.bottomRows(c) =
          std::sqrt(p.lambda) * Matrix::Identity(c, c);
      return stacked;
    }
    case FactorKind::Cholesky: {
      const Matrix gram = linalg::damped_hessian(
          p.calib, p.lambda, linalg::Permutation::identity(c));
      return linalg::cholesky_upper(gram).matrix;
    }
    case FactorKind::EigenSqrt: {
      const Matrix gram = linalg::damped_hessian(
          p.calib, p.lambda, linalg::Permutation::identity(c));
      Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
      if (es.info() != Eigen::Success) {
        throw std::runtime_error("hessian_factor: eigendecomposition failed");
      }
      if (es.eigenvalues().minCoeff() < -tol::kEigenClamp) {
        throw NotPositiveDefinite(
            "hessian_factor: Gram matrix is not positive definite");
      }
      const Vector clamped = es.eigenvalues().cwiseMax(0.0);
      return es.eigenvectors() * clamped.cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose();
    }
  }
  throw std::logic_error("hessian_factor: unknown kind");
}

namespace {

struct FactorSolve {
  IntMatrix coeffs;     // c x r, original row order
  Vector err_sq;        // per channel
};

FactorSolve solve_with_factor(const quant::QuantProblem& p, const Matrix& factor) {
  const Index c = p.weights.rows();
  const Index r = p.weights.cols();
  const Matrix ordered_cols =
      linalg::apply_permutation(factor, p.order, Axis::Cols, Direction::Forward);
  FactorSolve out{IntMatrix(c, r), Vector(r)};
  for (Index i = 0; i < r; ++i) {
    Matrix basis = ordered_cols;
    const Vector scale_ordered = linalg::apply_permutation(
        Matrix(p.scales.col(i)), p.order, Axis::Rows, Direction::Inverse);
    for (Index j = 0; j < c; ++j) basis.col(j) *= scale_ordered(j);
    lattice::CvpInstance inst{std::move(basis), factor * p.weights.col(i)};
    const lattice::BabaiResult res =
        lattice::babai_nearest_plane(inst, false, p.grid);
    const IntMatrix back = linalg::apply_permutation(
        IntMatrix(res.coeffs), p.order, Axis::Rows, Direction::Forward);
    out.coeffs.col(i) = back.col(0);
    out.err_sq(i) = res.residual.squaredNorm();
  }
  return out;
}

}  // namespace

FactorInvarianceReport check_factor_invariance(const quant::QuantProblem& p,
                                               FactorKind kind) {
  p.validate();
  const Index c = p.calib.cols();
  const Matrix gram = linalg::damped_hessian(p.calib, p.lambda,
                                             linalg::Permutation::identity(c));
  const Matrix baseline_factor = hessian_factor(p, FactorKind::RawCalib);
  const Matrix factor = hessian_factor(p, kind);

  FactorInvarianceReport report;
  report.kind = kind;
  report.max_gram_diff =
      (factor.transpose() * factor - gram).cwiseAbs().maxCoeff();
  const FactorSolve base = solve_with_factor(p, baseline_factor);
  const FactorSolve probe = solve_with_factor(p, factor);
  report.coeffs_match = (base.coeffs.array() == probe.coeffs.array()).all();
  report.max_err_diff = (base.err_sq - probe.err_sq).cwiseAbs().maxCoeff();
  report.pass = report.coeffs_match &&
                report.max_err_diff <= tol::kCrossFactor &&
                report.max_gram_diff <= tol::kReconstruction;
  return report;
}

QrReuseReport check_qr_reuse(const Eigen::Ref<const Matrix>& calib,
                             const linalg::Permutation& order,
                             const Eigen::Ref<const Matrix>& scales,
                             const std::vector<Index>& channels) {
  require_finite(calib, "check_qr_reuse");
  require_finite(scales, "check_qr_reuse");
  const Index c = calib.cols();
  if (scales.rows() != c || order.size() != c) {
    throw std::invalid_argument("check_qr_reuse: shape mismatch");
  }
  const Matrix ordered =
      linalg::apply_permutation(calib, order, Axis::Cols, Direction::Forward);
  const linalg::GramSchmidt gs = linalg::gram_schmidt(ordered);

  QrReuseReport report;
  report.per_channel_recon_err.resize(static_cast<Index>(channels.size()));
  bool ok = true;
  for (size_t k = 0; k < channels.size(); ++k) {
    const Index i = channels[k];
    if (i < 0 || i >= scales.cols()) {
      throw std::invalid_argument("check_qr_reuse: channel out of range");
    }
    const Vector scale_ordered = linalg::apply_permutation(
        Matrix(scales.col(i)), order, Axis::Rows, Direction::Inverse);
    const Matrix rebuilt = gs.q * (gs.r * scale_ordered.asDiagonal());
    Matrix direct = ordered;
    for (Index j = 0; j < c; ++j) direct.col(j) *= scale_ordered(j);
    const double err = (rebuilt - direct).cwiseAbs().maxCoeff();
    report.per_channel_recon_err(static_cast<Index>(k)) = err;
    ok = ok && err < tol::kErrorComparison;
  }
  report.pass = ok;
  return report;
}

RefinementReport check_refinement_noop(const quant::QuantProblem& p) {
  quant::QuantTrace plain_trace, refined_trace;
  const quant::QuantResult plain = quant::babai_quantize(p, &plain_trace);
  const quant::QuantResult refined =
      quant::babai_quantize_refined(p, &refined_trace);
  RefinementReport report;
  report.omega_max_diff =
      (plain_trace.omega - refined_trace.omega).cwiseAbs().maxCoeff();
  report.z_identical = (plain.z.array() == refined.z.array()).all();
  report.dequant_max_diff =
      (plain.dequant - refined.dequant).cwiseAbs().maxCoeff();
  report.pass = report.omega_max_diff <= tol::kErrorComparison &&
                report.z_identical && report.dequant_max_diff == 0.0;
  return report;
}

}  // namespace latq::analysis
