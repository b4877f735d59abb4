#include "latq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "latq/tolerances.hpp"

namespace latq::synth {

Matrix gaussian_matrix(Rng& rng, Index rows, Index cols, double stddev) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = stddev * rng.normal();
    }
  }
  return m;
}

Matrix random_spd(Rng& rng, Index n) {
  const Matrix a = gaussian_matrix(rng, 2 * n, n);
  Matrix spd = a.transpose() * a;
  spd.diagonal().array() += 0.1;
  return 0.5 * (spd + spd.transpose()).eval();
}

linalg::Permutation random_permutation(Rng& rng, Index n) {
  std::vector<Index> map(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) map[static_cast<size_t>(i)] = i;
  for (Index i = n - 1; i > 0; --i) {
    const Index j = rng.below(i + 1);
    std::swap(map[static_cast<size_t>(i)], map[static_cast<size_t>(j)]);
  }
  return linalg::Permutation(std::move(map));
}

quant::QuantProblem random_problem(Rng& rng, const ProblemSpec& spec,
                                   const lattice::QuantGrid& grid) {
  quant::QuantProblem p;
  p.calib = gaussian_matrix(rng, spec.n, spec.c);
  p.scales = Matrix(spec.c, spec.r);
  for (Index j = 0; j < spec.c; ++j) {
    for (Index i = 0; i < spec.r; ++i) {
      p.scales(j, i) = rng.uniform(spec.scale_lo, spec.scale_hi);
    }
  }
  p.weights = spec.weight_spread *
              gaussian_matrix(rng, spec.c, spec.r).cwiseProduct(p.scales);
  p.grid = grid;
  p.order = spec.random_order ? random_permutation(rng, spec.c)
                              : linalg::Permutation::identity(spec.c);
  p.lambda = spec.lambda < 0.0
                 ? quant::resolve_lambda(p.calib, std::nullopt)
                 : spec.lambda;
  return p;
}

double min_half_integer_distance(const Eigen::Ref<const Matrix>& zeta) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < zeta.rows(); ++i) {
    for (Index j = 0; j < zeta.cols(); ++j) {
      const double v = zeta(i, j);
      const double frac = v - std::floor(v);
      best = std::min(best, std::abs(frac - 0.5));
    }
  }
  return best;
}

quant::QuantProblem tie_free_problem(Rng& rng, const ProblemSpec& spec,
                                     const std::vector<lattice::QuantGrid>& grids,
                                     double margin, int max_tries) {
  if (grids.empty()) {
    throw std::invalid_argument("tie_free_problem: need at least one grid");
  }
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    quant::QuantProblem p = random_problem(rng, spec, grids.front());
    quant::QuantProblem flipped = p;
    flipped.order = p.order.composed_with_reversal();
    double dist = std::numeric_limits<double>::infinity();
    for (const lattice::QuantGrid& grid : grids) {
      p.grid = grid;
      flipped.grid = grid;
      quant::QuantTrace trace;
      quant::babai_quantize(p, &trace);
      dist = std::min(dist, min_half_integer_distance(trace.zeta));
      quant::gptq_type2_back(p, &trace);
      dist = std::min(dist, min_half_integer_distance(trace.zeta));
      quant::gptq(flipped, &trace);
      dist = std::min(dist, min_half_integer_distance(trace.zeta));
      quant::gptq_type2_front(flipped, &trace);
      dist = std::min(dist, min_half_integer_distance(trace.zeta));
      if (dist <= margin) break;
    }
    if (dist > margin) {
      p.grid = grids.front();
      return p;
    }
  }
  throw std::runtime_error("tie_free_problem: rejection sampling exhausted");
}

lattice::CvpInstance random_cvp(Rng& rng, Index n, Index c, double spread) {
  lattice::CvpInstance inst;
  inst.basis = gaussian_matrix(rng, n, c);
  inst.target = Vector(n);
  for (Index i = 0; i < n; ++i) inst.target(i) = spread * rng.normal();
  return inst;
}

}  // namespace latq::synth
