#pragma once

#include <vector>

#include "latq/lattice.hpp"
#include "latq/quantize.hpp"
#include "latq/rng.hpp"

namespace latq::synth {

Matrix gaussian_matrix(Rng& rng, Index rows, Index cols, double stddev = 1.0);

// Symmetric positive definite matrix with a modest spectrum spread.
Matrix random_spd(Rng& rng, Index n);

linalg::Permutation random_permutation(Rng& rng, Index n);

struct ProblemSpec {
  Index c{4};
  Index r{1};
  Index n{8};
  double scale_lo{0.5};
  double scale_hi{2.0};
  double weight_spread{3.0};  // weights ~ spread * N(0,1) .* scales
  double lambda{-1.0};        // negative means the auto rule
  bool random_order{true};
};

quant::QuantProblem random_problem(Rng& rng, const ProblemSpec& spec,
                                   const lattice::QuantGrid& grid);

// Smallest distance of any entry from the nearest half-integer.
double min_half_integer_distance(const Eigen::Ref<const Matrix>& zeta);

// Redraws random_problem until every rounding coefficient seen by the four
// quantizers (the two back-to-front ones under the problem's order, the
// two front-to-back ones under the reversal-composed order), across all of
// `grids`, keeps `margin` from the nearest half-integer. Such instances
// make integer-exact equivalence checks immune to rounding-tie noise.
// Throws std::runtime_error if max_tries draws all fail.
quant::QuantProblem tie_free_problem(Rng& rng, const ProblemSpec& spec,
                                     const std::vector<lattice::QuantGrid>& grids,
                                     double margin, int max_tries = 500);

lattice::CvpInstance random_cvp(Rng& rng, Index n, Index c,
                                double spread = 2.0);

}  // namespace latq::synth
