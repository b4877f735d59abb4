#include "latq/lattice.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "latq/errors.hpp"
#include "latq/linalg.hpp"
#include "latq/parallel.hpp"
#include "latq/tolerances.hpp"

namespace latq::lattice {

QuantGrid QuantGrid::clipped_range(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) {
    throw std::invalid_argument("QuantGrid: lo must not exceed hi");
  }
  return {true, lo, hi};
}

QuantGrid QuantGrid::for_bits(int bits) {
  if (bits == 0) return unbounded();
  if (bits < 2 || bits > 16) {
    throw std::invalid_argument("QuantGrid: bits must be 0 or in [2, 16]");
  }
  const std::int64_t half = std::int64_t{1} << (bits - 1);
  return clipped_range(-half, half - 1);
}

std::int64_t round_to_grid(double v, const QuantGrid& grid) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument("round_to_grid: value must be finite");
  }
  const double lower = std::floor(v);
  const double frac = v - lower;
  double rounded;
  if (frac > 0.5) {
    rounded = lower + 1.0;
  } else if (frac < 0.5) {
    rounded = lower;
  } else {
    rounded = (std::fmod(lower, 2.0) == 0.0) ? lower : lower + 1.0;
  }
  // Saturate before the integer cast; the grid clamp below tightens it.
  constexpr double kCastLimit = 4.6e18;
  if (rounded > kCastLimit) rounded = kCastLimit;
  if (rounded < -kCastLimit) rounded = -kCastLimit;
  auto z = static_cast<std::int64_t>(rounded);
  if (grid.clipped) {
    if (z < grid.lo) z = grid.lo;
    if (z > grid.hi) z = grid.hi;
  }
  return z;
}

void CvpInstance::validate() const {
  if (basis.rows() < 1 || basis.cols() < 1 || basis.rows() < basis.cols()) {
    throw std::invalid_argument(
        "CvpInstance: basis must be n x c with n >= c >= 1");
  }
  if (target.size() != basis.rows()) {
    throw std::invalid_argument(
        "CvpInstance: target length must match basis rows");
  }
  require_finite(basis, "CvpInstance basis");
  require_finite(target, "CvpInstance target");
}

BabaiResult babai_nearest_plane(const CvpInstance& inst, bool use_lll,
                                const QuantGrid& grid, BabaiTrace* trace) {
  inst.validate();
  if (use_lll && grid.clipped) {
    throw IncompatibleOptions(
        "babai_nearest_plane: basis reduction requires an unbounded grid");
  }
  const Index c = inst.basis.cols();
  Matrix working = inst.basis;
  IntMatrix transform;
  if (use_lll) {
    LllResult red = lll_reduce(inst.basis);
    working = std::move(red.reduced);
    transform = std::move(red.transform);
  }
  linalg::GramSchmidt gs = linalg::gram_schmidt(working);
  Vector shifted = inst.target;
  IntVector coeffs(c);
  if (trace) trace->zeta.resize(c);
  for (Index j = c - 1; j >= 0; --j) {
    const double denom = gs.q.col(j).dot(working.col(j));
    const double zeta = gs.q.col(j).dot(shifted) / denom;
    const std::int64_t zj = round_to_grid(zeta, grid);
    coeffs(j) = zj;
    shifted -= working.col(j) * static_cast<double>(zj);
    if (trace) trace->zeta(j) = zeta;
  }
  if (use_lll) {
    coeffs = (transform * coeffs).eval();
  }
  Vector residual = inst.basis * coeffs.cast<double>() - inst.target;
  return {std::move(coeffs), std::move(residual)};
}

namespace {

// Classical Gram-Schmidt data for the reduction loop: mu(i,j) projects
// column i onto orthogonalized column j, norms_sq holds |b*_j|^2.
struct GsState {
  Matrix mu;
  Vector norms_sq;
};

GsState compute_gs(const Matrix& basis) {
  const Index c = basis.cols();
  Matrix star = basis;
  GsState st{Matrix::Zero(c, c), Vector::Zero(c)};
  for (Index i = 0; i < c; ++i) {
    for (Index j = 0; j < i; ++j) {
      st.mu(i, j) = basis.col(i).dot(star.col(j)) / st.norms_sq(j);
      star.col(i) -= st.mu(i, j) * star.col(j);
    }
    st.norms_sq(i) = star.col(i).squaredNorm();
    if (st.norms_sq(i) <= tol::kPivot * tol::kPivot) {
      throw RankDeficient("lll_reduce: basis is not full column rank");
    }
  }
  return st;
}

}  // namespace

LllResult lll_reduce(const Eigen::Ref<const Matrix>& basis, double delta) {
  if (!(delta > 0.25 && delta < 1.0)) {
    throw std::invalid_argument("lll_reduce: delta must lie in (0.25, 1)");
  }
  require_finite(basis, "lll_reduce");
  const Index c = basis.cols();
  if (basis.rows() < c || c < 1) {
    throw RankDeficient("lll_reduce: basis must be n x c with n >= c >= 1");
  }
  Matrix work = basis;
  IntMatrix transform = IntMatrix::Identity(c, c);
  GsState gs = compute_gs(work);
  Index k = 1;
  long iterations = 0;
  const long iteration_limit = 100000 + 1000 * static_cast<long>(c) * c;
  while (k < c) {
    if (++iterations > iteration_limit) {
      throw std::runtime_error("lll_reduce: iteration limit exceeded");
    }
    for (Index j = k - 1; j >= 0; --j) {
      const auto q = static_cast<std::int64_t>(std::llround(gs.mu(k, j)));
      if (q != 0) {
        work.col(k) -= static_cast<double>(q) * work.col(j);
        transform.col(k) -= q * transform.col(j);
        for (Index t = 0; t < j; ++t) gs.mu(k, t) -= static_cast<double>(q) * gs.mu(j, t);
        gs.mu(k, j) -= static_cast<double>(q);
      }
    }
    const double lhs = gs.norms_sq(k);
    const double rhs =
        (delta - gs.mu(k, k - 1) * gs.mu(k, k - 1)) * gs.norms_sq(k - 1);
    if (lhs >= rhs - tol::kLovasz) {
      ++k;
    } else {
      work.col(k).swap(work.col(k - 1));
      transform.col(k).swap(transform.col(k - 1));
      gs = compute_gs(work);
      k = std::max<Index>(k - 1, 1);
    }
  }
  // One canonical product defines the reduced basis, so callers comparing
  // basis * transform against it see identical bits.
  Matrix reduced = basis * transform.cast<double>();
  return {std::move(reduced), std::move(transform)};
}

CvpOptimum cvp_bruteforce(const CvpInstance& inst, const QuantGrid& grid,
                          int radius) {
  inst.validate();
  if (radius < 1) {
    throw std::invalid_argument("cvp_bruteforce: radius must be >= 1");
  }
  const Index c = inst.basis.cols();
  if (c > 6) {
    throw std::invalid_argument("cvp_bruteforce: at most 6 basis columns");
  }
  const BabaiResult center = babai_nearest_plane(inst, false, grid);
  std::vector<std::int64_t> lo(static_cast<size_t>(c)), hi(static_cast<size_t>(c));
  double points = 1.0;
  for (Index j = 0; j < c; ++j) {
    std::int64_t l = center.coeffs(j) - radius;
    std::int64_t h = center.coeffs(j) + radius;
    if (grid.clipped) {
      l = std::max(l, grid.lo);
      h = std::min(h, grid.hi);
    }
    lo[static_cast<size_t>(j)] = l;
    hi[static_cast<size_t>(j)] = h;
    points *= static_cast<double>(h - l + 1);
  }
  if (points > 1e7) {
    throw SearchSpaceTooLarge("cvp_bruteforce: candidate box exceeds 1e7 points");
  }
  IntVector z(c);
  for (Index j = 0; j < c; ++j) z(j) = lo[static_cast<size_t>(j)];
  IntVector best = z;
  double best_err = std::numeric_limits<double>::infinity();
  while (true) {
    const double err = (inst.basis * z.cast<double>() - inst.target).squaredNorm();
    if (err < best_err) {
      best_err = err;
      best = z;
    }
    Index j = 0;
    while (j < c) {
      if (z(j) < hi[static_cast<size_t>(j)]) {
        ++z(j);
        break;
      }
      z(j) = lo[static_cast<size_t>(j)];
      ++j;
    }
    if (j == c) break;
  }
  return {std::move(best), best_err};
}

IntVector rtn(const CvpInstance& inst, const QuantGrid& grid) {
  inst.validate();
  linalg::GramSchmidt gs = linalg::gram_schmidt(inst.basis);
  Vector coeffs = gs.r.triangularView<Eigen::Upper>().solve(
      (gs.q.transpose() * inst.target).eval());
  IntVector z(coeffs.size());
  for (Index j = 0; j < coeffs.size(); ++j) z(j) = round_to_grid(coeffs(j), grid);
  return z;
}

RegionMap region_map(const Eigen::Ref<const Matrix>& basis,
                     const RegionWindow& window, Index resolution,
                     RegionMethod method) {
  if (basis.rows() != 2 || basis.cols() != 2) {
    throw std::invalid_argument("region_map: basis must be 2 x 2");
  }
  if (!(window.x1 > window.x0) || !(window.y1 > window.y0)) {
    throw std::invalid_argument("region_map: window must have positive extent");
  }
  if (resolution < 1) {
    throw std::invalid_argument("region_map: resolution must be >= 1");
  }
  linalg::gram_schmidt(basis);  // full-rank gate, throws RankDeficient
  const QuantGrid grid = QuantGrid::unbounded();
  Matrix flipped(2, 2);
  flipped.col(0) = basis.col(1);
  flipped.col(1) = basis.col(0);

  RegionMap out;
  out.window = window;
  out.resolution = resolution;
  const auto total = static_cast<size_t>(resolution * resolution);
  out.xs.resize(total);
  out.ys.resize(total);
  out.coeffs.resize(total);
  const double dx = (window.x1 - window.x0) / static_cast<double>(resolution);
  const double dy = (window.y1 - window.y0) / static_cast<double>(resolution);

  const Matrix basis_copy = basis;
  parallel_for(resolution, [&](Index iy) {
    // Cell-center samples keep points off region edges.
    const double y = window.y0 + (static_cast<double>(iy) + 0.5) * dy;
    for (Index ix = 0; ix < resolution; ++ix) {
      const double x = window.x0 + (static_cast<double>(ix) + 0.5) * dx;
      const size_t slot = static_cast<size_t>(iy * resolution + ix);
      CvpInstance inst{basis_copy, Vector{{x, y}}};
      std::array<std::int64_t, 2> z{};
      switch (method) {
        case RegionMethod::Voronoi: {
          CvpOptimum opt = cvp_bruteforce(inst, grid);
          z = {opt.coeffs(0), opt.coeffs(1)};
          break;
        }
        case RegionMethod::Rtn: {
          IntVector r = rtn(inst, grid);
          z = {r(0), r(1)};
          break;
        }
        case RegionMethod::Babai: {
          BabaiResult r = babai_nearest_plane(inst, false, grid);
          z = {r.coeffs(0), r.coeffs(1)};
          break;
        }
        case RegionMethod::BabaiReversed: {
          CvpInstance finst{flipped, inst.target};
          BabaiResult r = babai_nearest_plane(finst, false, grid);
          z = {r.coeffs(1), r.coeffs(0)};
          break;
        }
      }
      out.xs[slot] = x;
      out.ys[slot] = y;
      out.coeffs[slot] = z;
    }
  });
  return out;
}

void write_region_csv(const RegionMap& map, std::ostream& out) {
  out << "x,y,z1,z2\n";
  char buf[64];
  for (size_t i = 0; i < map.coeffs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", map.xs[i]);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", map.ys[i]);
    out << buf << ',' << map.coeffs[i][0] << ',' << map.coeffs[i][1] << '\n';
  }
}

}  // namespace latq::lattice
