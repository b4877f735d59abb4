#include "latq/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "latq/errors.hpp"
#include "latq/linalg.hpp"
#include "latq/rng.hpp"
#include "latq/synth.hpp"
#include "latq/tolerances.hpp"
#include "oracles.hpp"

using namespace latq;
using lattice::BabaiResult;
using lattice::CvpInstance;
using lattice::QuantGrid;

TEST_SUITE_BEGIN("lattice");

TEST_CASE("identity basis rounds coordinatewise") {
  CvpInstance inst{Matrix::Identity(2, 2), Vector{{0.3, -0.7}}};
  const BabaiResult res =
      lattice::babai_nearest_plane(inst, false, QuantGrid::unbounded());
  CHECK(res.coeffs(0) == 0);
  CHECK(res.coeffs(1) == -1);
  CHECK((res.residual - Vector{{-0.3, -0.3}}).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("worked 2-d instance") {
  Matrix basis(2, 2);
  basis << 2, 1, 0, 1;
  CvpInstance inst{basis, Vector{{1.2, 0.55}}};
  const BabaiResult res =
      lattice::babai_nearest_plane(inst, false, QuantGrid::unbounded());
  // Hand execution: plane 2 rounds 0.55 to 1, plane 1 rounds 0.1 to 0.
  CHECK(res.coeffs(0) == 0);
  CHECK(res.coeffs(1) == 1);
  CHECK((res.residual - Vector{{-0.2, 0.45}}).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("residual lands in the rounding cell and satisfies the bound") {
  Rng rng(101);
  for (int rep = 0; rep < 200; ++rep) {
    const Index c = 1 + rng.below(4);
    const Index n = c + rng.below(4);
    const CvpInstance inst = synth::random_cvp(rng, n, c);
    const BabaiResult res =
        lattice::babai_nearest_plane(inst, false, QuantGrid::unbounded());
    const linalg::GramSchmidt gs = linalg::gram_schmidt(inst.basis);
    // The box bound covers the in-span part of the residual; for n > c the
    // component orthogonal to the basis span is unavoidable and exempt.
    double bound = 0.0;
    double in_span_sq = 0.0;
    for (Index j = 0; j < c; ++j) {
      const double edge = gs.r(j, j);
      const double coord = gs.q.col(j).dot(res.residual);
      CHECK(std::abs(coord) <= 0.5 * edge + tol::kErrorComparison);
      bound += 0.25 * edge * edge;
      in_span_sq += coord * coord;
    }
    CHECK(in_span_sq <= bound + tol::kErrorComparison);
    CHECK(res.residual.squaredNorm() >= in_span_sq - tol::kErrorComparison);
  }
}

TEST_CASE("clipped grids constrain the coefficients") {
  Rng rng(103);
  const QuantGrid grid = QuantGrid::clipped_range(-2, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const CvpInstance inst = synth::random_cvp(rng, 4, 3, 8.0);
    const BabaiResult res = lattice::babai_nearest_plane(inst, false, grid);
    for (Index j = 0; j < 3; ++j) CHECK(grid.contains(res.coeffs(j)));
  }
}

TEST_CASE("lll with a clipped grid is refused") {
  CvpInstance inst{Matrix::Identity(2, 2), Vector{{0.1, 0.2}}};
  CHECK_THROWS_AS(
      lattice::babai_nearest_plane(inst, true, QuantGrid::clipped_range(-1, 1)),
      IncompatibleOptions);
}

TEST_CASE("lll reduction on a skewed 2-d basis") {
  Matrix basis(2, 2);
  basis << 1, 100, 0, 1;
  const lattice::LllResult red = lattice::lll_reduce(basis);
  CHECK(oracles::bareiss_det(red.transform) * oracles::bareiss_det(red.transform) == 1);
  CHECK(red.reduced.colwise().norm().maxCoeff() <=
        basis.colwise().norm().maxCoeff());
  // Lovasz condition and size reduction on the output.
  const linalg::GramSchmidt gs = linalg::gram_schmidt(red.reduced);
  const double mu = gs.q.col(0).dot(red.reduced.col(1)) / gs.r(0, 0);
  CHECK(std::abs(mu) <= 0.5 + 1e-9);
  CHECK(gs.r(1, 1) * gs.r(1, 1) >=
        (0.75 - mu * mu) * gs.r(0, 0) * gs.r(0, 0) - 1e-9);
}

TEST_CASE("lll output is basis times transform, bitwise") {
  Rng rng(107);
  for (int rep = 0; rep < 25; ++rep) {
    const Index c = 2 + rng.below(3);
    Matrix basis(c, c);
    for (Index i = 0; i < c; ++i)
      for (Index j = 0; j < c; ++j)
        basis(i, j) = static_cast<double>(rng.below(21)) - 10.0;
    if (std::abs(basis.determinant()) < 0.5) continue;  // integer basis: det 0 means singular
    const lattice::LllResult red = lattice::lll_reduce(basis);
    const Matrix rebuilt = basis * red.transform.cast<double>();
    CHECK((rebuilt.array() == red.reduced.array()).all());
    const std::int64_t det = oracles::bareiss_det(red.transform);
    CHECK((det == 1 || det == -1));

    const linalg::GramSchmidt gs = linalg::gram_schmidt(red.reduced);
    for (Index k = 1; k < c; ++k) {
      const double mu =
          gs.q.col(k - 1).dot(red.reduced.col(k)) / gs.r(k - 1, k - 1);
      CHECK(gs.r(k, k) * gs.r(k, k) >=
            (0.75 - mu * mu) * gs.r(k - 1, k - 1) * gs.r(k - 1, k - 1) - 1e-9);
    }
  }
}

TEST_CASE("lll rejects bad delta and rank-deficient bases") {
  CHECK_THROWS_AS(lattice::lll_reduce(Matrix::Identity(2, 2), 0.25),
                  std::invalid_argument);
  CHECK_THROWS_AS(lattice::lll_reduce(Matrix::Identity(2, 2), 1.0),
                  std::invalid_argument);
  Matrix dep(2, 2);
  dep << 1, 2, 2, 4;
  CHECK_THROWS_AS(lattice::lll_reduce(dep), RankDeficient);
}

TEST_CASE("lll helps babai on a skewed basis") {
  Matrix basis(2, 2);
  basis << 31, 1, 1, 0;  // long leading column, tiny orthogonal remainder
  Rng rng(109);
  const QuantGrid grid = QuantGrid::unbounded();
  double plain_total = 0.0, reduced_total = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    CvpInstance inst{basis, Vector{{rng.uniform(-20, 20), rng.uniform(-20, 20)}}};
    plain_total +=
        lattice::babai_nearest_plane(inst, false, grid).residual.squaredNorm();
    reduced_total +=
        lattice::babai_nearest_plane(inst, true, grid).residual.squaredNorm();
  }
  CHECK(reduced_total < plain_total);
}

TEST_CASE("bruteforce equals babai on an orthogonal basis") {
  Rng rng(113);
  Matrix basis(2, 2);
  basis << 3, 0, 0, 2;
  for (int rep = 0; rep < 20; ++rep) {
    CvpInstance inst{basis, Vector{{rng.uniform(-5, 5), rng.uniform(-5, 5)}}};
    const BabaiResult nl =
        lattice::babai_nearest_plane(inst, false, QuantGrid::unbounded());
    const lattice::CvpOptimum opt =
        lattice::cvp_bruteforce(inst, QuantGrid::unbounded());
    CHECK((opt.coeffs.array() == nl.coeffs.array()).all());
    CHECK(opt.err_sq == doctest::Approx(nl.residual.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("bruteforce never exceeds babai and sometimes beats it") {
  // Acute basis with a short orthogonalized second column: nearest-plane
  // rounding is suboptimal for some targets.
  Matrix basis(2, 2);
  basis << 1.0, 0.52, 0.0, 0.12;
  Rng rng(127);
  const QuantGrid grid = QuantGrid::unbounded();
  bool beaten = false;
  for (int rep = 0; rep < 400; ++rep) {
    CvpInstance inst{basis, Vector{{rng.uniform(-3, 3), rng.uniform(-3, 3)}}};
    const BabaiResult nl = lattice::babai_nearest_plane(inst, false, grid);
    const lattice::CvpOptimum opt = lattice::cvp_bruteforce(inst, grid, 2);
    CHECK(opt.err_sq <= nl.residual.squaredNorm());
    if (opt.err_sq < nl.residual.squaredNorm() - 1e-9 &&
        (opt.coeffs.array() != nl.coeffs.array()).any()) {
      beaten = true;
    }
  }
  CHECK(beaten);
}

TEST_CASE("bruteforce guards its search space") {
  CvpInstance inst{Matrix::Identity(6, 6), Vector::Zero(6)};
  CHECK_THROWS_AS(lattice::cvp_bruteforce(inst, QuantGrid::unbounded(), 7),
                  SearchSpaceTooLarge);
  CvpInstance wide{Matrix::Identity(7, 7), Vector::Zero(7)};
  CHECK_THROWS_AS(lattice::cvp_bruteforce(wide, QuantGrid::unbounded()),
                  std::invalid_argument);
}

TEST_CASE("rtn rounds least-squares coefficients") {
  Matrix basis(2, 2);
  basis << 2, 0, 0, 1;
  CvpInstance inst{basis, Vector{{3.2, -0.6}}};
  const IntVector z = lattice::rtn(inst, QuantGrid::unbounded());
  CHECK(z(0) == 2);  // 1.6 rounds to 2
  CHECK(z(1) == -1);
  // On a skewed basis rtn can be worse than nearest-plane rounding.
  Matrix skew(2, 2);
  skew << 1, 0.52, 0, 0.12;
  Rng rng(131);
  bool rtn_worse = false;
  for (int rep = 0; rep < 300 && !rtn_worse; ++rep) {
    CvpInstance s{skew, Vector{{rng.uniform(-3, 3), rng.uniform(-3, 3)}}};
    const IntVector zr = lattice::rtn(s, QuantGrid::unbounded());
    const BabaiResult nl =
        lattice::babai_nearest_plane(s, false, QuantGrid::unbounded());
    const double rtn_err = (s.basis * zr.cast<double>() - s.target).squaredNorm();
    if (rtn_err > nl.residual.squaredNorm() + 1e-9) rtn_worse = true;
  }
  CHECK(rtn_worse);
}

TEST_CASE("region_map on the identity basis is coordinatewise rounding") {
  for (auto method :
       {lattice::RegionMethod::Voronoi, lattice::RegionMethod::Rtn,
        lattice::RegionMethod::Babai, lattice::RegionMethod::BabaiReversed}) {
    const lattice::RegionMap map = lattice::region_map(
        Matrix::Identity(2, 2), {-2.0, 2.0, -2.0, 2.0}, 21, method);
    REQUIRE(map.coeffs.size() == 21 * 21);
    for (size_t i = 0; i < map.coeffs.size(); ++i) {
      CHECK(map.coeffs[i][0] ==
            lattice::round_to_grid(map.xs[i], QuantGrid::unbounded()));
      CHECK(map.coeffs[i][1] ==
            lattice::round_to_grid(map.ys[i], QuantGrid::unbounded()));
    }
  }
}

TEST_CASE("region_map babai cells are gram-schmidt boxes") {
  Matrix basis(2, 2);
  basis << 1.0, 0.6, 0.0, 0.5;
  const lattice::RegionMap map = lattice::region_map(
      basis, {-1.5, 1.5, -1.5, 1.5}, 24, lattice::RegionMethod::Babai);
  const linalg::GramSchmidt gs = linalg::gram_schmidt(basis);
  for (size_t i = 0; i < map.coeffs.size(); ++i) {
    Vector z{{static_cast<double>(map.coeffs[i][0]),
              static_cast<double>(map.coeffs[i][1])}};
    const Vector residual = basis * z - Vector{{map.xs[i], map.ys[i]}};
    for (Index j = 0; j < 2; ++j) {
      CHECK(std::abs(gs.q.col(j).dot(residual)) <= 0.5 * gs.r(j, j) + 1e-9);
    }
  }
}

TEST_CASE("region_map reversed processes the columns in the other order") {
  Matrix basis(2, 2);
  basis << 1.0, 0.6, 0.0, 0.5;
  Matrix flipped(2, 2);
  flipped.col(0) = basis.col(1);
  flipped.col(1) = basis.col(0);
  const lattice::RegionMap fwd = lattice::region_map(
      basis, {-1.0, 1.0, -1.0, 1.0}, 12, lattice::RegionMethod::BabaiReversed);
  const lattice::RegionMap plain = lattice::region_map(
      basis, {-1.0, 1.0, -1.0, 1.0}, 12, lattice::RegionMethod::Babai);
  const linalg::GramSchmidt gs = linalg::gram_schmidt(flipped);
  bool differs = false;
  for (size_t i = 0; i < fwd.coeffs.size(); ++i) {
    Vector zf{{static_cast<double>(fwd.coeffs[i][1]),
               static_cast<double>(fwd.coeffs[i][0])}};
    const Vector residual = flipped * zf - Vector{{fwd.xs[i], fwd.ys[i]}};
    for (Index j = 0; j < 2; ++j) {
      CHECK(std::abs(gs.q.col(j).dot(residual)) <= 0.5 * gs.r(j, j) + 1e-9);
    }
    if (plain.coeffs[i] != fwd.coeffs[i]) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("region csv has a header and one row per sample") {
  const lattice::RegionMap map = lattice::region_map(
      Matrix::Identity(2, 2), {-1.0, 1.0, -1.0, 1.0}, 3,
      lattice::RegionMethod::Rtn);
  std::ostringstream out;
  lattice::write_region_csv(map, out);
  const std::string text = out.str();
  CHECK(text.rfind("x,y,z1,z2\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("region_map rejects singular bases") {
  Matrix dep(2, 2);
  dep << 1, 2, 2, 4;
  CHECK_THROWS_AS(
      lattice::region_map(dep, {-1, 1, -1, 1}, 4, lattice::RegionMethod::Babai),
      RankDeficient);
}

TEST_SUITE_END();
