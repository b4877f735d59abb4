#include "latq/linalg.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latq/errors.hpp"
#include "latq/tolerances.hpp"

namespace latq {

bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                ": non-finite entries are not allowed");
  }
}

}  // namespace latq

namespace latq::linalg {

namespace {

void require_square_symmetric(const Eigen::Ref<const Matrix>& m,
                              const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
  require_finite(m, what);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix must be symmetric");
  }
}

// M reversal-conjugated: out(i, j) = m(n-1-i, n-1-j).
Matrix reverse_conjugate(const Eigen::Ref<const Matrix>& m) {
  return m.reverse();
}

}  // namespace

Permutation::Permutation(std::vector<Index> map) : map_(std::move(map)) {
  const Index n = static_cast<Index>(map_.size());
  std::vector<bool> seen(static_cast<size_t>(n), false);
  for (Index v : map_) {
    if (v < 0 || v >= n || seen[static_cast<size_t>(v)]) {
      throw std::invalid_argument("Permutation: map is not a bijection");
    }
    seen[static_cast<size_t>(v)] = true;
  }
}

Permutation Permutation::identity(Index n) {
  std::vector<Index> map(static_cast<size_t>(n));
  std::iota(map.begin(), map.end(), Index{0});
  return Permutation(std::move(map));
}

Permutation Permutation::reversal(Index n) {
  std::vector<Index> map(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) map[static_cast<size_t>(i)] = n - 1 - i;
  return Permutation(std::move(map));
}

Permutation Permutation::from_one_based(const std::vector<std::int64_t>& map) {
  std::vector<Index> zero_based;
  zero_based.reserve(map.size());
  for (std::int64_t v : map) zero_based.push_back(static_cast<Index>(v) - 1);
  return Permutation(std::move(zero_based));
}

Permutation Permutation::inverse() const {
  std::vector<Index> inv(map_.size());
  for (Index pos = 0; pos < size(); ++pos) {
    inv[static_cast<size_t>(map_[static_cast<size_t>(pos)])] = pos;
  }
  return Permutation(std::move(inv));
}

Permutation Permutation::composed_with_reversal() const {
  std::vector<Index> rev(map_.rbegin(), map_.rend());
  return Permutation(std::move(rev));
}

bool Permutation::is_identity() const {
  for (Index pos = 0; pos < size(); ++pos) {
    if (map_[static_cast<size_t>(pos)] != pos) return false;
  }
  return true;
}

std::vector<std::int64_t> Permutation::one_based() const {
  std::vector<std::int64_t> out;
  out.reserve(map_.size());
  for (Index v : map_) out.push_back(static_cast<std::int64_t>(v) + 1);
  return out;
}

Matrix damped_hessian(const Eigen::Ref<const Matrix>& calib, double lambda,
                      const Permutation& order) {
  require_finite(calib, "damped_hessian");
  if (lambda < 0) {
    throw std::invalid_argument("damped_hessian: lambda must be >= 0");
  }
  const Index c = calib.cols();
  if (order.size() != c) {
    throw std::invalid_argument("damped_hessian: order size mismatch");
  }
  Matrix gram = calib.transpose() * calib;
  gram.diagonal().array() += lambda;
  Matrix h(c, c);
  for (Index a = 0; a < c; ++a) {
    for (Index b = 0; b < c; ++b) {
      h(a, b) = gram(order[a], order[b]);
    }
  }
  return 0.5 * (h + h.transpose()).eval();
}

TriFactor cholesky_upper(const Eigen::Ref<const Matrix>& h) {
  require_square_symmetric(h, "cholesky_upper");
  const Index n = h.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      double sum = h(j, i);
      for (Index k = 0; k < j; ++k) sum -= a(k, j) * a(k, i);
      a(j, i) = sum / a(j, j);
    }
    double pivot = h(i, i);
    for (Index k = 0; k < i; ++k) pivot -= a(k, i) * a(k, i);
    if (pivot <= tol::kPivot) {
      throw NotPositiveDefinite("cholesky_upper: non-positive pivot at index " +
                                std::to_string(i));
    }
    a(i, i) = std::sqrt(pivot);
  }
  return {TriKind::UpperCholesky, std::move(a), Vector()};
}

TriFactor ldl_lower(const Eigen::Ref<const Matrix>& m) {
  require_square_symmetric(m, "ldl_lower");
  const Index n = m.rows();
  Matrix l = Matrix::Identity(n, n);
  Vector d(n);
  for (Index j = 0; j < n; ++j) {
    double pivot = m(j, j);
    for (Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k) * d(k);
    if (pivot <= tol::kPivot) {
      throw NotPositiveDefinite("ldl_lower: non-positive pivot at index " +
                                std::to_string(j));
    }
    d(j) = pivot;
    for (Index i = j + 1; i < n; ++i) {
      double sum = m(i, j);
      for (Index k = 0; k < j; ++k) sum -= l(i, k) * l(j, k) * d(k);
      l(i, j) = sum / pivot;
    }
  }
  return {TriKind::LowerUnit, std::move(l), std::move(d)};
}

TriFactor udu_upper(const Eigen::Ref<const Matrix>& m) {
  require_square_symmetric(m, "udu_upper");
  const Index n = m.rows();
  const Matrix flipped = reverse_conjugate(m);
  TriFactor lower = ldl_lower(flipped);
  Matrix u(n, n);
  Vector d(n);
  for (Index i = 0; i < n; ++i) {
    d(i) = lower.diag(n - 1 - i);
    for (Index j = 0; j < n; ++j) {
      u(i, j) = lower.matrix(n - 1 - i, n - 1 - j);
    }
  }
  return {TriKind::UpperUnit, std::move(u), std::move(d)};
}

Matrix spd_inverse(const Eigen::Ref<const Matrix>& h) {
  TriFactor chol = cholesky_upper(h);
  const Index n = h.rows();
  Matrix upper_inv = chol.matrix.triangularView<Eigen::Upper>().solve(
      Matrix::Identity(n, n));
  Matrix inv = upper_inv * upper_inv.transpose();
  return 0.5 * (inv + inv.transpose()).eval();
}

GramSchmidt gram_schmidt(const Eigen::Ref<const Matrix>& basis) {
  require_finite(basis, "gram_schmidt");
  const Index n = basis.rows();
  const Index c = basis.cols();
  if (n < c || c < 1) {
    throw RankDeficient("gram_schmidt: basis has more columns than rows");
  }
  Matrix q(n, c);
  Matrix r = Matrix::Zero(c, c);
  for (Index j = 0; j < c; ++j) {
    Vector v = basis.col(j);
    for (Index k = 0; k < j; ++k) {
      const double coef = q.col(k).dot(v);
      v -= coef * q.col(k);
      r(k, j) += coef;
    }
    // Second pass keeps the columns orthonormal even for ill-conditioned
    // input; the coefficients fold into the same r entries.
    for (Index k = 0; k < j; ++k) {
      const double coef = q.col(k).dot(v);
      v -= coef * q.col(k);
      r(k, j) += coef;
    }
    const double norm = v.norm();
    if (norm <= tol::kPivot) {
      throw RankDeficient("gram_schmidt: column " + std::to_string(j) +
                          " is linearly dependent");
    }
    r(j, j) = norm;
    q.col(j) = v / norm;
  }
  return {std::move(q), std::move(r)};
}

}  // namespace latq::linalg
