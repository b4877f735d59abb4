#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace latq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

bool all_finite(const Eigen::Ref<const Matrix>& m);

// Throws std::invalid_argument naming `what` if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

}  // namespace latq
