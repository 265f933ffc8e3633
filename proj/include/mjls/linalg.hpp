#pragma once

#include <Eigen/Dense>

namespace mjls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Tolerances shared across modules.
inline constexpr double kExactZeroTol = 1e-12;   // structural zeros, row sums
inline constexpr double kDefiniteTol = 1e-10;    // minimum-eigenvalue threshold
inline constexpr double kMaxConditionNumber = 1e12;

// Symmetric part (M + Mᵀ)/2.
Matrix symmetrized(const Matrix& m);

// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Matrix& m);

// Cholesky succeeds and λ_min > kDefiniteTol·max(1, ‖m‖₂).
bool is_positive_definite(const Matrix& m);

// λ_min ≥ −kDefiniteTol·max(1, ‖m‖₂).
bool is_positive_semidefinite(const Matrix& m);

// λ_max/λ_min of a symmetric positive definite matrix; +inf if λ_min ≤ 0.
double spd_condition_number(const Matrix& m);

// Numerical rank from singular values with threshold 1e-10·σ_max.
int numerical_rank(const Matrix& m);

double max_abs_difference(const Matrix& a, const Matrix& b);

}  // namespace mjls
