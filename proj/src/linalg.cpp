#include "mjls/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mjls {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

namespace {

Eigen::VectorXd symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double scale_of(const Eigen::VectorXd& eig) {
  if (eig.size() == 0) return 1.0;
  return std::max(1.0, eig.cwiseAbs().maxCoeff());
}

}  // namespace

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  return symmetric_eigenvalues(m).minCoeff();
}

bool is_positive_definite(const Matrix& m) {
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) return false;
  const auto eig = symmetric_eigenvalues(m);
  return eig.minCoeff() > kDefiniteTol * scale_of(eig);
}

bool is_positive_semidefinite(const Matrix& m) {
  if (m.size() == 0) return true;
  if (!m.allFinite()) return false;
  const auto eig = symmetric_eigenvalues(m);
  return eig.minCoeff() >= -kDefiniteTol * scale_of(eig);
}

double spd_condition_number(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  const auto eig = symmetric_eigenvalues(m);
  const double lo = eig.minCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return eig.maxCoeff() / lo;
}

int numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double threshold = 1e-10 * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > threshold) ++rank;
  }
  return rank;
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace mjls
