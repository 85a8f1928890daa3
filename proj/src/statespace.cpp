#include "aoisim/statespace.hpp"

#include <cmath>
#include <string>

namespace aoisim {

bool is_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
  if (m.size() == 0) {
    throw MatrixShapeError(std::string(what) + ": empty matrix");
  }
  if (!m.allFinite()) {
    throw MatrixShapeError(std::string(what) + ": non-finite entries");
  }
}

Matrix mat_power(const Matrix& a, int k) {
  if (a.rows() != a.cols()) {
    throw MatrixShapeError("mat_power: matrix must be square");
  }
  if (k < 0) {
    throw MatrixShapeError("mat_power: exponent must be nonnegative");
  }
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) {
    result = result * a;
  }
  return result;
}

PowerCache::PowerCache(Matrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) {
    throw MatrixShapeError("PowerCache: matrix must be square");
  }
  powers_.push_back(Matrix::Identity(a_.rows(), a_.cols()));
}

const Matrix& PowerCache::power(int k) {
  if (k < 0) {
    throw MatrixShapeError("PowerCache: exponent must be nonnegative");
  }
  while (static_cast<int>(powers_.size()) <= k) {
    powers_.push_back(powers_.back() * a_);
  }
  return powers_[static_cast<std::size_t>(k)];
}

PseudoInverseResult pseudo_inverse(const Matrix& b) {
  require_finite(b, "pseudo_inverse");
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = std::max(b.rows(), b.cols()) *
                        std::numeric_limits<double>::epsilon() *
                        (sv.size() > 0 ? sv(0) : 0.0);

  Eigen::Index rank = 0;
  Vector inv_sv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) {
      inv_sv(i) = 1.0 / sv(i);
      ++rank;
    }
  }
  Matrix pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
  return {std::move(pinv), rank};
}

Eigendecomposition eig_decompose(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) {
    throw MatrixShapeError("eig_decompose: matrix must be square");
  }
  require_finite(a, "eig_decompose");
  if (tol <= 0.0) {
    throw MatrixShapeError("eig_decompose: tol must be positive");
  }

  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/true);
  Eigendecomposition out;
  out.p = solver.eigenvectors();
  out.lambda = solver.eigenvalues();

  // Condition of the eigenvector basis: defective matrices come back with
  // (nearly) parallel columns, which blows this up.
  Eigen::JacobiSVD<ComplexMatrix> svd(out.p);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double smax = sv(0);
  if (!(smin > 0.0) || smax / smin > 1.0 / tol) {
    out.diagonalizable = false;
    return out;
  }

  const Matrix reconstructed =
      (out.p * out.lambda.asDiagonal() * out.p.inverse()).real();
  const double scale = 1.0 + a.cwiseAbs().maxCoeff();
  out.diagonalizable =
      (reconstructed - a).cwiseAbs().maxCoeff() <= 1e-9 * scale;
  return out;
}

ComplexMatrix transform_covariance(const ComplexMatrix& p,
                                   const Matrix& sigma) {
  if (p.rows() != p.cols() || p.rows() != sigma.rows() ||
      sigma.rows() != sigma.cols()) {
    throw MatrixShapeError("transform_covariance: dimension mismatch");
  }
  Eigen::FullPivLU<ComplexMatrix> lu(p);
  if (!lu.isInvertible()) {
    throw SingularMatrixError("transform_covariance: singular basis");
  }
  const ComplexMatrix y = lu.solve(sigma.cast<std::complex<double>>());
  // sigma' = y (P^H)^-1; equivalently sigma'^H = P^-1 y^H
  ComplexMatrix result = lu.solve(y.adjoint()).adjoint();
  result = 0.5 * (result + result.adjoint().eval());
  return result;
}

Matrix transform_covariance(const Matrix& p, const Matrix& sigma) {
  if (p.rows() != p.cols() || p.rows() != sigma.rows() ||
      sigma.rows() != sigma.cols()) {
    throw MatrixShapeError("transform_covariance: dimension mismatch");
  }
  Eigen::FullPivLU<Matrix> lu(p);
  if (!lu.isInvertible()) {
    throw SingularMatrixError("transform_covariance: singular basis");
  }
  const Matrix y = lu.solve(sigma);
  Matrix result = lu.solve(y.transpose()).transpose();
  result = 0.5 * (result + result.transpose().eval());
  return result;
}

}  // namespace aoisim
