#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace aoisim {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexRowVector = Eigen::RowVectorXcd;

/// Base class for conditions that abort a numerical computation
/// (singular factor, non-PSD covariance, exhausted history, ...).
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class MatrixShapeError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public NumericError {
  using NumericError::NumericError;
};

bool is_finite(const Matrix& m);
void require_finite(const Matrix& m, const char* what);

/// A^k by iterative multiplication. A^0 is the identity.
Matrix mat_power(const Matrix& a, int k);

/// Cache of consecutive powers A^0..A^k, grown on demand. The estimator and
/// the variance accumulation walk powers in order, so plain iterative
/// multiplication amortizes to one matrix product per new power.
class PowerCache {
 public:
  explicit PowerCache(Matrix a);
  const Matrix& power(int k);
  const Matrix& base() const { return a_; }

 private:
  Matrix a_;
  std::vector<Matrix> powers_;
};

struct PseudoInverseResult {
  Matrix matrix;       ///< the Moore-Penrose pseudo-inverse
  Eigen::Index rank;   ///< numerical rank of the input
};

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// max(rows, cols) * eps * sigma_max count as zero; the numerical rank is
/// reported alongside.
PseudoInverseResult pseudo_inverse(const Matrix& b);

struct Eigendecomposition {
  ComplexMatrix p;        ///< eigenvector columns
  ComplexVector lambda;   ///< eigenvalues, same order as columns of p
  bool diagonalizable = false;
};

/// Eigendecomposition with defectiveness detection. The matrix is reported
/// non-diagonalizable when cond(P) exceeds 1/tol or when the reconstruction
/// P Lambda P^-1 misses A by more than 1e-9 * (1 + max|a_ij|), so that
/// diagonalizable=true always comes with a numerically usable basis.
Eigendecomposition eig_decompose(const Matrix& a, double tol = 1e-8);

/// Sigma' = P^-1 Sigma P^-H, the covariance of w' = P^-1 w.
/// The result is re-hermitianized to absorb rounding.
ComplexMatrix transform_covariance(const ComplexMatrix& p, const Matrix& sigma);
Matrix transform_covariance(const Matrix& p, const Matrix& sigma);

}  // namespace aoisim
