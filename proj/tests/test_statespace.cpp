#include <doctest.h>

#include <complex>
#include <random>

#include "aoisim/statespace.hpp"

using namespace aoisim;

namespace {

// Independent multiply oracle: textbook triple loop, no Eigen products.
Matrix naive_multiply(const Matrix& x, const Matrix& y) {
  Matrix out = Matrix::Zero(x.rows(), y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        acc += x(i, k) * y(k, j);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix naive_power(const Matrix& a, int k) {
  Matrix out = Matrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) {
    out = naive_multiply(out, a);
  }
  return out;
}

double max_abs_diff(const Matrix& x, const Matrix& y) {
  return (x - y).cwiseAbs().maxCoeff();
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows,
                     Eigen::Index cols) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = unit(rng);
    }
  }
  return m;
}

Matrix table1_a() {
  Matrix a(3, 3);
  a << 1, 1, 0, 0, 1, 0, 0, 0, 1;
  return a;
}

}  // namespace

TEST_CASE("mat_power basics") {
  std::mt19937_64 rng(7);
  const Matrix a = random_matrix(rng, 4, 4);
  CHECK(max_abs_diff(mat_power(a, 0), Matrix::Identity(4, 4)) == 0.0);

  const Matrix a2 = mat_power(table1_a(), 2);
  Matrix expected(3, 3);
  expected << 1, 2, 0, 0, 1, 0, 0, 0, 1;
  CHECK(max_abs_diff(a2, expected) == 0.0);
  CHECK(max_abs_diff(a2, naive_power(table1_a(), 2)) == 0.0);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 3.0;
  const Matrix d3 = mat_power(d, 3);
  CHECK(d3(0, 0) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(d3(1, 1) == doctest::Approx(27.0).epsilon(1e-15));

  CHECK_THROWS_AS(mat_power(random_matrix(rng, 2, 3), 2), MatrixShapeError);
  CHECK_THROWS_AS(mat_power(d, -1), MatrixShapeError);
}

TEST_CASE("mat_power exponent additivity") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_int_distribution<int> expo(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = dim(rng);
    const Matrix a = random_matrix(rng, n, n);
    const int j = expo(rng);
    const int k = expo(rng);
    const Matrix lhs = mat_power(a, j + k);
    const Matrix rhs = mat_power(a, j) * mat_power(a, k);
    const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
    CHECK(max_abs_diff(lhs, rhs) <= 1e-9 * scale);
  }
}

TEST_CASE("power cache matches mat_power") {
  std::mt19937_64 rng(13);
  const Matrix a = random_matrix(rng, 3, 3);
  PowerCache cache(a);
  for (int k : {5, 0, 2, 9}) {
    CHECK(max_abs_diff(cache.power(k), mat_power(a, k)) <= 1e-12);
  }
}

TEST_CASE("pseudo_inverse known values") {
  const Matrix eye = Matrix::Identity(3, 3);
  auto [pinv_eye, rank_eye] = pseudo_inverse(eye);
  CHECK(max_abs_diff(pinv_eye, eye) <= 1e-12);
  CHECK(rank_eye == 3);

  Matrix column(3, 1);
  column << 0.5, 0.5, 0.0;
  auto [pinv_col, rank_col] = pseudo_inverse(column);
  Matrix expected(1, 3);
  expected << 1.0, 1.0, 0.0;
  CHECK(max_abs_diff(pinv_col, expected) <= 1e-12);
  CHECK(rank_col == 1);

  Matrix scalar(1, 1);
  scalar << 2.0;
  auto [pinv_scalar, rank_scalar] = pseudo_inverse(scalar);
  CHECK(pinv_scalar(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rank_scalar == 1);
}

TEST_CASE("pseudo_inverse satisfies the four Penrose identities") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index rows = dim(rng);
    const Eigen::Index cols = dim(rng);
    Matrix b;
    if (trial % 3 == 0) {
      // force rank deficiency via a thin product
      const Eigen::Index r = std::max<Eigen::Index>(1, std::min(rows, cols) - 1);
      b = random_matrix(rng, rows, r) * random_matrix(rng, r, cols);
    } else {
      b = random_matrix(rng, rows, cols);
    }
    const Matrix p = pseudo_inverse(b).matrix;
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    CHECK(max_abs_diff(b * p * b, b) <= 1e-9 * scale);
    CHECK(max_abs_diff(p * b * p, p) <= 1e-9 * std::max(1.0, p.cwiseAbs().maxCoeff()));
    CHECK(max_abs_diff((b * p).transpose(), b * p) <= 1e-9);
    CHECK(max_abs_diff((p * b).transpose(), p * b) <= 1e-9);
  }
}

TEST_CASE("eig_decompose diagonal and rotation") {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  d(2, 2) = 3.0;
  const Eigendecomposition diag = eig_decompose(d);
  CHECK(diag.diagonalizable);
  std::vector<double> values;
  for (Eigen::Index i = 0; i < diag.lambda.size(); ++i) {
    CHECK(std::abs(diag.lambda(i).imag()) <= 1e-12);
    values.push_back(diag.lambda(i).real());
  }
  std::sort(values.begin(), values.end());
  CHECK(values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(values[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(values[2] == doctest::Approx(3.0).epsilon(1e-12));

  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const Eigendecomposition r = eig_decompose(rot);
  CHECK(r.diagonalizable);
  std::vector<double> imag = {r.lambda(0).imag(), r.lambda(1).imag()};
  std::sort(imag.begin(), imag.end());
  CHECK(imag[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(imag[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.lambda(0).real()) <= 1e-12);
}

TEST_CASE("eig_decompose flags the defective upper Jordan block") {
  const Eigendecomposition eig = eig_decompose(table1_a());
  CHECK_FALSE(eig.diagonalizable);
}

TEST_CASE("eig_decompose reconstruction bound on random matrices") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> dim(2, 5);
  int diagonalizable_seen = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = dim(rng);
    const Matrix a = random_matrix(rng, n, n);
    const Eigendecomposition eig = eig_decompose(a);
    if (!eig.diagonalizable) {
      continue;
    }
    ++diagonalizable_seen;
    const ComplexMatrix rec = eig.p * eig.lambda.asDiagonal() * eig.p.inverse();
    const double err = (rec.real() - a).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-9 * (1.0 + a.cwiseAbs().maxCoeff()));

    // diago route reproduces direct powers
    for (int k : {1, 7, 20}) {
      ComplexVector lam_k = ComplexVector::Ones(n);
      for (int i = 0; i < k; ++i) {
        lam_k = lam_k.cwiseProduct(eig.lambda);
      }
      const Matrix via_eig =
          (eig.p * lam_k.asDiagonal() * eig.p.inverse()).real();
      const Matrix direct = mat_power(a, k);
      const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
      CHECK((via_eig - direct).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    }
  }
  CHECK(diagonalizable_seen >= 30);  // random matrices are rarely defective
}

TEST_CASE("transform_covariance") {
  const Matrix eye = Matrix::Identity(2, 2);
  std::mt19937_64 rng(29);
  const Matrix any = random_matrix(rng, 2, 2);
  const Matrix sym = any * any.transpose();
  CHECK(max_abs_diff(transform_covariance(eye, sym), sym) <= 1e-12);

  Matrix p = Matrix::Zero(2, 2);
  p(0, 0) = 2.0;
  p(1, 1) = 1.0;
  const Matrix scaled = transform_covariance(p, eye);
  CHECK(scaled(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(scaled(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(scaled(0, 1)) <= 1e-15);

  CHECK(max_abs_diff(transform_covariance(any, Matrix::Zero(2, 2)),
                     Matrix::Zero(2, 2)) <= 1e-15);

  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(transform_covariance(singular, eye), SingularMatrixError);
}

TEST_CASE("transform_covariance keeps hermitian PSD structure") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix any = random_matrix(rng, 3, 3);
    const Matrix sigma = any * any.transpose();
    Matrix p = random_matrix(rng, 3, 3);
    p += 3.0 * Matrix::Identity(3, 3);  // keep it comfortably invertible
    const ComplexMatrix out =
        transform_covariance(ComplexMatrix(p.cast<std::complex<double>>()),
                             sigma);
    CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(out);
    CHECK(eig.eigenvalues().minCoeff() >=
          -1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff()));
  }
}
