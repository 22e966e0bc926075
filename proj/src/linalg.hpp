#pragma once

// Dense linear algebra kernels.
//
// Linear solves are delegated to Eigen's partial-pivot LU with an explicit
// reciprocal-condition guard. The symmetric eigensolver is a hand-rolled
// cyclic Jacobi iteration with a deterministic ordering and sign convention,
// so eigenvector frames are bit-stable across platforms and runs.

#include <Eigen/Dense>

#include "common.hpp"

namespace fb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// LU factorization wrapper that remembers an rcond estimate. solve() refuses
// factors with rcond below 1e-12 and reports SingularFactor.
class CheckedLu {
 public:
  CheckedLu() = default;
  explicit CheckedLu(const Matrix& a, const char* what = "matrix");

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  double rcond() const { return rcond_; }

 private:
  void check() const;
  Eigen::PartialPivLU<Matrix> lu_;
  double rcond_ = 0.0;
  const char* what_ = "matrix";
};

Vector solve_checked(const Matrix& a, const Vector& b,
                     const char* what = "matrix");
Matrix solve_checked(const Matrix& a, const Matrix& b,
                     const char* what = "matrix");

struct EigenDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // columns; vectors.col(k) pairs with values[k]
};

// Cyclic Jacobi sweeps on a symmetric matrix. Convergence: off-diagonal
// Frobenius norm <= 1e-14 * ||A||_F. Eigenvalues ascending; each column is
// signed so its largest-magnitude entry is positive (lowest index on ties).
EigenDecomposition jacobi_eigen(const Matrix& a);

}  // namespace fb
