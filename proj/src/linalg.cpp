#include "linalg.hpp"

#include <cmath>

namespace fb {

CheckedLu::CheckedLu(const Matrix& a, const char* what) : what_(what) {
  require(a.rows() == a.cols(), ErrorCode::InvalidArgument,
          "solve requires a square matrix");
  lu_ = Eigen::PartialPivLU<Matrix>(a);
  rcond_ = lu_.rcond();
}

void CheckedLu::check() const {
  if (!(rcond_ > 1e-12)) {
    fail(ErrorCode::SingularFactor,
         std::string(what_) + " is singular to working precision (rcond=" +
             std::to_string(rcond_) + ")");
  }
}

Vector CheckedLu::solve(const Vector& b) const {
  check();
  return lu_.solve(b);
}

Matrix CheckedLu::solve(const Matrix& b) const {
  check();
  return lu_.solve(b);
}

Vector solve_checked(const Matrix& a, const Vector& b, const char* what) {
  return CheckedLu(a, what).solve(b);
}

Matrix solve_checked(const Matrix& a, const Matrix& b, const char* what) {
  return CheckedLu(a, what).solve(b);
}

EigenDecomposition jacobi_eigen(const Matrix& a) {
  const Eigen::Index n = a.rows();
  require(n > 0 && a.cols() == n, ErrorCode::InvalidArgument,
          "eigendecomposition requires a nonempty square matrix");
  double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()),
          ErrorCode::InvalidArgument, "matrix is not symmetric");

  Matrix d = (a + a.transpose()) / 2.0;
  Matrix v = Matrix::Identity(n, n);
  const double norm = d.norm();
  const double tol = 1e-14 * (norm > 0 ? norm : 1.0);

  auto offdiag = [&]() {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * d(i, j) * d(i, j);
    return std::sqrt(s);
  };

  const int max_sweeps = 100;
  int sweep = 0;
  while (offdiag() > tol) {
    if (++sweep > max_sweeps)
      fail(ErrorCode::EigenFailure, "Jacobi iteration did not converge");
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double apq = d(p, q);
        if (apq == 0.0) continue;
        double theta = (d(q, q) - d(p, p)) / (2.0 * apq);
        // Stable tangent of the rotation angle, smaller root.
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          double dkp = d(k, p), dkq = d(k, q);
          d(k, p) = c * dkp - s * dkq;
          d(k, q) = s * dkp + c * dkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          double dpk = d(p, k), dqk = d(q, k);
          d(p, k) = c * dpk - s * dqk;
          d(q, k) = s * dpk + c * dqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
        d(p, q) = 0.0;
        d(q, p) = 0.0;
      }
    }
  }

  // Sort eigenpairs ascending with a stable selection pass.
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = i;
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (d(order[j], order[j]) < d(order[best], order[best])) best = j;
    std::swap(order[i], order[best]);
  }

  EigenDecomposition out;
  out.values = Vector(n);
  out.vectors = Matrix(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = d(order[k], order[k]);
    Vector col = v.col(order[k]);
    Eigen::Index imax = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (std::abs(col[i]) > std::abs(col[imax])) imax = i;
    if (col[imax] < 0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

}  // namespace fb
