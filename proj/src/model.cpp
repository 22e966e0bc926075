#include "model.hpp"

#include <cmath>

namespace fb {

FullParams FullParams::zeros(int d, double r) {
  FullParams p;
  p.d = d;
  p.x.assign(ut_size(d), 0.0);
  p.y.assign(d + 1, 0.0);
  p.r = r;
  p.validate();
  return p;
}

FullParams FullParams::from_matrix(const Matrix& m,
                                   const std::vector<double>& y, double r) {
  int n = static_cast<int>(m.rows());
  require(n >= 2 && m.cols() == n, ErrorCode::InvalidArgument,
          "parameter matrix must be square with size >= 2");
  FullParams p;
  p.d = n - 1;
  p.x.assign(ut_size(p.d), 0.0);
  p.y = y;
  p.r = r;
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j)
      p.xc(i, j) = (i == j) ? m(i - 1, j - 1)
                            : m(i - 1, j - 1) + m(j - 1, i - 1);
  p.validate();
  return p;
}

Matrix FullParams::qf_matrix() const {
  Matrix m(d + 1, d + 1);
  for (int i = 1; i <= d + 1; ++i)
    for (int j = 1; j <= d + 1; ++j)
      m(i - 1, j - 1) = (i == j) ? xc(i, i) : 0.5 * xc(i, j);
  return m;
}

double FullParams::exponent(const double* t) const {
  double f = 0.0;
  for (int i = 1; i <= d + 1; ++i) {
    f += y[i - 1] * t[i - 1];
    for (int j = i; j <= d + 1; ++j) f += xc(i, j) * t[i - 1] * t[j - 1];
  }
  return f;
}

void FullParams::validate() const {
  require(d >= 1, ErrorCode::InvalidArgument, "dimension d must be >= 1");
  require(d <= kMaxDim, ErrorCode::InvalidArgument,
          "dimension d exceeds the supported cap");
  require(static_cast<int>(x.size()) == ut_size(d), ErrorCode::InvalidArgument,
          "x must hold (d+1)(d+2)/2 coefficients");
  require(static_cast<int>(y.size()) == d + 1, ErrorCode::InvalidArgument,
          "y must hold d+1 entries");
  require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument,
          "radius r must be positive and finite");
  for (double v : x)
    require(std::isfinite(v), ErrorCode::InvalidArgument,
            "x entries must be finite");
  for (double v : y)
    require(std::isfinite(v), ErrorCode::InvalidArgument,
            "y entries must be finite");
}

DiagParams DiagParams::zeros(int d, double r) {
  DiagParams p;
  p.d = d;
  p.xd.assign(d + 1, 0.0);
  p.yd.assign(d + 1, 0.0);
  p.r = r;
  p.validate();
  return p;
}

void DiagParams::validate() const {
  require(d >= 1 && d <= kMaxDim, ErrorCode::InvalidArgument,
          "dimension d out of range");
  require(static_cast<int>(xd.size()) == d + 1 &&
              static_cast<int>(yd.size()) == d + 1,
          ErrorCode::InvalidArgument, "xd and yd must hold d+1 entries");
  require(r > 0.0 && std::isfinite(r), ErrorCode::InvalidArgument,
          "radius r must be positive and finite");
  for (double v : xd)
    require(std::isfinite(v), ErrorCode::InvalidArgument,
            "xd entries must be finite");
  for (double v : yd)
    require(std::isfinite(v), ErrorCode::InvalidArgument,
            "yd entries must be finite");
}

void Dataset::validate() const {
  require(d >= 1 && d <= kMaxDim, ErrorCode::InvalidArgument,
          "dimension d out of range");
  require(n_samples >= 1, ErrorCode::InvalidArgument,
          "dataset must hold at least one point");
  require(static_cast<int>(points.size()) == n_samples * (d + 1),
          ErrorCode::InvalidArgument,
          "points buffer size must equal n_samples*(d+1)");
}

void OrthogonalFrame::validate() const {
  Matrix g = p.transpose() * p;
  g.diagonal().array() -= 1.0;
  require(g.cwiseAbs().maxCoeff() <= 1e-10, ErrorCode::InvalidArgument,
          "frame is not orthogonal within 1e-10");
}

SufficientStats sufficient_stats(const Dataset& data) {
  data.validate();
  int n = data.d + 1;
  SufficientStats s;
  s.d = data.d;
  s.n_samples = data.n_samples;
  s.s1 = Vector::Zero(n);
  s.s2 = Matrix::Zero(n, n);
  for (int k = 0; k < data.n_samples; ++k) {
    const double* t = data.row(k);
    for (int i = 0; i < n; ++i) {
      s.s1[i] += t[i];
      for (int j = 0; j < n; ++j) s.s2(i, j) += t[i] * t[j];
    }
  }
  return s;
}

std::pair<DiagParams, OrthogonalFrame> diagonalize(const FullParams& p) {
  p.validate();
  EigenDecomposition eig = jacobi_eigen(p.qf_matrix());
  DiagParams dp;
  dp.d = p.d;
  dp.r = p.r;
  dp.xd.resize(p.d + 1);
  dp.yd.resize(p.d + 1);
  for (int k = 0; k < p.d + 1; ++k) dp.xd[k] = eig.values[k];
  Vector y = Eigen::Map<const Vector>(p.y.data(), p.d + 1);
  Vector yt = eig.vectors.transpose() * y;
  for (int k = 0; k < p.d + 1; ++k) dp.yd[k] = yt[k];
  OrthogonalFrame frame{eig.vectors};
  return {dp, frame};
}

std::vector<int> validate_on_sphere(const Dataset& data, double tol) {
  data.validate();
  std::vector<int> bad;
  for (int k = 0; k < data.n_samples; ++k) {
    const double* t = data.row(k);
    double norm2 = 0.0;
    for (int i = 0; i <= data.d; ++i) norm2 += t[i] * t[i];
    if (std::abs(std::sqrt(norm2) - 1.0) > tol) bad.push_back(k);
  }
  return bad;
}

}  // namespace fb
