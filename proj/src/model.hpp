#pragma once

// Domain types and index conventions.
//
// The exponent of the distribution is
//
//   f(t) = sum_{1 <= i <= j <= d+1} x_ij t_i t_j + sum_i y_i t_i
//
// with each off-diagonal coefficient x_ij (i < j) multiplying t_i t_j ONCE.
// Written as a quadratic form f(t) = t'Mt + y't, the matrix M therefore has
// M_ii = x_ii and M_ij = x_ij / 2 for i != j. Every module in this library
// follows this convention; matrix-valued inputs go through from_matrix()
// which doubles off-diagonals on the way into the coefficient storage.

#include <cstdint>
#include <utility>
#include <vector>

#include "common.hpp"
#include "linalg.hpp"

namespace fb {

inline constexpr int kMaxDim = 10;

// Number of stored coefficients x_ij, 1 <= i <= j <= d+1.
inline int ut_size(int d) { return (d + 1) * (d + 2) / 2; }

// 0-based storage index of x_ij for 1-based i <= j, lexicographic layout
// (1,1), (1,2), ..., (1,d+1), (2,2), ..., (d+1,d+1).
inline int ut_index(int i, int j, int d) {
  return (i - 1) * (d + 2) - i * (i - 1) / 2 + (j - i);
}

struct FullParams {
  int d = 1;
  std::vector<double> x;  // ut_size(d) coefficients, ut_index layout
  std::vector<double> y;  // d+1 entries
  double r = 1.0;

  static FullParams zeros(int d, double r = 1.0);
  // Interprets m as the quadratic-form matrix: stored x_ii = m_ii and
  // x_ij = 2 m_ij for i < j, so that t'mt + y't is the exponent.
  static FullParams from_matrix(const Matrix& m, const std::vector<double>& y,
                                double r = 1.0);

  // Coefficient accessor; indices 1-based, order-insensitive.
  double xc(int i, int j) const {
    if (i > j) std::swap(i, j);
    return x[ut_index(i, j, d)];
  }
  double& xc(int i, int j) {
    if (i > j) std::swap(i, j);
    return x[ut_index(i, j, d)];
  }

  Matrix qf_matrix() const;               // M with halved off-diagonals
  double exponent(const double* t) const; // f(t) above
  void validate() const;
};

struct DiagParams {
  int d = 1;
  std::vector<double> xd;  // d+1 diagonal coefficients
  std::vector<double> yd;  // d+1
  double r = 1.0;

  static DiagParams zeros(int d, double r = 1.0);
  void validate() const;
};

// F(Z) layout: entries[0] = Z, entries[i] = dZ/dy_i for i = 1..d+1,
// entries[d+1+i] = d^2 Z / dy_i^2 for i = 1..d. The last second derivative
// is implied by the sphere identity sum_i d_i^2 Z = r^2 Z.
struct StateVector {
  int d = 1;
  std::vector<double> entries;

  explicit StateVector(int dim = 1) : d(dim), entries(2 * dim + 2, 0.0) {}

  double value() const { return entries[0]; }
  double& value() { return entries[0]; }
  double dy(int i) const { return entries[i]; }          // 1 <= i <= d+1
  double& dy(int i) { return entries[i]; }
  double d2(int i) const { return entries[d + 1 + i]; }  // 1 <= i <= d
  double& d2(int i) { return entries[d + 1 + i]; }

  double implied_d2_last(double r) const {
    double s = 0.0;
    for (int i = 1; i <= d; ++i) s += d2(i);
    return r * r * value() - s;
  }
};

// F~(Z~) layout: entries[i-1] = dZ~/dy_i for i = 1..d+1, entries[d+i] =
// d^2 Z~ / dy_i^2 for i = 1..d+1. The value itself is implied by the same
// sphere identity: Z~ = sum_i d_i^2 Z~ / r^2.
struct DiagStateVector {
  int d = 1;
  std::vector<double> entries;

  explicit DiagStateVector(int dim = 1) : d(dim), entries(2 * dim + 2, 0.0) {}

  double dy(int i) const { return entries[i - 1]; }      // 1 <= i <= d+1
  double& dy(int i) { return entries[i - 1]; }
  double d2(int i) const { return entries[d + i]; }      // 1 <= i <= d+1
  double& d2(int i) { return entries[d + i]; }

  double implied_value(double r) const {
    double s = 0.0;
    for (int i = 1; i <= d + 1; ++i) s += d2(i);
    return s / (r * r);
  }
};

struct Dataset {
  int d = 1;
  int n_samples = 0;
  std::vector<double> points;  // row-major, n_samples x (d+1)

  const double* row(int k) const { return points.data() + k * (d + 1); }
  void validate() const;
};

struct SufficientStats {
  int d = 1;
  int n_samples = 0;
  Vector s1;  // d+1, s1[i] = sum_k T_i^(k)
  Matrix s2;  // (d+1)x(d+1) symmetric, s2(i,j) = sum_k T_i^(k) T_j^(k)
};

struct OrthogonalFrame {
  Matrix p;
  void validate() const;  // P'P = I within 1e-10
};

SufficientStats sufficient_stats(const Dataset& data);

// Eigendecomposition of the quadratic-form matrix of p: returns diagonal
// coefficients in ascending order and the frame P with M = P diag(xd) P'.
// Column signs: largest-magnitude entry positive, lowest index on ties.
std::pair<DiagParams, OrthogonalFrame> diagonalize(const FullParams& p);

// Indices (0-based) of rows whose norm deviates from 1 by more than tol.
std::vector<int> validate_on_sphere(const Dataset& data, double tol);

}  // namespace fb
