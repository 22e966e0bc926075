#pragma once

// Construction of the factored Pfaffian matrices H_i, H_ij, H_r for the
// full-parameter state F(Z) = (Z, d_1 Z, ..., d_{d+1} Z, d_1^2 Z, ..., d_d^2 Z).
//
// The building blocks are polynomial-entry matrices evaluated numerically at
// one parameter point:
//   P2 F2 + Q2 F = 0                    (F2 = mixed second derivatives)
//   P3 F3 + Q3 F2 + R3 F = 0            (F3 = third derivatives)
//   A dF/dy_i = B F + C F2 + E F3       (A, B, C, E depend on direction i)
// so that
//   H_i = A^{-1} (B - C W2 + E W3),  W2 = P2^{-1} Q2,  W3 = P3^{-1}(Q3 W2 - R3)
// and every application is a linear solve against an LU factor; no inverse is
// ever formed explicitly. Entry tables accumulate: several delta-terms may
// target one cell, and assignments to nonexistent columns are dropped.

#include <array>
#include <vector>

#include "model.hpp"

namespace fb {
namespace pfaffian {

// Pairs (i,j), 1 <= i < j <= d+1, in lexicographic order.
class PairIndex {
 public:
  explicit PairIndex(int d) : d_(d) {}
  int size() const { return d_ * (d_ + 1) / 2; }
  // 0-based position; arguments in either order, must be distinct.
  int index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return (i - 1) * (d_ + 1) - i * (i - 1) / 2 + (j - i - 1);
  }
  std::pair<int, int> pair_at(int pos) const;

 private:
  int d_;
};

// Triples (i,j,k), 1 <= i <= j <= k <= d+1 with j <= d, lexicographic.
// Lookup accepts any index triple and sorts it first; -1 means the monomial
// is not a member of F3 (its assignments are dropped).
class TripleIndex {
 public:
  explicit TripleIndex(int d);
  int size() const { return static_cast<int>(triples_.size()); }
  int index_of(int a, int b, int c) const;
  std::array<int, 3> triple_at(int pos) const { return triples_[pos]; }

 private:
  int d_;
  std::vector<std::array<int, 3>> triples_;
  std::vector<int> lookup_;  // dense (d+1)^3 table over sorted triples
};

struct SecondFactors {
  Matrix p2, q2;
};
struct ThirdFactors {
  Matrix p3, q3, r3;
};
struct DirectionFactors {
  Matrix a, b, c, e;
};

// The full matrix bundle for one direction at one parameter point.
struct FactoredPfaffian {
  DirectionFactors dir;
  SecondFactors second;
  ThirdFactors third;
};

SecondFactors build_p2_q2(const FullParams& p);
ThirdFactors build_p3_q3_r3(const FullParams& p);
DirectionFactors build_abce(const FullParams& p, int dir);
FactoredPfaffian factored_pfaffian(const FullParams& p, int dir);

// Per-point cache: shared LU factors of P2 and P3, the reduced blocks W2 and
// W3, per-direction LU(A) and H_i, and the y-derivative blocks. Single-owner;
// distinct points can be processed concurrently.
class PfaffianPoint {
 public:
  explicit PfaffianPoint(const FullParams& p);

  const FullParams& params() const { return p_; }
  const Matrix& h(int i);                  // H_i, cached;  i in 1..d+1
  Matrix h_dy(int i, int j);               // dH_i / dy_j
  Matrix h_x(int i, int j);                // H_ij, i <= j
  Matrix h_r();                            // radial Pfaffian matrix
  Vector mixed_second(const StateVector& f);  // d_i d_j Z (i<j), pair order

  // sum_i dy[i-1] H_i + sum_{i<=j} dx[ut_index(i,j)] H_ij; the state
  // transport generator for a straight parameter segment.
  Matrix generator(const std::vector<double>& dx_ut,
                   const std::vector<double>& dy);

 private:
  const Matrix& u2(int j);  // P2^{-1} dQ2/dy_j
  const Matrix& v3(int j);  // P3^{-1} (dQ3/dy_j W2 + Q3 u2(j) - dR3/dy_j)
  void ensure_direction(int i);

  FullParams p_;
  int n_;  // 2d+2
  SecondFactors sf_;
  ThirdFactors tf_;
  CheckedLu lu_p2_, lu_p3_;
  Matrix w2_, w3_;
  std::vector<DirectionFactors> dirs_;
  std::vector<CheckedLu> lu_a_;
  std::vector<Matrix> h_;
  std::vector<char> have_dir_;
  std::vector<Matrix> u2_, v3_;
  std::vector<char> have_u2_, have_v3_;
};

// One-shot conveniences; each builds a PfaffianPoint internally.
Matrix h_matrix(const FullParams& p, int dir);
Matrix h_matrix_dy(const FullParams& p, int i, int j);
Matrix h_matrix_x(const FullParams& p, int i, int j);
Matrix h_matrix_r(const FullParams& p);
Vector mixed_second(const FullParams& p, const StateVector& f);

}  // namespace pfaffian
}  // namespace fb
