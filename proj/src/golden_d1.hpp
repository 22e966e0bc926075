#pragma once

// Hand-written closed forms of every factored-system matrix for d = 1,
// kept deliberately independent of the general builders so the two can be
// compared entry by entry. State layout for d = 1:
//   F  = (Z, d1, d2, d11),  F2 = (d12),  F3 = (d111, d112).

#include "linalg.hpp"
#include "model.hpp"

namespace fb {
namespace golden {

struct GoldenD1 {
  Matrix p2, q2, p3, q3, r3;
  Matrix a1, b1, c1, e1;  // direction y_1
  Matrix a2, b2, c2, e2;  // direction y_2
};

inline GoldenD1 golden_d1(const FullParams& p) {
  double x11 = p.xc(1, 1), x12 = p.xc(1, 2), x22 = p.xc(2, 2);
  double y1 = p.y[0], y2 = p.y[1];
  double r2 = p.r * p.r;
  GoldenD1 g;

  g.p2 = Matrix::Zero(1, 1);
  g.p2(0, 0) = 2.0 * x22 - 2.0 * x11;
  g.q2 = Matrix::Zero(1, 4);
  g.q2 << -r2 * x12, y2, -y1, 2.0 * x12;

  g.p3 = Matrix::Zero(2, 2);
  g.p3 << 2.0 * x11 - 2.0 * x22, 2.0 * x12, 2.0 * x12, 2.0 * x22 - 2.0 * x11;
  g.q3 = Matrix::Zero(2, 1);
  g.q3 << y2, -y1;
  g.r3 = Matrix::Zero(2, 4);
  g.r3 << -r2 * y1, 2.0 * r2 * (x22 - x11) + 1.0, -r2 * x12, y1,
          0.0, -r2 * x12, -1.0, y2;

  g.a1 = Matrix::Identity(4, 4);
  g.a1(2, 1) = x12;
  g.a1(2, 2) = 2.0 * x22 - 2.0 * x11;
  g.b1 = Matrix::Zero(4, 4);
  g.b1(0, 1) = 1.0;
  g.b1(1, 3) = 1.0;
  g.b1(2, 0) = r2 * x12;
  g.b1(2, 1) = -y2;
  g.b1(2, 2) = y1;
  g.b1(2, 3) = -x12;
  g.c1 = Matrix::Zero(4, 1);
  g.e1 = Matrix::Zero(4, 2);
  g.e1(3, 0) = 1.0;

  g.a2 = Matrix::Identity(4, 4);
  g.a2(1, 1) = 2.0 * x11 - 2.0 * x22;
  g.a2(1, 2) = x12;
  g.a2(3, 3) = 2.0 * x22 - 2.0 * x11;
  g.b2 = Matrix::Zero(4, 4);
  g.b2(0, 2) = 1.0;
  g.b2(1, 1) = y2;
  g.b2(1, 2) = -y1;
  g.b2(1, 3) = x12;
  g.b2(2, 0) = r2;
  g.b2(2, 3) = -1.0;
  g.b2(3, 1) = r2 * x12;
  g.b2(3, 2) = 1.0;
  g.b2(3, 3) = -y2;
  g.c2 = Matrix::Zero(4, 1);
  g.c2(3, 0) = y1;
  g.e2 = Matrix::Zero(4, 2);
  g.e2(3, 0) = -2.0 * x12;

  return g;
}

// Radial coefficient matrix for diagonal d = 1 parameters in the layout
// (d1, d2, d1^2, d2^2).
inline Matrix golden_d1_radial(const DiagParams& p, double r) {
  double x1 = p.xd[0], x2 = p.xd[1], y1 = p.yd[0], y2 = p.yd[1];
  double r2 = r * r;
  Matrix m(4, 4);
  m << 2.0 * r2 * x1 + 1.0, 0.0, y1, y1,
       0.0, 2.0 * r2 * x2 + 1.0, y2, y2,
       r2 * y1, 0.0, 2.0 * r2 * x1 + 2.0, 1.0,
       0.0, r2 * y2, 1.0, 2.0 * r2 * x2 + 2.0;
  return m / r;
}

}  // namespace golden
}  // namespace fb
