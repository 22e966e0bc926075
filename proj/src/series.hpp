#pragma once

// Series evaluation of the restricted normalizing constant
//
//   Z~(x, y, r) = S_d * sum_{alpha, beta >= 0} r^(d+2|alpha+beta|)
//                 * (d-1)!! prod_i (2 alpha_i + 2 beta_i - 1)!!
//                   / [ (d-1+2|alpha|+2|beta|)!! alpha! (2 beta)! ]
//                 * x^alpha y^(2 beta)
//
// together with its first and second y-derivatives. Terms are grouped by
// total-degree layers n = |alpha| + |beta|; inside a layer the sum over
// multi-indices collapses to a coefficient of s^n in a product of d+1
// per-coordinate polynomials, so a full state evaluation costs
// O(d^2 * order^2) rather than enumerating multi-indices. Convention
// (-1)!! = 1 makes the layer-0 term equal S_d * r^d.

#include "model.hpp"

namespace fb {
namespace series {

// S_d = 2 pi^((d+1)/2) / Gamma((d+1)/2), the surface area of S^d(1).
double surface_area(int d);

// L = r^2 * sum_i (|x_i| + y_i^2); the series converges quickly when L <= 1.
double convergence_load(const DiagParams& p);

struct SeriesResult {
  DiagStateVector state;
  double value = 0.0;                     // Z~ at the same order
  int order = 0;                          // layers 0..order summed
  double value_bound = 0.0;               // tail bound from layer order+1 on
  double derivative_bound_heuristic = 0.0;
};

// Sum of layers 0..order of the value series.
double series_value(const DiagParams& p, int order);

// Value plus all first/second y-derivative entries at the same order.
// value_bound = truncation_bound(p, order+1); the derivative heuristic is
// twice the largest layer-`order` contribution across derivative entries.
SeriesResult series_state(const DiagParams& p, int order);

// Bound on |sum of layers >= n_from| :
//   S_d * r^d / n_from! * L^n_from * (n_from+1) / (n_from+1-L).
// Requires L < n_from + 1 (BoundInvalid otherwise). Computed in log space.
double truncation_bound(const DiagParams& p, int n_from);

// Smallest order >= 2 whose tail bound is <= abs_tol, searched up to 80.
// BoundInvalid if no order under the cap reaches the tolerance.
int choose_order(const DiagParams& p, double abs_tol);

// Extended-precision variants used by acceptance-level cross-checks.
long double series_value_ld(const DiagParams& p, int order);

}  // namespace series
}  // namespace fb
