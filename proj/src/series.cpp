#include "series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fb {
namespace series {
namespace {

// Truncated polynomial product, degree cap N.
template <typename Real>
std::vector<Real> poly_mul(const std::vector<Real>& a,
                           const std::vector<Real>& b, int n) {
  std::vector<Real> c(n + 1, Real(0));
  for (int i = 0; i <= n; ++i) {
    if (a[i] == Real(0)) continue;
    for (int j = 0; i + j <= n; ++j) c[i + j] += a[i] * b[j];
  }
  return c;
}

// Per-coordinate layer polynomials. With m = alpha_i + beta_i,
//   val[m]  = (2m-1)!! sum_{a+b=m} x^a/a! * y^(2b)/(2b)!
//   der1[m] = (2m-1)!! sum_{a+b=m, b>=1} x^a/a! * y^(2b-1)/(2b-1)!
//   der2[m] = (2m-1)!! sum_{a+b=m, b>=1} x^a/a! * y^(2b-2)/(2b-2)!
// so differentiating the series in y_i only swaps this coordinate's factor.
template <typename Real>
struct CoordPolys {
  std::vector<Real> val, der1, der2;
};

template <typename Real>
CoordPolys<Real> coord_polys(Real x, Real y, int n) {
  std::vector<Real> xa(n + 1), yb(n + 1), y1(n + 1), y2(n + 1);
  xa[0] = Real(1);
  for (int a = 1; a <= n; ++a) xa[a] = xa[a - 1] * x / Real(a);
  yb[0] = Real(1);
  for (int b = 1; b <= n; ++b)
    yb[b] = yb[b - 1] * y * y / Real((2 * b) * (2 * b - 1));
  if (n >= 1) {
    y1[1] = y;
    y2[1] = Real(1);
  }
  for (int b = 2; b <= n; ++b) {
    y1[b] = y1[b - 1] * y * y / Real((2 * b - 1) * (2 * b - 2));
    y2[b] = y2[b - 1] * y * y / Real((2 * b - 2) * (2 * b - 3));
  }

  CoordPolys<Real> cp;
  cp.val.assign(n + 1, Real(0));
  cp.der1.assign(n + 1, Real(0));
  cp.der2.assign(n + 1, Real(0));
  Real dfac = Real(1);  // (2m-1)!!, with (-1)!! = 1
  for (int m = 0; m <= n; ++m) {
    if (m > 0) dfac *= Real(2 * m - 1);
    Real u = Real(0), u1 = Real(0), u2 = Real(0);
    for (int a = 0; a <= m; ++a) {
      u += xa[a] * yb[m - a];
      if (m - a >= 1) {
        u1 += xa[a] * y1[m - a];
        u2 += xa[a] * y2[m - a];
      }
    }
    cp.val[m] = dfac * u;
    cp.der1[m] = dfac * u1;
    cp.der2[m] = dfac * u2;
  }
  return cp;
}

// rho[n] = S_d r^d r^(2n) (d-1)!! / (d-1+2n)!!
template <typename Real>
std::vector<Real> layer_prefactors(int d, Real r, int n) {
  std::vector<Real> rho(n + 1);
  rho[0] = Real(surface_area(d)) * std::pow(r, Real(d));
  for (int k = 1; k <= n; ++k)
    rho[k] = rho[k - 1] * r * r / Real(d - 1 + 2 * k);
  return rho;
}

template <typename Real>
Real value_impl(const DiagParams& p, int order) {
  std::vector<Real> prod(order + 1, Real(0));
  prod[0] = Real(1);
  for (int c = 0; c <= p.d; ++c) {
    CoordPolys<Real> cp =
        coord_polys<Real>(Real(p.xd[c]), Real(p.yd[c]), order);
    prod = poly_mul(prod, cp.val, order);
  }
  std::vector<Real> rho = layer_prefactors<Real>(p.d, Real(p.r), order);
  Real v = Real(0);
  for (int n = 0; n <= order; ++n) v += rho[n] * prod[n];
  return v;
}

}  // namespace

double surface_area(int d) {
  require(d >= 1, ErrorCode::InvalidArgument, "surface_area requires d >= 1");
  const double pi = 3.14159265358979323846264338327950288;
  return 2.0 * std::pow(pi, (d + 1) / 2.0) / std::tgamma((d + 1) / 2.0);
}

double convergence_load(const DiagParams& p) {
  double s = 0.0;
  for (int c = 0; c <= p.d; ++c)
    s += std::abs(p.xd[c]) + p.yd[c] * p.yd[c];
  return p.r * p.r * s;
}

double series_value(const DiagParams& p, int order) {
  p.validate();
  require(order >= 0, ErrorCode::InvalidArgument, "order must be >= 0");
  double v = value_impl<double>(p, order);
  require(std::isfinite(v), ErrorCode::Overflow,
          "series partial sum is not finite; parameters too large");
  return v;
}

long double series_value_ld(const DiagParams& p, int order) {
  p.validate();
  require(order >= 0, ErrorCode::InvalidArgument, "order must be >= 0");
  return value_impl<long double>(p, order);
}

SeriesResult series_state(const DiagParams& p, int order) {
  p.validate();
  require(order >= 0, ErrorCode::InvalidArgument, "order must be >= 0");
  const int nc = p.d + 1;

  std::vector<CoordPolys<double>> cps(nc);
  for (int c = 0; c < nc; ++c)
    cps[c] = coord_polys<double>(p.xd[c], p.yd[c], order);

  // prefix[c] = prod of val-polys of coordinates < c; suffix[c] = > c-1.
  std::vector<std::vector<double>> prefix(nc + 1), suffix(nc + 1);
  prefix[0].assign(order + 1, 0.0);
  prefix[0][0] = 1.0;
  for (int c = 0; c < nc; ++c)
    prefix[c + 1] = poly_mul(prefix[c], cps[c].val, order);
  suffix[nc].assign(order + 1, 0.0);
  suffix[nc][0] = 1.0;
  for (int c = nc - 1; c >= 0; --c)
    suffix[c] = poly_mul(suffix[c + 1], cps[c].val, order);

  std::vector<double> rho = layer_prefactors<double>(p.d, p.r, order);

  SeriesResult out;
  out.order = order;
  out.state = DiagStateVector(p.d);
  double value = 0.0;
  for (int n = 0; n <= order; ++n) value += rho[n] * prefix[nc][n];
  out.value = value;

  double last_layer_max = 0.0;
  for (int c = 0; c < nc; ++c) {
    std::vector<double> rest = poly_mul(prefix[c], suffix[c + 1], order);
    std::vector<double> l1 = poly_mul(rest, cps[c].der1, order);
    std::vector<double> l2 = poly_mul(rest, cps[c].der2, order);
    double d1 = 0.0, d2 = 0.0;
    for (int n = 0; n <= order; ++n) {
      d1 += rho[n] * l1[n];
      d2 += rho[n] * l2[n];
    }
    out.state.dy(c + 1) = d1;
    out.state.d2(c + 1) = d2;
    last_layer_max = std::max(
        last_layer_max,
        std::max(std::abs(rho[order] * l1[order]),
                 std::abs(rho[order] * l2[order])));
  }
  out.derivative_bound_heuristic = 2.0 * last_layer_max;
  out.value_bound = truncation_bound(p, order + 1);

  bool finite = std::isfinite(out.value);
  for (double v : out.state.entries) finite = finite && std::isfinite(v);
  require(finite, ErrorCode::Overflow,
          "series partial sum is not finite; parameters too large");
  return out;
}

double truncation_bound(const DiagParams& p, int n_from) {
  p.validate();
  require(n_from >= 1, ErrorCode::InvalidArgument, "n_from must be >= 1");
  double load = convergence_load(p);
  if (load == 0.0) return 0.0;
  if (load >= n_from + 1.0)
    fail(ErrorCode::BoundInvalid,
         "series load L=" + std::to_string(load) +
             " is too large for a tail bound from layer " +
             std::to_string(n_from));
  double logb = std::log(surface_area(p.d)) + p.d * std::log(p.r) +
                n_from * std::log(load) - std::lgamma(n_from + 1.0) +
                std::log(n_from + 1.0) - std::log(n_from + 1.0 - load);
  return std::exp(std::min(logb, 709.0));
}

int choose_order(const DiagParams& p, double abs_tol) {
  require(abs_tol > 0.0, ErrorCode::InvalidArgument,
          "tolerance must be positive");
  double load = convergence_load(p);
  for (int order = 2; order <= 80; ++order) {
    if (load >= order + 2.0) continue;  // bound not yet valid at this order
    if (truncation_bound(p, order + 1) <= abs_tol) return order;
  }
  fail(ErrorCode::BoundInvalid,
       "series cannot reach the requested tolerance within order cap 80");
}

}  // namespace series
}  // namespace fb
