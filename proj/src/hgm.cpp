#include "hgm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rng.hpp"
#include "threads.hpp"

namespace fb {
namespace hgm {

void OdeSettings::validate() const {
  require(abs_tol_coeff > 0.0 && rel_tol > 0.0, ErrorCode::InvalidArgument,
          "ODE tolerances must be positive");
  require(max_steps > 0, ErrorCode::InvalidArgument,
          "max_steps must be positive");
  require(method == "rkf45", ErrorCode::InvalidArgument,
          "unknown ODE method (only rkf45 is provided)");
}

Matrix p_r_matrix(const DiagParams& p, double at_r) {
  p.validate();
  require(at_r > 0.0 && std::isfinite(at_r), ErrorCode::InvalidArgument,
          "p_r_matrix requires a positive radius");
  int d = p.d;
  int n = 2 * (d + 1);
  double r = at_r;
  double r2 = r * r;
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i <= d; ++i) {
    m(i, i) = (2.0 * p.xd[i] * r2 + 1.0) / r;
    for (int k = 0; k <= d; ++k) m(i, d + 1 + k) = p.yd[i] / r;
    m(d + 1 + i, i) = p.yd[i] * r;
    m(d + 1 + i, d + 1 + i) = (2.0 * p.xd[i] * r2 + 2.0) / r;
    for (int k = 0; k <= d; ++k)
      if (k != i) m(d + 1 + i, d + 1 + k) = 1.0 / r;
  }
  return m;
}

double lambda_scale(const DiagParams& p) {
  p.validate();
  return 2.0 * *std::max_element(p.xd.begin(), p.xd.end());
}

namespace {

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
};

// Embedded Runge-Kutta-Fehlberg 4(5) on dG/dr = (P(r) - r lambda I) G,
// propagating the fifth-order solution with PI step-size control. The
// constant exp(lambda r0^2 / 2) input scaling is absorbed into the final
// factor (the system is linear), so only exp(lambda (r1^2 - r0^2) / 2)
// is ever formed.
Vector integrate_scaled(const DiagParams& p, Vector g, double r0, double r1,
                        double lambda, const OdeSettings& s, OdeStats* stats) {
  static const double kA[6][5] = {
      {0, 0, 0, 0, 0},
      {1.0 / 4, 0, 0, 0, 0},
      {3.0 / 32, 9.0 / 32, 0, 0, 0},
      {1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197, 0, 0},
      {439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104, 0},
      {-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104, -11.0 / 40}};
  static const double kC[6] = {0, 1.0 / 4, 3.0 / 8, 12.0 / 13, 1.0, 1.0 / 2};
  static const double kB5[6] = {16.0 / 135,       0, 6656.0 / 12825,
                                28561.0 / 56430, -9.0 / 50, 2.0 / 55};
  static const double kB4[6] = {25.0 / 216,     0,        1408.0 / 2565,
                                2197.0 / 4104, -1.0 / 5, 0};

  int n = static_cast<int>(g.size());
  auto deriv = [&](double r, const Vector& v) -> Vector {
    Vector out = p_r_matrix(p, r) * v;
    out.noalias() -= (r * lambda) * v;
    return out;
  };
  auto bottom_sum = [&](const Vector& v) {
    double acc = 0.0;
    for (int i = n / 2; i < n; ++i) acc += v[i];
    return acc;
  };

  double dir = r1 > r0 ? 1.0 : -1.0;
  double span = std::abs(r1 - r0);
  double h = s.initial_step > 0.0 ? std::min(s.initial_step, span)
                                  : std::min(1e-2 * span, 1.0);
  double r = r0;
  double err_prev = 1.0;
  require(bottom_sum(g) > 0.0, ErrorCode::NonFinite,
          "initial state has non-positive implied value");
  std::array<Vector, 6> k;
  for (long attempts = 0;; ++attempts) {
    double remaining = std::abs(r1 - r);
    if (remaining <= 1e-14 * std::max(std::abs(r0), std::abs(r1))) break;
    require(attempts < s.max_steps, ErrorCode::MaxSteps,
            "radial integration exceeded max_steps");
    h = std::min(h, remaining);
    require(h > 1e-14 * std::max(1.0, std::abs(r)), ErrorCode::StepUnderflow,
            "radial integration step size underflow");
    double hs = dir * h;

    double atol_step = s.abs_tol_coeff * g.cwiseAbs().mean();
    k[0] = deriv(r, g);
    for (int st = 1; st < 6; ++st) {
      Vector arg = g;
      for (int j = 0; j < st; ++j)
        if (kA[st][j] != 0.0) arg.noalias() += (hs * kA[st][j]) * k[j];
      k[st] = deriv(r + kC[st] * hs, arg);
    }
    Vector g5 = g, g4 = g;
    for (int st = 0; st < 6; ++st) {
      if (kB5[st] != 0.0) g5.noalias() += (hs * kB5[st]) * k[st];
      if (kB4[st] != 0.0) g4.noalias() += (hs * kB4[st]) * k[st];
    }
    require(g5.allFinite(), ErrorCode::NonFinite,
            "radial integration produced a non-finite state");

    double err2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double sc = atol_step +
                  s.rel_tol * std::max(std::abs(g[i]), std::abs(g5[i]));
      double e = g5[i] - g4[i];
      if (sc > 0.0)
        err2 += (e / sc) * (e / sc);
      else if (e != 0.0)
        err2 = std::numeric_limits<double>::infinity();
    }
    double err = std::sqrt(err2 / n);

    if (err <= 1.0) {
      r += hs;
      g.swap(g5);
      require(bottom_sum(g) > 0.0, ErrorCode::NonFinite,
              "implied value turned non-positive during integration");
      if (stats) ++stats->accepted;
      double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.14) *
                   std::pow(err_prev, 0.08);
      h *= std::clamp(fac, 0.2, 5.0);
      err_prev = std::max(err, 1e-4);
    } else {
      if (stats) ++stats->rejected;
      double fac = 0.9 * std::pow(err, -0.14) * std::pow(err_prev, 0.08);
      h *= std::clamp(std::min(fac, 0.9), 0.2, 0.9);
    }
  }
  return g;
}

Vector to_vector(const DiagStateVector& s) {
  return Eigen::Map<const Vector>(s.entries.data(),
                                  static_cast<int>(s.entries.size()));
}

DiagStateVector to_state(int d, const Vector& v) {
  DiagStateVector s(d);
  for (int i = 0; i < v.size(); ++i) s.entries[i] = v[i];
  return s;
}

DiagStateVector extend_with_stats(const DiagParams& p,
                                  const DiagStateVector& g0, double r1,
                                  const OdeSettings& s, OdeStats* stats) {
  p.validate();
  s.validate();
  require(g0.d == p.d, ErrorCode::InvalidArgument,
          "state dimension mismatch");
  require(r1 > 0.0 && std::isfinite(r1), ErrorCode::InvalidArgument,
          "target radius must be positive and finite");
  for (double v : g0.entries)
    require(std::isfinite(v), ErrorCode::NonFinite,
            "initial state must be finite");
  double r0 = p.r;
  if (r1 == r0) return g0;
  double lambda = lambda_scale(p);
  Vector g = integrate_scaled(p, to_vector(g0), r0, r1, lambda, s, stats);
  double grow = std::exp(0.5 * lambda * (r1 * r1 - r0 * r0));
  require(std::isfinite(grow), ErrorCode::Overflow,
          "exponential scale factor overflowed");
  g *= grow;
  require(g.allFinite(), ErrorCode::NonFinite,
          "extended state is not finite");
  return to_state(p.d, g);
}

}  // namespace

DiagStateVector hgm_extend(const DiagParams& p, const DiagStateVector& g0,
                           double r1, const OdeSettings& s) {
  return extend_with_stats(p, g0, r1, s, nullptr);
}

namespace {

// Shared route plan for eval_diag_state and perturbed_ensemble: the series
// parameters (possibly shrunk), the chosen order, and the initial state.
struct RoutePlan {
  bool scaled = false;        // false: series route, done at p directly
  DiagParams series_params;   // where the series is summed (r = 1)
  double r1 = 1.0;
  int order = 0;
  series::SeriesResult sr;
  double init_bound_rel = 0.0;    // truncation bound / |implied value|
  double init_deriv_rel = 0.0;    // derivative heuristic, relative
};

RoutePlan plan_route(const DiagParams& p, double tol, double force_r1) {
  p.validate();
  require(p.r == 1.0, ErrorCode::InvalidArgument,
          "diagonal evaluation is defined at r = 1 (rescale parameters)");
  require(tol > 0.0, ErrorCode::InvalidArgument, "tol must be positive");
  double load = series::convergence_load(p);
  RoutePlan plan;
  plan.scaled = force_r1 > 0.0 || load > 0.9;
  if (!plan.scaled) {
    plan.series_params = p;
    plan.r1 = 1.0;
    // The implied value of an order-N state carries the value series through
    // layer N-1, so target the tolerance one layer deeper.
    plan.order = series::choose_order(p, tol) + 1;
  } else {
    double r1 = force_r1 > 0.0 ? force_r1 : load;
    require(std::isfinite(r1) && r1 > 0.0, ErrorCode::InvalidArgument,
            "scale radius must be positive and finite");
    plan.r1 = r1;
    DiagParams sp;
    sp.d = p.d;
    sp.r = 1.0;
    sp.xd.resize(p.d + 1);
    sp.yd.resize(p.d + 1);
    for (int i = 0; i <= p.d; ++i) {
      sp.xd[i] = p.xd[i] / (r1 * r1);
      sp.yd[i] = p.yd[i] / r1;
    }
    plan.series_params = sp;
    // Initial series accuracy governs the relative accuracy of everything
    // downstream (the extension map is linear), so target near machine
    // relative precision against a value lower bound S_d e^-L, and never
    // looser than the caller's absolute tolerance mapped through the
    // homogeneity factor r1^d.
    double ls = series::convergence_load(sp);
    double floor_abs = series::surface_area(p.d) * std::exp(-ls) * 1e-13;
    double tol_scaled = tol * std::pow(r1, p.d);
    double target = std::max(std::min(tol_scaled, floor_abs), 1e-300);
    plan.order = series::choose_order(sp, target) + 1;
  }
  plan.sr = series::series_state(plan.series_params, plan.order);
  double ival = plan.sr.state.implied_value(1.0);
  double scale = std::max(std::abs(ival), 1e-300);
  plan.init_bound_rel = series::truncation_bound(plan.series_params,
                                                 plan.order) / scale;
  double dscale = 1e-300;
  for (double v : plan.sr.state.entries)
    dscale = std::max(dscale, std::abs(v));
  plan.init_deriv_rel = plan.sr.derivative_bound_heuristic / dscale;
  return plan;
}

// Carry one (possibly perturbed) initial state through the plan's extension
// and unscaling; fills state/value only.
void finish_route(const RoutePlan& plan, const DiagStateVector& init,
                  const OdeSettings& s, int d, DiagEval* out,
                  OdeStats* stats) {
  if (!plan.scaled) {
    out->state = init;
    out->value = out->state.implied_value(1.0);
    return;
  }
  DiagStateVector ext =
      extend_with_stats(plan.series_params, init, plan.r1, s, stats);
  double f1 = std::pow(plan.r1, -(d + 1));
  double f2 = std::pow(plan.r1, -(d + 2));
  DiagStateVector target(d);
  for (int i = 1; i <= d + 1; ++i) {
    target.dy(i) = ext.dy(i) * f1;
    target.d2(i) = ext.d2(i) * f2;
  }
  out->state = target;
  out->value = target.implied_value(1.0);
}

}  // namespace

DiagEval eval_diag_state(const DiagParams& p, double tol,
                         const OdeSettings& s, double force_r1) {
  s.validate();
  RoutePlan plan = plan_route(p, tol, force_r1);
  DiagEval out;
  out.route = plan.scaled ? "hgm" : "series";
  out.r1 = plan.r1;
  out.order = plan.order;
  OdeStats stats;
  finish_route(plan, plan.sr.state, s, p.d, &out, &stats);
  if (!plan.scaled) {
    out.value_bound = series::truncation_bound(p, plan.order);
    out.derivative_bound_heuristic = plan.sr.derivative_bound_heuristic;
  } else {
    // Heuristic forward error estimate: initial relative truncation plus one
    // relative tolerance per accepted step, applied to the final magnitudes.
    double ode_rel = (static_cast<double>(stats.accepted) + 10.0) * s.rel_tol;
    out.value_bound = (plan.init_bound_rel + ode_rel) * std::abs(out.value);
    double dmax = 1e-300;
    for (double v : out.state.entries) dmax = std::max(dmax, std::abs(v));
    out.derivative_bound_heuristic = (plan.init_deriv_rel + ode_rel) * dmax;
  }
  return out;
}

double normal_quantile_two_sided(double confidence) {
  require(confidence > 0.0 && confidence < 1.0, ErrorCode::InvalidArgument,
          "confidence must lie in (0, 1)");
  double q = 0.5 * (1.0 + confidence);
  // Rational initial guess (relative error < 1.15e-9 over (0,1)), then one
  // Halley step against erfc for full double accuracy.
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  double plow = 0.02425;
  if (q < plow) {
    double u = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((dd[0] * u + dd[1]) * u + dd[2]) * u + dd[3]) * u + 1.0);
  } else if (q <= 1.0 - plow) {
    double u = q - 0.5;
    double t = u * u;
    x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) *
        u /
        (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
  } else {
    double u = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u +
          c[5]) /
        ((((dd[0] * u + dd[1]) * u + dd[2]) * u + dd[3]) * u + 1.0);
  }
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - q;
  double u = e * std::sqrt(6.283185307179586476925286766559) *
             std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

ErrorEstimate perturbed_ensemble(const DiagParams& p, double tol, double eps,
                                 int replicas, double confidence,
                                 std::uint64_t seed, const OdeSettings& s) {
  s.validate();
  require(replicas >= 2, ErrorCode::InvalidArgument,
          "perturbed_ensemble needs at least 2 replicas");
  require(eps >= 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument,
          "eps must be non-negative");
  RoutePlan plan = plan_route(p, tol, 0.0);
  // Unperturbed pass (also validates the route end to end).
  DiagEval base;
  finish_route(plan, plan.sr.state, s, p.d, &base, nullptr);

  std::vector<double> values(replicas, 0.0);
  double sd_noise = 0.5 * eps;
  parallel_chunks(static_cast<std::size_t>(replicas), [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    DiagStateVector init = plan.sr.state;
    for (double& e : init.entries) e += sd_noise * rng.normal();
    DiagEval rep;
    finish_route(plan, init, s, p.d, &rep, nullptr);
    values[k] = rep.value;
  });

  ErrorEstimate est;
  est.replicas = replicas;
  est.confidence = confidence;
  est.mean = pairwise_sum(values) / replicas;
  std::vector<double> dev2(replicas);
  for (int k = 0; k < replicas; ++k) {
    double dv = values[k] - est.mean;
    dev2[k] = dv * dv;
  }
  est.sd = std::sqrt(pairwise_sum(dev2) / (replicas - 1));
  double z = normal_quantile_two_sided(confidence);
  est.ci_low = est.mean - z * est.sd;
  est.ci_high = est.mean + z * est.sd;
  return est;
}

StateVector rotate_to_full(const DiagStateVector& ds,
                           const OrthogonalFrame& frame,
                           const DiagParams& dp) {
  dp.validate();
  frame.validate();
  int d = dp.d;
  int n = d + 1;
  require(ds.d == d, ErrorCode::InvalidArgument, "state dimension mismatch");
  require(frame.p.rows() == n && frame.p.cols() == n,
          ErrorCode::InvalidArgument, "frame dimension mismatch");

  StateVector f(d);
  f.value() = ds.implied_value(dp.r);
  if (frame.p.isIdentity(0.0)) {
    for (int i = 1; i <= n; ++i) f.dy(i) = ds.dy(i);
    for (int i = 1; i <= d; ++i) f.d2(i) = ds.d2(i);
    return f;
  }

  double maxx = 0.0;
  for (double v : dp.xd) maxx = std::max(maxx, std::abs(v));
  double gap_tol = 1e-8 * maxx;
  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l)
      gap = std::min(gap, std::abs(dp.xd[k] - dp.xd[l]));
  require(gap > gap_tol, ErrorCode::EigenvalueCollision,
          "diagonal coefficients too close for rotation (gap " +
              std::to_string(gap) + ", tol " + std::to_string(gap_tol) + ")");

  const Matrix& pm = frame.p;
  for (int i = 1; i <= n; ++i) {
    double d1 = 0.0;
    for (int k = 1; k <= n; ++k) d1 += pm(i - 1, k - 1) * ds.dy(k);
    f.dy(i) = d1;
  }
  for (int i = 1; i <= d; ++i) {
    double acc = 0.0;
    for (int k = 1; k <= n; ++k)
      acc += pm(i - 1, k - 1) * pm(i - 1, k - 1) * ds.d2(k);
    for (int k = 1; k <= n; ++k)
      for (int l = k + 1; l <= n; ++l) {
        double cross = pm(i - 1, k - 1) * pm(i - 1, l - 1) /
                       (dp.xd[k - 1] - dp.xd[l - 1]);
        acc -= cross * (dp.yd[k - 1] * ds.dy(l) - dp.yd[l - 1] * ds.dy(k));
      }
    f.d2(i) = acc;
  }
  return f;
}

FullEval eval_full_state(const FullParams& p, double tol,
                         const OdeSettings& s, std::uint64_t seed) {
  p.validate();
  FullParams attempt_params = p;
  for (int attempt = 0;; ++attempt) {
    auto [dp, frame] = diagonalize(attempt_params);
    try {
      DiagParams dp1 = dp;
      dp1.r = 1.0;
      double r = dp.r;
      if (r != 1.0) {
        // Homogeneity: Z(x, y, r) = r^d Z(x r^2, y r, 1).
        for (int i = 0; i <= dp.d; ++i) {
          dp1.xd[i] = dp.xd[i] * r * r;
          dp1.yd[i] = dp.yd[i] * r;
        }
      }
      DiagEval de = eval_diag_state(dp1, tol, s);
      DiagStateVector at_r = de.state;
      if (r != 1.0) {
        double f1 = std::pow(r, dp.d + 1);
        double f2 = std::pow(r, dp.d + 2);
        for (int i = 1; i <= dp.d + 1; ++i) {
          at_r.dy(i) = de.state.dy(i) * f1;
          at_r.d2(i) = de.state.d2(i) * f2;
        }
        de.value *= std::pow(r, dp.d);
        de.value_bound *= std::pow(r, dp.d);
        de.derivative_bound_heuristic *= f2;
      }
      FullEval out;
      out.state = rotate_to_full(at_r, frame, dp);
      out.diag = std::move(de);
      out.params = attempt_params;
      out.frame = frame;
      out.diag_params = dp;
      out.jitters = attempt;
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EigenvalueCollision || attempt >= 3) throw;
      double maxx = 1.0;
      for (double v : attempt_params.x) maxx = std::max(maxx, std::abs(v));
      double mag = 1e-6 * maxx;
      Rng rng(derive_seed(seed, 0xecu + attempt));
      for (double& v : attempt_params.x) v += rng.uniform(-mag, mag);
    }
  }
}

}  // namespace hgm
}  // namespace fb
