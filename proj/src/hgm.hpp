#pragma once

// Evaluation of the diagonal-parameter state anywhere in parameter space.
//
// Inside the fast-convergence region (load L <= 0.9) the series is summed
// directly. Outside, the parameters are shrunk by r1 = sum|x_i| + sum y_i^2
// so the series converges at (x/r1^2, y/r1, r = 1), and the state is carried
// to r = r1 by integrating the radial ODE system
//
//   dG/dr = (P(r) - r lambda I) G,   F = exp(lambda (r^2 - r0^2) / 2) G
//
// with lambda = 2 max_i x_i subtracted to remove the dominant exponential
// growth. The result is mapped back through the homogeneity relation
// Z(x/r1^2, y/r1, r1) = r1^d Z(x, y, 1), whose chain-rule factors are
// r1^-(d+1) for first derivatives and r1^-(d+2) for second derivatives.
//
// Statistical error propagation perturbs the initial series state with
// Gaussian noise and reports the spread of the implied values after
// extension. Rotation back to full (non-diagonal) coordinates eliminates
// mixed second derivatives through the orbit identity
//   d_k d_l Z = -(y_k d_l - y_l d_k) Z / (2 (x_k - x_l)),
// which requires distinct diagonal coefficients.

#include <cstdint>
#include <string>

#include "model.hpp"
#include "series.hpp"

namespace fb {
namespace hgm {

struct OdeSettings {
  // Per-step absolute tolerance is abs_tol_coeff * mean_i |G_i|, refreshed
  // at every step, mixed with rel_tol against the entry magnitudes.
  double abs_tol_coeff = 1e-6;
  double rel_tol = 1e-8;
  double initial_step = 0.0;  // <= 0 selects 1e-2 of the range
  long max_steps = 200000;    // accepted + rejected attempts
  std::string method = "rkf45";

  void validate() const;
};

struct ErrorEstimate {
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.95;
  int replicas = 0;
};

// Radial coefficient matrix P(r) of the unscaled system dF/dr = P(r) F in
// the diagonal-state layout (d_1..d_{d+1}, d_1^2..d_{d+1}^2).
Matrix p_r_matrix(const DiagParams& p, double at_r);

// Largest eigenvalue of lim_{r->inf} P(r)/r, which is 2 max_i x_i.
double lambda_scale(const DiagParams& p);

// Integrates the state from r0 = p.r to r1 with an embedded
// Runge-Kutta-Fehlberg 4(5) pair under PI step control. Deterministic.
DiagStateVector hgm_extend(const DiagParams& p, const DiagStateVector& g0,
                           double r1, const OdeSettings& s = OdeSettings{});

struct DiagEval {
  DiagStateVector state;   // at the requested parameters, r = 1
  double value = 0.0;      // implied Z (sphere identity applied to state)
  std::string route;       // "series" or "hgm"
  double r1 = 1.0;         // 1 on the series route
  int order = 0;           // series order used (at scaled params on "hgm")
  double value_bound = 0.0;
  double derivative_bound_heuristic = 0.0;
};

// Evaluate the state at p (p.r must be 1). tol is the absolute truncation
// target for the series stage. force_r1 > 0 forces the scaled-series + ODE
// route with the given r1 regardless of the load (testing knob); 0 selects
// the route automatically. On the "hgm" route the reported bounds are
// heuristic forward estimates (initial truncation plus accumulated per-step
// tolerance, both relative), not rigorous enclosures.
DiagEval eval_diag_state(const DiagParams& p, double tol,
                         const OdeSettings& s = OdeSettings{},
                         double force_r1 = 0.0);

// Ensemble error propagation: evaluates once unperturbed, then `replicas`
// times with iid Gaussian noise (sd = eps/2) added to every entry of the
// initial series state before extension. Mean/sd/CI of the implied Z over
// the replicas; replica k draws from an independent stream derived from
// (seed, k), so the result is independent of scheduling.
ErrorEstimate perturbed_ensemble(const DiagParams& p, double tol, double eps,
                                 int replicas = 200, double confidence = 0.95,
                                 std::uint64_t seed = 0,
                                 const OdeSettings& s = OdeSettings{});

// Two-sided standard-normal quantile helper: returns z with
// P(|N(0,1)| <= z) = confidence. Exposed for tests and the CLI.
double normal_quantile_two_sided(double confidence);

// Rotate a diagonal state to the full-coordinate state for parameters
// x = P diag(xd) P', y = P yd. Requires pairwise-distinct xd entries
// (gap > 1e-8 max|xd|) unless the frame is exactly the identity;
// EigenvalueCollision otherwise.
StateVector rotate_to_full(const DiagStateVector& ds,
                           const OrthogonalFrame& frame, const DiagParams& dp);

struct FullEval {
  StateVector state;     // F(Z) at params (value, d_i, d_i^2 for i <= d)
  DiagEval diag;         // diagonal-route metadata
  FullParams params;     // actually evaluated params (jittered on collision)
  OrthogonalFrame frame; // eigenvector frame of params
  DiagParams diag_params;
  int jitters = 0;
};

// Full-parameter evaluation: diagonalize, evaluate (any r > 0; handled by
// the homogeneity relation), rotate back. On an eigenvalue collision the
// quadratic coefficients are jittered by a symmetric random perturbation of
// magnitude 1e-6 max(1, max|x|) and the evaluation retries, at most three
// times, using streams derived from seed.
FullEval eval_full_state(const FullParams& p, double tol,
                         const OdeSettings& s = OdeSettings{},
                         std::uint64_t seed = 0);

}  // namespace hgm
}  // namespace fb
