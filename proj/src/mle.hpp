#pragma once

// Maximum-likelihood estimation on the unit sphere.
//
// The log-likelihood of a dataset T^(1..n) is
//   l(x, y) = sum_{i<=j} x_ij S2_ij + y'S1 - n log Z(x, y)
// with S1, S2 the sufficient statistics and each off-diagonal coefficient
// counted once (the exponent convention of FullParams). Its gradient needs
// only the state vector: d_i Z / Z for y, d_i^2 Z / Z for diagonals, and the
// mixed seconds (recovered from the state by the factored P2/Q2 relation)
// for off-diagonals. The direction x -> x + cI is exactly flat at r = 1 and
// is projected out of the gradient; the reported estimate fixes the gauge
// x_{d+1,d+1} = 0.
//
// Optimization runs in two phases per start: a Nelder-Mead warm start that
// only needs Z values, followed by gradient ascent in which the state is
// transported between parameter points by integrating
//   dF/ds = (sum_i dy_i H_i + sum_{i<=j} dx_ij H_ij) F
// along the straight segment with classical RK4 substeps, so Z and its
// derivatives ride along with the parameters instead of being recomputed.

#include <cstdint>
#include <vector>

#include "hgm.hpp"
#include "model.hpp"

namespace fb {
namespace mle {

struct MleConfig {
  int starts = 8;
  double grad_tol = 1e-5;        // per observation; stop at grad_tol * n
  int max_iters = 2000;
  double max_step_norm = 0.1;    // cap on |theta_step|_2
  double nm_diameter_tol = 1e-3;
  double eval_tol = 1e-10;       // series tolerance for state evaluations
  hgm::OdeSettings ode;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class MleStatus { Converged, Aborted, MaxIters };

const char* mle_status_name(MleStatus s);

struct MleResult {
  FullParams theta_hat;   // gauge-normalized: x_{d+1,d+1} = 0
  double loglik = 0.0;
  double grad_norm = 0.0; // sup-norm of the projected gradient
  StateVector state;      // F(Z) at theta_hat
  int iters = 0;
  int restarts = 0;
  MleStatus status = MleStatus::Aborted;
};

// Gradient layout: x coefficients in ut_index order, then y entries.
inline int grad_size(int d) { return ut_size(d) + d + 1; }

double loglik(const FullParams& p, const SufficientStats& stats, double z);

// Gradient of loglik from the state vector; p.r must be 1 (the flat-trace
// projection assumes the unit sphere). f.value() must be positive.
Vector loglik_gradient(const FullParams& p, const StateVector& f,
                       const SufficientStats& stats);

// Nelder-Mead on (x with x_{d+1,d+1} fixed to 0, y), objective -loglik with
// Z from the diagonal evaluation route; starts from a seeded random point
// with coordinates in (0,1). Stops when the simplex diameter drops below
// nm_diameter_tol (or after an internal evaluation budget).
FullParams nelder_mead_warmstart(const SufficientStats& stats,
                                 const MleConfig& cfg);

// Gradient ascent with state transport, backtracking (shrink 0.5, at most
// 20 trials per step, ascent enforced), and re-anchoring of the state by a
// fresh full evaluation every 25 accepted steps.
MleResult hgd_run(const SufficientStats& stats, const FullParams& theta0,
                  const MleConfig& cfg);

// Full pipeline: cfg.starts independent seeded attempts (warm start + HGD),
// run concurrently; an aborted attempt is retried once from a perturbed
// copy of its abort point. Returns the best converged result (ties broken
// by start index); AllStartsFailed if none converges.
MleResult mle_pipeline(const Dataset& data, const MleConfig& cfg);

}  // namespace mle
}  // namespace fb
