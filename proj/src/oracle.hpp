#pragma once

// Independent ground-truth generators used by the test suites: brute-force
// Monte-Carlo estimates of the normalizing constant, its derivative
// integrals, and arbitrary polynomial functionals against the exponential
// weight, plus an exact rejection sampler for synthetic datasets.
//
// Every routine is bit-reproducible given (n, seed) and independent of the
// number of worker threads: samples are generated in fixed-size chunks with
// per-chunk derived streams, each chunk accumulates Welford moments locally,
// and the chunk accumulators are merged in chunk order.

#include <cstdint>
#include <functional>
#include <vector>

#include "model.hpp"

namespace fb {
namespace oracle {

struct McEstimate {
  double value = 0.0;
  double std_err = 0.0;  // standard error of the mean estimate
  long n_samples = 0;
};

// sum over S^d(r) of exp(f(t)) |dt| = surface_area * r^d * E[exp f].
McEstimate mc_normalizing_constant(const FullParams& p, long n,
                                   std::uint64_t seed);

// Monte-Carlo estimates of all monomial-weighted integrals appearing in the
// state and its closures: the state entries (1, t_i, t_i^2), the mixed pairs
// t_i t_j (i < j, lexicographic), and the cubics t_i t_j t_k in the
// third-derivative index order (i <= j <= k <= d+1, j <= d, lexicographic).
struct McState {
  int d = 1;
  long n_samples = 0;
  StateVector state;
  std::vector<double> state_err;  // one per state entry
  std::vector<double> f2, f2_err;
  std::vector<double> f3, f3_err;
};
McState mc_state(const FullParams& p, long n, std::uint64_t seed);

// Estimates of sum over S^d(r) of g_k(t) exp(f(t)) |dt| for each supplied
// functional, all evaluated on one shared sample stream (common random
// numbers), so linear identities among the integrands can be tested as a
// single functional with its own standard error.
using Functional = std::function<double(const double*)>;
std::vector<McEstimate> mc_functionals(const FullParams& p, long n,
                                       std::uint64_t seed,
                                       const std::vector<Functional>& funcs);

// Exact sampler on the unit sphere (p.r must be 1): uniform proposals,
// acceptance exp(f(t) - M) with the envelope M = lambda_max(x) + |y|.
// Sequential by construction; deterministic given seed. AcceptanceTooLow
// when the running acceptance rate drops below 1e-6.
Dataset rejection_sample(const FullParams& p, int n, std::uint64_t seed);

}  // namespace oracle
}  // namespace fb
