#pragma once

// Self-contained validation suite shared by the CLI `check` command, the C
// API, and the acceptance tests:
//   - the d = 1 factored matrices against independently hand-written
//     closed forms,
//   - integrability of the connection (equality of mixed transport
//     matrices in both orders),
//   - Monte-Carlo verification that the factored-system rows annihilate
//     the moment integrals (pair closure, triple closure, and the
//     direction relations), using common random numbers so each row's
//     residual carries its own standard error.

#include <cstdint>
#include <string>
#include <vector>

namespace fb {
namespace checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// d = 1 builders vs closed forms at `npoints` seeded parameter points, plus
// the radial coefficient matrix. Tolerance 1e-13 absolute.
std::vector<CheckResult> golden_matrix_checks(std::uint64_t seed,
                                              int npoints = 20);

// max over seeded points and index pairs of
// |H_ij - H_ji|_max / |H_ij|_max, threshold 1e-8.
CheckResult integrability_check(int d, int npoints, std::uint64_t seed);

// Monte-Carlo residuals of the three factored-system identities at
// `npoints` seeded parameter points with n samples each. All terms of a row
// share one sample stream; a row passes when
//   |residual| <= 3 se_comb + 1e-9 * max(1, sum_k |term_k|),
// with se_comb the quadrature combination of the per-term standard errors.
std::vector<CheckResult> mc_identity_checks(int d, int npoints, long n,
                                            std::uint64_t seed);

std::vector<CheckResult> run_all(const std::vector<int>& dims, long mc_n,
                                 std::uint64_t seed);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace checks
}  // namespace fb
