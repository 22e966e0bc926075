#pragma once

// Shared helpers for the unit tests: relative comparisons, seeded random
// parameter generators, and a tiny wrapper for driving the CLI binary.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace fbtest {

inline double rel_diff(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

inline fb::FullParams random_full(int d, fb::Rng& rng, double scale = 1.0,
                                  double r = 1.0) {
  fb::FullParams p = fb::FullParams::zeros(d, r);
  for (double& c : p.x) c = scale * rng.uniform(-1.0, 1.0);
  for (double& c : p.y) c = scale * rng.uniform(-1.0, 1.0);
  return p;
}

inline fb::DiagParams random_diag(int d, fb::Rng& rng, double scale = 1.0,
                                  double r = 1.0) {
  fb::DiagParams p = fb::DiagParams::zeros(d, r);
  for (double& c : p.xd) c = scale * rng.uniform(-1.0, 1.0);
  for (double& c : p.yd) c = scale * rng.uniform(-1.0, 1.0);
  return p;
}

// Full parameters with diagonal quadratic part (off-diagonals zero), for
// tests that need a series oracle in full-coordinate form.
inline fb::FullParams random_diagonal_full(int d, fb::Rng& rng,
                                           double scale = 1.0,
                                           double r = 1.0) {
  fb::FullParams p = fb::FullParams::zeros(d, r);
  for (int i = 1; i <= d + 1; ++i) p.xc(i, i) = scale * rng.uniform(-1.0, 1.0);
  for (double& c : p.y) c = scale * rng.uniform(-1.0, 1.0);
  return p;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
};

// Runs the CLI with the given arguments. stderr is merged into the captured
// output when merge_stderr is true, otherwise discarded.
inline CliResult run_cli(const std::string& args, bool merge_stderr = true) {
  std::string cmd = std::string(FB_CLI_PATH) + " " + args +
                    (merge_stderr ? " 2>&1" : " 2>/dev/null");
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return res;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

inline std::string temp_path(const std::string& name) {
  return "/tmp/fbtest_" + name;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fbtest
