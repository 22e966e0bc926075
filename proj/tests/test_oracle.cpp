#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "checks.hpp"
#include "common.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "series.hpp"
#include "support.hpp"

using namespace fb;
using namespace fb::oracle;

TEST_CASE("zero parameters estimate the sphere area") {
  FullParams p = FullParams::zeros(2);
  McEstimate e = mc_normalizing_constant(p, 200000, 2024);
  CHECK(e.n_samples == 200000);
  // exact integrand: every sample contributes exactly 1, with zero spread
  CHECK(e.std_err == 0.0);
  CHECK(e.value == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("linear weight estimate against the closed form") {
  FullParams p = FullParams::zeros(2);
  p.y[0] = 1.0;
  McEstimate e = mc_normalizing_constant(p, 400000, 2025);
  double want = 4.0 * std::numbers::pi * std::sinh(1.0);
  CHECK(std::abs(e.value - want) <= 3.0 * e.std_err);
  CHECK(e.std_err < 0.05);
}

TEST_CASE("estimates are reproducible and thread-count independent") {
  Rng rng(151);
  FullParams p = fbtest::random_full(2, rng, 0.5);
  McEstimate a = mc_normalizing_constant(p, 150000, 77);
  McEstimate b = mc_normalizing_constant(p, 150000, 77);
  CHECK(a.value == b.value);
  CHECK(a.std_err == b.std_err);

  setenv("FB_THREADS", "1", 1);
  McEstimate serial = mc_normalizing_constant(p, 150000, 77);
  unsetenv("FB_THREADS");
  CHECK(serial.value == a.value);

  McEstimate other = mc_normalizing_constant(p, 150000, 78);
  CHECK(other.value != a.value);
}

TEST_CASE("sample-size floor") {
  FullParams p = FullParams::zeros(1);
  CHECK_THROWS_AS(mc_normalizing_constant(p, 99, 1), Error);
  CHECK_NOTHROW(mc_normalizing_constant(p, 100, 1));
}

TEST_CASE("odd moments vanish without a linear term") {
  FullParams p = FullParams::zeros(2);
  p.xc(1, 1) = 0.4;
  p.xc(2, 2) = -0.2;
  McState mc = mc_state(p, 200000, 33);
  for (int i = 1; i <= 3; ++i)
    CHECK(std::abs(mc.state.dy(i)) <= 3.0 * mc.state_err[i]);
}

TEST_CASE("sampled state matches the series at diagonal parameters") {
  Rng rng(157);
  for (int d : {1, 2}) {
    FullParams p = fbtest::random_diagonal_full(d, rng, 0.4);
    McState mc = mc_state(p, 300000, 400 + d);

    DiagParams dp;
    dp.d = d;
    dp.r = 1.0;
    dp.xd.resize(d + 1);
    dp.yd.resize(d + 1);
    for (int i = 1; i <= d + 1; ++i) {
      dp.xd[i - 1] = p.xc(i, i);
      dp.yd[i - 1] = p.y[i - 1];
    }
    DiagStateVector st = series::series_state(dp, 40).state;
    double z = series::series_value(dp, 40);

    CHECK(std::abs(mc.state.value() - z) <= 3.0 * mc.state_err[0]);
    for (int i = 1; i <= d + 1; ++i)
      CHECK(std::abs(mc.state.dy(i) - st.dy(i)) <= 3.0 * mc.state_err[i]);
    for (int i = 1; i <= d; ++i)
      CHECK(std::abs(mc.state.d2(i) - st.d2(i)) <=
            3.0 * mc.state_err[d + 1 + i]);
  }
}

TEST_CASE("factored-system rows annihilate sampled moments") {
  for (int d : {1, 2}) {
    auto results = checks::mc_identity_checks(d, 2, 150000, 5000 + d);
    for (const auto& r : results) {
      INFO(r.name, ": ", r.detail);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("rejection sampler produces exact unit vectors deterministically") {
  Rng rng(163);
  FullParams p = fbtest::random_full(2, rng, 0.5);
  Dataset a = rejection_sample(p, 500, 91);
  Dataset b = rejection_sample(p, 500, 91);
  CHECK(a.points == b.points);
  REQUIRE(a.n_samples == 500);
  for (int k = 0; k < a.n_samples; ++k) {
    const double* t = a.row(k);
    double norm = t[0] * t[0] + t[1] * t[1] + t[2] * t[2];
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(validate_on_sphere(a, 1e-10).empty());
}

TEST_CASE("flat weight samples have uniform moments") {
  FullParams p = FullParams::zeros(2);
  Dataset data = rejection_sample(p, 20000, 93);
  SufficientStats s = sufficient_stats(data);
  double n = 20000.0;
  // E[t_i] = 0 with sd 1/sqrt(3); E[t_i^2] = 1/3 with var 4/45
  double se1 = std::sqrt(1.0 / 3.0 / n);
  double se2 = std::sqrt(4.0 / 45.0 / n);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(s.s1[i] / n) <= 3.0 * se1);
    CHECK(std::abs(s.s2(i, i) / n - 1.0 / 3.0) <= 3.0 * se2);
  }
}

TEST_CASE("sampled moments track the weighted-state moments") {
  Rng rng(167);
  FullParams p = fbtest::random_full(2, rng, 0.5);
  long n = 20000;
  Dataset data = rejection_sample(p, static_cast<int>(n), 95);
  SufficientStats s = sufficient_stats(data);

  McState mc = mc_state(p, 500000, 97);
  for (int i = 1; i <= 3; ++i) {
    double want = mc.state.dy(i) / mc.state.value();
    double got = s.s1[i - 1] / n;
    // dominant error is the finite sample, sd of one coordinate <= 1
    CHECK(std::abs(got - want) <= 3.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("hopeless envelopes are rejected rather than looped") {
  FullParams p = FullParams::zeros(2);
  p.y[0] = 4.0e6;
  CHECK_THROWS_AS(rejection_sample(p, 10, 99), Error);
}

TEST_CASE("rejection sampling requires the unit sphere") {
  FullParams p = FullParams::zeros(2);
  p.r = 2.0;
  CHECK_THROWS_AS(rejection_sample(p, 10, 1), Error);
}
