#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "checks.hpp"
#include "common.hpp"
#include "golden_d1.hpp"
#include "model.hpp"
#include "pfaffian.hpp"
#include "series.hpp"
#include "support.hpp"

using namespace fb;
using namespace fb::pfaffian;

namespace {

// Full-parameter state assembled from the one-dimensional series at a
// diagonal coefficient matrix; the series code shares nothing with the
// factored-matrix construction, so it serves as the oracle here.
StateVector state_from_series(const FullParams& p, int order = 40) {
  DiagParams dp;
  dp.d = p.d;
  dp.r = p.r;
  dp.xd.resize(p.d + 1);
  dp.yd.resize(p.d + 1);
  for (int i = 1; i <= p.d + 1; ++i) {
    dp.xd[i - 1] = p.xc(i, i);
    dp.yd[i - 1] = p.y[i - 1];
  }
  DiagStateVector st = series::series_state(dp, order).state;
  StateVector f(p.d);
  f.value() = series::series_value(dp, order);
  for (int i = 1; i <= p.d + 1; ++i) f.dy(i) = st.dy(i);
  for (int i = 1; i <= p.d; ++i) f.d2(i) = st.d2(i);
  return f;
}

Vector to_vector(const StateVector& f) {
  return Eigen::Map<const Vector>(f.entries.data(),
                                  static_cast<Eigen::Index>(f.entries.size()));
}

double max_rel_diff(const Vector& got, const Vector& want) {
  double scale = std::max(want.cwiseAbs().maxCoeff(), 1.0);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("pair index round trip and sizes") {
  CHECK(PairIndex(1).size() == 1);
  CHECK(PairIndex(3).size() == 6);
  CHECK(PairIndex(7).size() == 28);
  for (int d : {1, 2, 3, 7}) {
    PairIndex pairs(d);
    for (int k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs.pair_at(k);
      CHECK(i < j);
      CHECK(pairs.index(i, j) == k);
      CHECK(pairs.index(j, i) == k);
    }
  }
}

TEST_CASE("triple index round trip and sizes") {
  CHECK(TripleIndex(1).size() == 2);
  CHECK(TripleIndex(3).size() == 16);
  CHECK(TripleIndex(7).size() == 112);
  for (int d : {1, 2, 3}) {
    TripleIndex triples(d);
    for (int k = 0; k < triples.size(); ++k) {
      auto t = triples.triple_at(k);
      CHECK(t[0] <= t[1]);
      CHECK(t[1] <= t[2]);
      CHECK(t[1] <= d);
      CHECK(triples.index_of(t[0], t[1], t[2]) == k);
      CHECK(triples.index_of(t[2], t[0], t[1]) == k);
    }
    // middle index above d is not a member
    CHECK(triples.index_of(d + 1, d + 1, d + 1) == -1);
  }
}

TEST_CASE("factored matrices have the block shapes of the index sets") {
  Rng rng(61);
  FullParams p = fbtest::random_full(2, rng);
  SecondFactors sf = build_p2_q2(p);
  ThirdFactors tf = build_p3_q3_r3(p);
  DirectionFactors df = build_abce(p, 1);
  CHECK(sf.p2.rows() == 3);
  CHECK(sf.p2.cols() == 3);
  CHECK(sf.q2.rows() == 3);
  CHECK(sf.q2.cols() == 6);
  CHECK(tf.p3.rows() == 7);
  CHECK(tf.p3.cols() == 7);
  CHECK(tf.q3.rows() == 7);
  CHECK(tf.q3.cols() == 3);
  CHECK(tf.r3.rows() == 7);
  CHECK(tf.r3.cols() == 6);
  CHECK(df.a.rows() == 6);
  CHECK(df.a.cols() == 6);
  CHECK(df.b.rows() == 6);
  CHECK(df.b.cols() == 6);
  CHECK(df.c.rows() == 6);
  CHECK(df.c.cols() == 3);
  CHECK(df.e.rows() == 6);
  CHECK(df.e.cols() == 7);
}

TEST_CASE("circle builders match the independent closed forms") {
  auto results = checks::golden_matrix_checks(101, 20);
  for (const auto& r : results) {
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }

  // one hand-fixed spot check on top of the seeded sweep
  FullParams p = FullParams::zeros(1);
  p.xc(1, 1) = 0.1;
  p.xc(1, 2) = 0.2;
  p.xc(2, 2) = 0.7;
  p.y = {0.3, 0.5};
  golden::GoldenD1 g = golden::golden_d1(p);
  SecondFactors sf = build_p2_q2(p);
  CHECK((sf.p2 - g.p2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((sf.q2 - g.q2).cwiseAbs().maxCoeff() < 1e-14);
  ThirdFactors tf = build_p3_q3_r3(p);
  CHECK((tf.p3 - g.p3).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((tf.q3 - g.q3).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((tf.r3 - g.r3).cwiseAbs().maxCoeff() < 1e-14);
  DirectionFactors d1 = build_abce(p, 1);
  CHECK((d1.a - g.a1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d1.b - g.b1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d1.c - g.c1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d1.e - g.e1).cwiseAbs().maxCoeff() < 1e-14);
  DirectionFactors d2 = build_abce(p, 2);
  CHECK((d2.a - g.a2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d2.b - g.b2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d2.c - g.c2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d2.e - g.e2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("circle direction matrix matches its published closed form") {
  // d = 1, r = 1, state (Z, d1 Z, d2 Z, d1^2 Z): the full H_1 assembled by
  // hand. Rows 1 and 2 are shifts; rows 3 and 4 come from the two-equation
  // linear system written out below.
  const double x11 = 0.1, x12 = 0.2, x22 = 0.7, y1 = 0.3, y2 = 0.5;
  FullParams p = FullParams::zeros(1);
  p.xc(1, 1) = x11;
  p.xc(1, 2) = x12;
  p.xc(2, 2) = x22;
  p.y = {y1, y2};

  const double dd = 2.0 * (x22 - x11);
  Matrix want(4, 4);
  want.setZero();
  want(0, 1) = 1.0;  // d1 Z
  want(1, 3) = 1.0;  // d1^2 Z
  // d1 d2 Z
  want(2, 0) = x12 / dd;
  want(2, 1) = -y2 / dd;
  want(2, 2) = y1 / dd;
  want(2, 3) = -2.0 * x12 / dd;
  // d1^3 Z: first row of S^{-1} [rows a..d; a'..d']
  Matrix s(2, 2);
  s << 2.0 * x12, dd, dd, -2.0 * x12;
  Matrix rhs(2, 4);
  rhs(0, 0) = y1 * x12 / dd;
  rhs(0, 1) = x12 - y1 * y2 / dd;
  rhs(0, 2) = 1.0 + y1 * y1 / dd;
  rhs(0, 3) = -y2 - x12 * y1 / (x22 - x11);
  rhs(1, 0) = -y1 + x12 * y2 / dd;
  rhs(1, 1) = 1.0 + dd - y2 * y2 / dd;
  rhs(1, 2) = -x12 + y1 * y2 / dd;
  rhs(1, 3) = y1 - x12 * y2 / (x22 - x11);
  Matrix solved = s.partialPivLu().solve(rhs);
  want.row(3) = solved.row(0);

  PfaffianPoint pt(p);
  CHECK((pt.h(1) - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("first row of every direction matrix is a coordinate shift") {
  Rng rng(67);
  for (int d : {1, 2, 3}) {
    FullParams p = fbtest::random_full(d, rng);
    PfaffianPoint pt(p);
    for (int i = 1; i <= d + 1; ++i) {
      Vector row = pt.h(i).row(0);
      for (int c = 0; c < row.size(); ++c)
        CHECK(row[c] == doctest::Approx(c == i ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixed transport matrices commute") {
  for (int d = 1; d <= 4; ++d) {
    auto r = checks::integrability_check(d, 6, 1000 + d);
    INFO(r.name, ": ", r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("direction matrices reproduce series derivatives") {
  Rng rng(71);
  const double h = 1e-4;
  for (int d : {1, 2}) {
    FullParams p = fbtest::random_diagonal_full(d, rng, 0.4);
    Vector f = to_vector(state_from_series(p));
    PfaffianPoint pt(p);
    for (int i = 1; i <= d + 1; ++i) {
      FullParams hi = p, lo = p;
      hi.y[i - 1] += h;
      lo.y[i - 1] -= h;
      Vector fd = (to_vector(state_from_series(hi)) -
                   to_vector(state_from_series(lo))) /
                  (2.0 * h);
      Vector got = pt.h(i) * f;
      CHECK(max_rel_diff(got, fd) < 1e-6);
    }
  }
}

TEST_CASE("coefficient-direction matrices reproduce second differences") {
  // dF/dx_ij equals the mixed second y-derivative of the state (diagonal
  // entries included, with the once-counted convention).
  Rng rng(73);
  const double h = 1e-3;
  for (int d : {1, 2}) {
    FullParams p = fbtest::random_diagonal_full(d, rng, 0.4);
    Vector f = to_vector(state_from_series(p));
    PfaffianPoint pt(p);
    for (int i = 1; i <= d + 1; ++i) {
      for (int j = i; j <= d + 1; ++j) {
        Vector fd;
        if (i == j) {
          FullParams hi = p, lo = p;
          hi.y[i - 1] += h;
          lo.y[i - 1] -= h;
          fd = (to_vector(state_from_series(hi)) -
                2.0 * to_vector(state_from_series(p)) +
                to_vector(state_from_series(lo))) /
               (h * h);
        } else {
          FullParams pp = p, pm = p, mp = p, mm = p;
          pp.y[i - 1] += h;
          pp.y[j - 1] += h;
          pm.y[i - 1] += h;
          pm.y[j - 1] -= h;
          mp.y[i - 1] -= h;
          mp.y[j - 1] += h;
          mm.y[i - 1] -= h;
          mm.y[j - 1] -= h;
          fd = (to_vector(state_from_series(pp)) -
                to_vector(state_from_series(pm)) -
                to_vector(state_from_series(mp)) +
                to_vector(state_from_series(mm))) /
               (4.0 * h * h);
        }
        Vector got = pt.h_x(i, j) * f;
        CHECK(max_rel_diff(got, fd) < 2e-4);
      }
    }
  }
}

TEST_CASE("radial matrix reproduces the radius derivative of the state") {
  Rng rng(79);
  const double h = 1e-4;
  for (int d : {1, 2}) {
    for (double r : {1.0, 1.3}) {
      FullParams p = fbtest::random_diagonal_full(d, rng, 0.4);
      p.r = r;
      FullParams hi = p, lo = p;
      hi.r += h;
      lo.r -= h;
      Vector fd = (to_vector(state_from_series(hi)) -
                   to_vector(state_from_series(lo))) /
                  (2.0 * h);
      PfaffianPoint pt(p);
      Vector got = pt.h_r() * to_vector(state_from_series(p));
      CHECK(max_rel_diff(got, fd) < 1e-6);
    }
  }
}

TEST_CASE("mixed second derivatives from the pair system match differences") {
  Rng rng(83);
  const double h = 1e-3;
  for (int d : {2, 3}) {
    FullParams p = fbtest::random_diagonal_full(d, rng, 0.4);
    StateVector f = state_from_series(p);
    PfaffianPoint pt(p);
    Vector mixed = pt.mixed_second(f);
    PairIndex pairs(d);
    REQUIRE(mixed.size() == pairs.size());
    for (int k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs.pair_at(k);
      FullParams pp = p, pm = p, mp = p, mm = p;
      pp.y[i - 1] += h;
      pp.y[j - 1] += h;
      pm.y[i - 1] += h;
      pm.y[j - 1] -= h;
      mp.y[i - 1] -= h;
      mp.y[j - 1] += h;
      mm.y[i - 1] -= h;
      mm.y[j - 1] -= h;
      double fd = (state_from_series(pp).value() -
                   state_from_series(pm).value() -
                   state_from_series(mp).value() +
                   state_from_series(mm).value()) /
                  (4.0 * h * h);
      CHECK(mixed[k] == doctest::Approx(fd).epsilon(2e-4));
    }
  }
}

TEST_CASE("direction matrices are invariant under trace shifts") {
  Rng rng(89);
  for (int d : {1, 2}) {
    FullParams p = fbtest::random_full(d, rng);
    FullParams q = p;
    for (int i = 1; i <= d + 1; ++i) q.xc(i, i) += 0.37;
    PfaffianPoint pp(p), pq(q);
    for (int i = 1; i <= d + 1; ++i) {
      double scale = std::max(pp.h(i).cwiseAbs().maxCoeff(), 1.0);
      CHECK((pp.h(i) - pq.h(i)).cwiseAbs().maxCoeff() / scale < 1e-12);
    }
  }
}

TEST_CASE("third-factor determinant on the circle") {
  Rng rng(97);
  for (int trial = 0; trial < 5; ++trial) {
    FullParams p = fbtest::random_full(1, rng);
    ThirdFactors tf = build_p3_q3_r3(p);
    double dd = 2.0 * (p.xc(2, 2) - p.xc(1, 1));
    double want = -dd * dd - 4.0 * p.xc(1, 2) * p.xc(1, 2);
    CHECK(tf.p3.determinant() == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("degenerate parameters are rejected as singular") {
  FullParams p = FullParams::zeros(1);
  CHECK_THROWS_AS(PfaffianPoint{p}, Error);
}

TEST_CASE("generator is the announced linear combination") {
  Rng rng(103);
  FullParams p = fbtest::random_full(2, rng);
  PfaffianPoint pt(p);
  std::vector<double> dx(ut_size(2), 0.0), dy(3, 0.0);
  dx[1] = 0.3;
  dy[2] = -0.7;
  Matrix want = 0.3 * pt.h_x(1, 2) - 0.7 * pt.h(3);
  Matrix got = pt.generator(dx, dy);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}
