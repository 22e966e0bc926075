#include "checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <vector>

#include "golden_d1.hpp"
#include "hgm.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "pfaffian.hpp"
#include "rng.hpp"

namespace fb {
namespace checks {

namespace {

std::string format_detail(const char* fmt, double a, double b = 0.0,
                          int c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return std::string(buf);
}

FullParams random_params(int d, Rng& rng, double rlo = 1.0, double rhi = 1.0) {
  FullParams p = FullParams::zeros(d, 1.0);
  for (double& c : p.x) c = rng.uniform(-1.0, 1.0);
  for (double& c : p.y) c = rng.uniform(-1.0, 1.0);
  p.r = (rlo == rhi) ? rlo : rng.uniform(rlo, rhi);
  return p;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Monte-Carlo identity rows as flat term lists: each row of a factored
// relation becomes one polynomial integrand whose mean must vanish.
// ---------------------------------------------------------------------------

struct Term {
  double c = 0.0;
  std::array<int, 3> v{-1, -1, -1};  // 0-based coordinate indices, -1 unused
};

using TermList = std::vector<Term>;

double eval_terms(const TermList& terms, const double* t) {
  double s = 0.0;
  for (const Term& tm : terms) {
    double m = tm.c;
    for (int k = 0; k < 3; ++k)
      if (tm.v[k] >= 0) m *= t[tm.v[k]];
    s += m;
  }
  return s;
}

double eval_terms_abs(const TermList& terms, const double* t) {
  double s = 0.0;
  for (const Term& tm : terms) {
    double m = tm.c;
    for (int k = 0; k < 3; ++k)
      if (tm.v[k] >= 0) m *= t[tm.v[k]];
    s += std::abs(m);
  }
  return s;
}

// Variable lists of the monomials in each block of the extended state.
std::array<int, 3> state_vars(int j, int d) {
  if (j == 0) return {-1, -1, -1};
  if (j <= d + 1) return {j - 1, -1, -1};
  int i = j - (d + 1);
  return {i - 1, i - 1, -1};
}

void add_row_terms(TermList& out, double coeff, std::array<int, 3> vars,
                   int extra = -1) {
  if (coeff == 0.0) return;
  Term tm;
  tm.c = coeff;
  int k = 0;
  for (int v : vars)
    if (v >= 0) tm.v[k++] = v;
  if (extra >= 0) {
    if (k >= 3) return;  // degree overflow cannot happen for these rows
    tm.v[k] = extra;
  }
  out.push_back(tm);
}

struct IdentityRows {
  std::vector<TermList> rows;
  std::vector<std::string> labels;
};

IdentityRows identity_rows(const FullParams& p) {
  int d = p.d;
  pfaffian::PairIndex pairs(d);
  pfaffian::TripleIndex triples(d);
  pfaffian::SecondFactors sf = pfaffian::build_p2_q2(p);
  pfaffian::ThirdFactors tf = pfaffian::build_p3_q3_r3(p);

  auto pair_vars = [&](int pos) -> std::array<int, 3> {
    auto [i, j] = pairs.pair_at(pos);
    return {i - 1, j - 1, -1};
  };
  auto triple_vars = [&](int pos) -> std::array<int, 3> {
    std::array<int, 3> tr = triples.triple_at(pos);
    return {tr[0] - 1, tr[1] - 1, tr[2] - 1};
  };

  IdentityRows out;
  int ns = 2 * d + 2;

  for (int row = 0; row < pairs.size(); ++row) {
    TermList terms;
    for (int j = 0; j < pairs.size(); ++j)
      add_row_terms(terms, sf.p2(row, j), pair_vars(j));
    for (int j = 0; j < ns; ++j)
      add_row_terms(terms, sf.q2(row, j), state_vars(j, d));
    out.rows.push_back(std::move(terms));
    out.labels.push_back("pair-closure row " + std::to_string(row));
  }

  for (int row = 0; row < triples.size(); ++row) {
    TermList terms;
    for (int j = 0; j < triples.size(); ++j)
      add_row_terms(terms, tf.p3(row, j), triple_vars(j));
    for (int j = 0; j < pairs.size(); ++j)
      add_row_terms(terms, tf.q3(row, j), pair_vars(j));
    for (int j = 0; j < ns; ++j)
      add_row_terms(terms, tf.r3(row, j), state_vars(j, d));
    out.rows.push_back(std::move(terms));
    out.labels.push_back("triple-closure row " + std::to_string(row));
  }

  for (int dir = 1; dir <= d + 1; ++dir) {
    pfaffian::DirectionFactors f = pfaffian::build_abce(p, dir);
    for (int row = 0; row < ns; ++row) {
      TermList terms;
      for (int j = 0; j < ns; ++j)
        add_row_terms(terms, f.a(row, j), state_vars(j, d), dir - 1);
      for (int j = 0; j < ns; ++j)
        add_row_terms(terms, -f.b(row, j), state_vars(j, d));
      for (int j = 0; j < pairs.size(); ++j)
        add_row_terms(terms, -f.c(row, j), pair_vars(j));
      for (int j = 0; j < triples.size(); ++j)
        add_row_terms(terms, -f.e(row, j), triple_vars(j));
      out.rows.push_back(std::move(terms));
      out.labels.push_back("direction " + std::to_string(dir) + " row " +
                           std::to_string(row));
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<CheckResult> golden_matrix_checks(std::uint64_t seed,
                                              int npoints) {
  double worst_builders = 0.0;
  double worst_radial = 0.0;
  for (int k = 0; k < npoints; ++k) {
    Rng rng(derive_seed(seed, 0x601d + static_cast<std::uint64_t>(k)));
    FullParams p = random_params(1, rng, 0.5, 2.0);
    golden::GoldenD1 g = golden::golden_d1(p);

    pfaffian::SecondFactors sf = pfaffian::build_p2_q2(p);
    pfaffian::ThirdFactors tf = pfaffian::build_p3_q3_r3(p);
    pfaffian::DirectionFactors f1 = pfaffian::build_abce(p, 1);
    pfaffian::DirectionFactors f2 = pfaffian::build_abce(p, 2);
    double m = 0.0;
    m = std::max(m, max_abs_diff(sf.p2, g.p2));
    m = std::max(m, max_abs_diff(sf.q2, g.q2));
    m = std::max(m, max_abs_diff(tf.p3, g.p3));
    m = std::max(m, max_abs_diff(tf.q3, g.q3));
    m = std::max(m, max_abs_diff(tf.r3, g.r3));
    m = std::max(m, max_abs_diff(f1.a, g.a1));
    m = std::max(m, max_abs_diff(f1.b, g.b1));
    m = std::max(m, max_abs_diff(f1.c, g.c1));
    m = std::max(m, max_abs_diff(f1.e, g.e1));
    m = std::max(m, max_abs_diff(f2.a, g.a2));
    m = std::max(m, max_abs_diff(f2.b, g.b2));
    m = std::max(m, max_abs_diff(f2.c, g.c2));
    m = std::max(m, max_abs_diff(f2.e, g.e2));
    worst_builders = std::max(worst_builders, m);

    DiagParams dp = DiagParams::zeros(1, 1.0);
    dp.xd[0] = rng.uniform(-1.0, 1.0);
    dp.xd[1] = rng.uniform(-1.0, 1.0);
    dp.yd[0] = rng.uniform(-1.0, 1.0);
    dp.yd[1] = rng.uniform(-1.0, 1.0);
    double at_r = rng.uniform(0.5, 2.0);
    worst_radial =
        std::max(worst_radial, max_abs_diff(hgm::p_r_matrix(dp, at_r),
                                            golden::golden_d1_radial(dp, at_r)));
  }
  std::vector<CheckResult> out;
  out.push_back({"golden-d1-builders", worst_builders <= 1e-13,
                 format_detail("max |diff| = %.3g over %.0f points",
                               worst_builders, double(npoints))});
  out.push_back({"golden-d1-radial", worst_radial <= 1e-13,
                 format_detail("max |diff| = %.3g over %.0f points",
                               worst_radial, double(npoints))});
  return out;
}

CheckResult integrability_check(int d, int npoints, std::uint64_t seed) {
  double worst = 0.0;
  int produced = 0;
  std::uint64_t draw = 0;
  while (produced < npoints && draw < static_cast<std::uint64_t>(npoints) * 20) {
    Rng rng(derive_seed(seed, 0x16ab + static_cast<std::uint64_t>(d) * 1000 +
                                  draw++));
    FullParams p = random_params(d, rng, 0.5, 2.0);
    try {
      pfaffian::PfaffianPoint pt(p);
      for (int i = 1; i <= d + 1; ++i) {
        for (int j = i + 1; j <= d + 1; ++j) {
          Matrix rij = pt.h_dy(i, j) + pt.h(i) * pt.h(j);
          Matrix rji = pt.h_dy(j, i) + pt.h(j) * pt.h(i);
          double scale = rij.cwiseAbs().maxCoeff();
          double resid = (rij - rji).cwiseAbs().maxCoeff() / scale;
          worst = std::max(worst, resid);
        }
      }
      ++produced;
    } catch (const Error&) {
      continue;  // near the singular locus; redraw
    }
  }
  CheckResult res;
  res.name = "integrability d=" + std::to_string(d);
  res.pass = produced == npoints && worst <= 1e-8;
  res.detail = format_detail("max relative residual = %.3g over %.0f points",
                             worst, double(produced));
  return res;
}

std::vector<CheckResult> mc_identity_checks(int d, int npoints, long n,
                                            std::uint64_t seed) {
  // Each row residual is tested against 3 combined standard errors: the
  // per-term estimates share one sample stream (so the residual itself
  // cancels pointwise), while the budget combines the term standard errors
  // in quadrature as if they were independent. A wrong table entry produces
  // a residual on the scale of a whole term, orders of magnitude above the
  // budget at any useful n; statistical fluctuations stay far below it.
  double worst_pair = 0.0, worst_triple = 0.0, worst_dir = 0.0;
  pfaffian::PairIndex pairs(d);
  pfaffian::TripleIndex triples(d);
  int npair = pairs.size();
  int ntriple = triples.size();

  for (int k = 0; k < npoints; ++k) {
    Rng rng(derive_seed(seed, 0xac1d + static_cast<std::uint64_t>(d) * 1000 +
                                  static_cast<std::uint64_t>(k)));
    FullParams p = random_params(d, rng, 0.6, 1.4);
    IdentityRows rows = identity_rows(p);

    std::vector<oracle::Functional> funcs;
    std::vector<std::size_t> offset;  // position of each row's residual
    for (const TermList& terms : rows.rows) {
      offset.push_back(funcs.size());
      funcs.emplace_back(
          [terms](const double* t) { return eval_terms(terms, t); });
      for (const Term& tm : terms)
        funcs.emplace_back([tm](const double* t) {
          double m = tm.c;
          for (int q = 0; q < 3; ++q)
            if (tm.v[q] >= 0) m *= t[tm.v[q]];
          return m;
        });
    }
    std::vector<oracle::McEstimate> est = oracle::mc_functionals(
        p, n, derive_seed(seed, 0xe57 + static_cast<std::uint64_t>(k)), funcs);

    for (std::size_t row = 0; row < rows.rows.size(); ++row) {
      const oracle::McEstimate& resid = est[offset[row]];
      double var_sum = 0.0, mag = 0.0;
      for (std::size_t q = 1; q <= rows.rows[row].size(); ++q) {
        const oracle::McEstimate& term = est[offset[row] + q];
        var_sum += term.std_err * term.std_err;
        mag += std::abs(term.value);
      }
      double se_comb = std::sqrt(var_sum);
      double floor = 1e-9 * std::max(1.0, mag);
      double ratio = std::abs(resid.value) / (3.0 * se_comb + floor);
      if (row < static_cast<std::size_t>(npair))
        worst_pair = std::max(worst_pair, ratio);
      else if (row < static_cast<std::size_t>(npair + ntriple))
        worst_triple = std::max(worst_triple, ratio);
      else
        worst_dir = std::max(worst_dir, ratio);
    }
  }

  auto mk = [&](const char* name, double worst) {
    CheckResult r;
    r.name = std::string(name) + " d=" + std::to_string(d);
    r.pass = worst <= 1.0;
    r.detail = format_detail(
        "max |residual|/(3 se_comb + floor) = %.3g over %.0f points, n=%d",
        worst, double(npoints), static_cast<int>(n));
    return r;
  };
  return {mk("mc-pair-closure", worst_pair),
          mk("mc-triple-closure", worst_triple),
          mk("mc-direction-relations", worst_dir)};
}

std::vector<CheckResult> run_all(const std::vector<int>& dims, long mc_n,
                                 std::uint64_t seed) {
  std::vector<CheckResult> out = golden_matrix_checks(seed);
  for (int d : dims) {
    require(d >= 1 && d <= kMaxDim, ErrorCode::InvalidArgument,
            "check dimension out of range");
    out.push_back(integrability_check(d, 10, seed));
  }
  for (int d : dims) {
    std::vector<CheckResult> mc = mc_identity_checks(d, 3, mc_n, seed);
    out.insert(out.end(), mc.begin(), mc.end());
  }
  return out;
}

bool all_pass(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

}  // namespace checks
}  // namespace fb
