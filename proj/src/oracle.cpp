#include "oracle.hpp"

#include <cmath>

#include "pfaffian.hpp"
#include "rng.hpp"
#include "series.hpp"
#include "threads.hpp"

namespace fb {
namespace oracle {

namespace {

constexpr long kChunk = 1 << 16;

// Per-chunk Welford accumulator over a fixed-length vector of integrands.
struct Moments {
  long n = 0;
  std::vector<double> mean, m2;

  explicit Moments(std::size_t k = 0) : mean(k, 0.0), m2(k, 0.0) {}

  void add(const std::vector<double>& g) {
    ++n;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double delta = g[i] - mean[i];
      mean[i] += delta / n;
      m2[i] += delta * (g[i] - mean[i]);
    }
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    long nab = n + o.n;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      double delta = o.mean[i] - mean[i];
      mean[i] += delta * o.n / nab;
      m2[i] += o.m2[i] + delta * delta * (static_cast<double>(n) * o.n / nab);
    }
    n = nab;
  }
};

// Runs `eval` over n samples of uniform points on S^d(r), chunked into
// independent derived streams, and returns the merged moments. eval fills a
// k-vector of integrand values for one point t.
Moments run_chunks(const FullParams& p, long n, std::uint64_t seed,
                   std::size_t k,
                   const std::function<void(const double*, double,
                                            std::vector<double>&)>& eval) {
  p.validate();
  require(n >= 100, ErrorCode::InvalidArgument,
          "Monte-Carlo runs need n >= 100");
  std::size_t nchunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  std::vector<Moments> slots(nchunks);
  parallel_chunks(nchunks, [&](std::size_t c) {
    long lo = static_cast<long>(c) * kChunk;
    long count = std::min(kChunk, n - lo);
    Rng rng(derive_seed(seed, c));
    Moments acc(k);
    std::vector<double> g(k);
    for (long s = 0; s < count; ++s) {
      std::vector<double> t = rng.sphere_point(p.d + 1, p.r);
      double w = std::exp(p.exponent(t.data()));
      eval(t.data(), w, g);
      acc.add(g);
    }
    slots[c] = std::move(acc);
  });
  Moments total(k);
  for (const Moments& m : slots) total.merge(m);
  return total;
}

McEstimate to_estimate(const Moments& m, std::size_t i, double scale) {
  McEstimate e;
  e.n_samples = m.n;
  e.value = scale * m.mean[i];
  e.std_err = scale * std::sqrt(m.m2[i] / (m.n - 1) / m.n);
  return e;
}

}  // namespace

McEstimate mc_normalizing_constant(const FullParams& p, long n,
                                   std::uint64_t seed) {
  Moments m = run_chunks(p, n, seed, 1,
                         [](const double*, double w, std::vector<double>& g) {
                           g[0] = w;
                         });
  double scale = series::surface_area(p.d) * std::pow(p.r, p.d);
  return to_estimate(m, 0, scale);
}

McState mc_state(const FullParams& p, long n, std::uint64_t seed) {
  int d = p.d;
  pfaffian::PairIndex pi(d);
  pfaffian::TripleIndex ti(d);
  int ns = 2 * d + 2;
  int np = pi.size();
  int nt = ti.size();
  std::size_t k = static_cast<std::size_t>(ns + np + nt);

  std::vector<std::pair<int, int>> pairs(np);
  for (int c = 0; c < np; ++c) pairs[c] = pi.pair_at(c);
  std::vector<std::array<int, 3>> triples(nt);
  for (int c = 0; c < nt; ++c) triples[c] = ti.triple_at(c);

  Moments m = run_chunks(
      p, n, seed, k,
      [&](const double* t, double w, std::vector<double>& g) {
        g[0] = w;
        for (int i = 1; i <= d + 1; ++i) g[i] = t[i - 1] * w;
        for (int i = 1; i <= d; ++i) g[d + 1 + i] = t[i - 1] * t[i - 1] * w;
        for (int c = 0; c < np; ++c)
          g[ns + c] = t[pairs[c].first - 1] * t[pairs[c].second - 1] * w;
        for (int c = 0; c < nt; ++c)
          g[ns + np + c] = t[triples[c][0] - 1] * t[triples[c][1] - 1] *
                           t[triples[c][2] - 1] * w;
      });

  double scale = series::surface_area(d) * std::pow(p.r, d);
  McState out;
  out.d = d;
  out.n_samples = m.n;
  out.state = StateVector(d);
  out.state_err.resize(ns);
  out.f2.resize(np);
  out.f2_err.resize(np);
  out.f3.resize(nt);
  out.f3_err.resize(nt);
  for (int i = 0; i < ns; ++i) {
    McEstimate e = to_estimate(m, i, scale);
    out.state.entries[i] = e.value;
    out.state_err[i] = e.std_err;
  }
  for (int c = 0; c < np; ++c) {
    McEstimate e = to_estimate(m, ns + c, scale);
    out.f2[c] = e.value;
    out.f2_err[c] = e.std_err;
  }
  for (int c = 0; c < nt; ++c) {
    McEstimate e = to_estimate(m, ns + np + c, scale);
    out.f3[c] = e.value;
    out.f3_err[c] = e.std_err;
  }
  return out;
}

std::vector<McEstimate> mc_functionals(const FullParams& p, long n,
                                       std::uint64_t seed,
                                       const std::vector<Functional>& funcs) {
  require(!funcs.empty(), ErrorCode::InvalidArgument,
          "mc_functionals needs at least one functional");
  std::size_t k = funcs.size();
  Moments m = run_chunks(p, n, seed, k,
                         [&](const double* t, double w,
                             std::vector<double>& g) {
                           for (std::size_t i = 0; i < k; ++i)
                             g[i] = funcs[i](t) * w;
                         });
  double scale = series::surface_area(p.d) * std::pow(p.r, p.d);
  std::vector<McEstimate> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = to_estimate(m, i, scale);
  return out;
}

Dataset rejection_sample(const FullParams& p, int n, std::uint64_t seed) {
  p.validate();
  require(p.r == 1.0, ErrorCode::InvalidArgument,
          "rejection_sample is defined on the unit sphere (r = 1)");
  require(n >= 1, ErrorCode::InvalidArgument, "need n >= 1 samples");

  EigenDecomposition eig = jacobi_eigen(p.qf_matrix());
  double lam_max = eig.values[p.d];
  double ynorm = 0.0;
  for (double v : p.y) ynorm += v * v;
  double envelope = lam_max + std::sqrt(ynorm);

  Dataset out;
  out.d = p.d;
  out.n_samples = n;
  out.points.reserve(static_cast<std::size_t>(n) * (p.d + 1));
  Rng rng(seed);
  long proposals = 0;
  int accepted = 0;
  constexpr long kCheckEvery = 1L << 22;
  while (accepted < n) {
    std::vector<double> t = rng.sphere_point(p.d + 1, 1.0);
    ++proposals;
    double logratio = p.exponent(t.data()) - envelope;
    if (std::log(std::max(rng.uniform(), 1e-300)) < logratio) {
      out.points.insert(out.points.end(), t.begin(), t.end());
      ++accepted;
    }
    if (proposals % kCheckEvery == 0) {
      double rate = static_cast<double>(accepted) / proposals;
      require(rate >= 1e-6, ErrorCode::AcceptanceTooLow,
              "rejection sampler acceptance rate below 1e-6");
    }
  }
  return out;
}

}  // namespace oracle
}  // namespace fb
