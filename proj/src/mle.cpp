#include "mle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "pfaffian.hpp"
#include "rng.hpp"
#include "threads.hpp"

namespace fb {
namespace mle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNmMaxEvals = 20000;
constexpr int kMaxBacktracks = 20;
constexpr int kReanchorEvery = 25;
constexpr double kSubstepLength = 0.02;  // transport arc length per RK4 step

// ---------------------------------------------------------------------------
// Coordinate packing. Gradient layout: x in ut_index order, then y. The
// gauge-free layout used by Nelder-Mead drops the x_{d+1,d+1} slot, which is
// the last x entry in ut_index order.
// ---------------------------------------------------------------------------

FullParams params_from_grad_coords(int d, const Vector& th) {
  FullParams p = FullParams::zeros(d, 1.0);
  int xs = ut_size(d);
  for (int k = 0; k < xs; ++k) p.x[k] = th[k];
  for (int i = 0; i < d + 1; ++i) p.y[i] = th[xs + i];
  return p;
}

Vector grad_coords_from_params(const FullParams& p) {
  int xs = ut_size(p.d);
  Vector th(xs + p.d + 1);
  for (int k = 0; k < xs; ++k) th[k] = p.x[k];
  for (int i = 0; i < p.d + 1; ++i) th[xs + i] = p.y[i];
  return th;
}

FullParams params_from_free_coords(int d, const Vector& th) {
  FullParams p = FullParams::zeros(d, 1.0);
  int xs = ut_size(d);
  for (int k = 0; k < xs - 1; ++k) p.x[k] = th[k];  // x_{d+1,d+1} stays 0
  for (int i = 0; i < d + 1; ++i) p.y[i] = th[xs - 1 + i];
  return p;
}

FullParams apply_step(const FullParams& p, const Vector& dth) {
  FullParams q = p;
  int xs = ut_size(p.d);
  for (int k = 0; k < xs; ++k) q.x[k] += dth[k];
  for (int i = 0; i < p.d + 1; ++i) q.y[i] += dth[xs + i];
  return q;
}

// Shift x -> x - x_{d+1,d+1} I and rescale the state by exp(-c r^2), which
// leaves the likelihood and every ratio of state entries unchanged.
void gauge_normalize(FullParams& p, StateVector& f) {
  double c = p.xc(p.d + 1, p.d + 1);
  if (c == 0.0) return;
  for (int i = 1; i <= p.d + 1; ++i) p.xc(i, i) -= c;
  double scale = std::exp(-c * p.r * p.r);
  require(std::isfinite(scale) && scale > 0.0, ErrorCode::Overflow,
          "gauge rescale factor exp(-c r^2) is not finite");
  for (double& e : f.entries) e *= scale;
}

double linear_part(const FullParams& p, const SufficientStats& stats) {
  double lin = 0.0;
  for (int i = 1; i <= p.d + 1; ++i)
    for (int j = i; j <= p.d + 1; ++j)
      lin += p.xc(i, j) * stats.s2(i - 1, j - 1);
  for (int i = 0; i < p.d + 1; ++i) lin += p.y[i] * stats.s1[i];
  return lin;
}

// ---------------------------------------------------------------------------
// State transport along a straight parameter segment theta + s * dth,
// s in [0,1], by classical RK4 on dF/ds = M(s) F with
// M(s) = sum_i dy_i H_i(theta(s)) + sum_{i<=j} dx_ij H_ij(theta(s)).
// The generator is evaluated at the substep endpoints and midpoints; the
// endpoint matrix is shared between consecutive substeps.
// ---------------------------------------------------------------------------

StateVector transport_state(const FullParams& from, const Vector& dth,
                            const StateVector& f0) {
  int d = from.d;
  int xs = ut_size(d);
  std::vector<double> dx(xs), dy(d + 1);
  for (int k = 0; k < xs; ++k) dx[k] = dth[k];
  for (int i = 0; i < d + 1; ++i) dy[i] = dth[xs + i];

  double len = 0.0;
  for (int k = 0; k < dth.size(); ++k) len += dth[k] * dth[k];
  len = std::sqrt(len);
  int nsub = std::max(1, static_cast<int>(std::ceil(len / kSubstepLength)));
  double h = 1.0 / nsub;

  auto gen_at = [&](double s) {
    FullParams ps = from;
    for (int k = 0; k < xs; ++k) ps.x[k] += s * dx[k];
    for (int i = 0; i < d + 1; ++i) ps.y[i] += s * dy[i];
    pfaffian::PfaffianPoint pt(ps);
    return pt.generator(dx, dy);
  };

  Vector f = Eigen::Map<const Vector>(f0.entries.data(),
                                      static_cast<Eigen::Index>(f0.entries.size()));
  Matrix m0 = gen_at(0.0);
  for (int k = 0; k < nsub; ++k) {
    double s0 = k * h;
    Matrix mh = gen_at(s0 + 0.5 * h);
    Matrix m1 = gen_at(s0 + h);
    Vector k1 = m0 * f;
    Vector k2 = mh * (f + 0.5 * h * k1);
    Vector k3 = mh * (f + 0.5 * h * k2);
    Vector k4 = m1 * (f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    require(f.allFinite(), ErrorCode::NonFinite,
            "state transport produced a non-finite entry");
    m0 = std::move(m1);
  }

  StateVector out(d);
  for (std::size_t k = 0; k < out.entries.size(); ++k)
    out.entries[k] = f[static_cast<Eigen::Index>(k)];
  return out;
}

double sup_norm(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

// ---------------------------------------------------------------------------
// Config and result plumbing
// ---------------------------------------------------------------------------

void MleConfig::validate() const {
  require(starts >= 1, ErrorCode::InvalidArgument, "starts must be >= 1");
  require(grad_tol > 0.0 && std::isfinite(grad_tol), ErrorCode::InvalidArgument,
          "grad_tol must be positive");
  require(max_iters >= 1, ErrorCode::InvalidArgument, "max_iters must be >= 1");
  require(max_step_norm > 0.0 && std::isfinite(max_step_norm),
          ErrorCode::InvalidArgument, "max_step_norm must be positive");
  require(nm_diameter_tol > 0.0, ErrorCode::InvalidArgument,
          "nm_diameter_tol must be positive");
  require(eval_tol > 0.0, ErrorCode::InvalidArgument,
          "eval_tol must be positive");
  ode.validate();
}

const char* mle_status_name(MleStatus s) {
  switch (s) {
    case MleStatus::Converged: return "Converged";
    case MleStatus::Aborted: return "Aborted";
    case MleStatus::MaxIters: return "MaxIters";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Likelihood and gradient
// ---------------------------------------------------------------------------

double loglik(const FullParams& p, const SufficientStats& stats, double z) {
  p.validate();
  require(p.d == stats.d, ErrorCode::InvalidArgument,
          "parameter/stats dimension mismatch");
  require(z > 0.0 && std::isfinite(z), ErrorCode::InvalidArgument,
          "normalizing constant must be positive and finite");
  return linear_part(p, stats) - stats.n_samples * std::log(z);
}

Vector loglik_gradient(const FullParams& p, const StateVector& f,
                       const SufficientStats& stats) {
  p.validate();
  require(p.d == stats.d && f.d == p.d, ErrorCode::InvalidArgument,
          "parameter/state/stats dimension mismatch");
  require(p.r == 1.0, ErrorCode::InvalidArgument,
          "likelihood gradient is defined on the unit sphere (r = 1)");
  double z = f.value();
  require(z > 0.0 && std::isfinite(z), ErrorCode::InvalidArgument,
          "state value must be positive and finite");

  int d = p.d;
  double n = static_cast<double>(stats.n_samples);
  pfaffian::PfaffianPoint pt(p);
  Vector mixed = pt.mixed_second(f);
  pfaffian::PairIndex pairs(d);

  Vector g(grad_size(d));
  for (int i = 1; i <= d + 1; ++i) {
    for (int j = i; j <= d + 1; ++j) {
      double moment;
      if (i == j)
        moment = (i <= d) ? f.d2(i) : f.implied_d2_last(p.r);
      else
        moment = mixed[pairs.index(i, j)];
      g[ut_index(i, j, d)] = stats.s2(i - 1, j - 1) - n * moment / z;
    }
  }
  int xs = ut_size(d);
  for (int i = 1; i <= d + 1; ++i)
    g[xs + i - 1] = stats.s1[i - 1] - n * f.dy(i) / z;

  // Remove the component along the flat direction x -> x + c I.
  double mean_diag = 0.0;
  for (int i = 1; i <= d + 1; ++i) mean_diag += g[ut_index(i, i, d)];
  mean_diag /= d + 1;
  for (int i = 1; i <= d + 1; ++i) g[ut_index(i, i, d)] -= mean_diag;
  return g;
}

// ---------------------------------------------------------------------------
// Nelder-Mead warm start
// ---------------------------------------------------------------------------

FullParams nelder_mead_warmstart(const SufficientStats& stats,
                                 const MleConfig& cfg) {
  cfg.validate();
  require(stats.n_samples >= 1, ErrorCode::InvalidArgument,
          "stats must cover at least one observation");
  int d = stats.d;
  int dim = ut_size(d) - 1 + d + 1;
  double n = static_cast<double>(stats.n_samples);

  long evals = 0;
  auto objective = [&](const Vector& th) -> double {
    ++evals;
    FullParams p = params_from_free_coords(d, th);
    try {
      auto [dp, frame] = diagonalize(p);
      (void)frame;
      hgm::DiagEval ev = hgm::eval_diag_state(dp, cfg.eval_tol, cfg.ode);
      double z = ev.value;
      if (!(z > 0.0) || !std::isfinite(z)) return kInf;
      double l = linear_part(p, stats) - n * std::log(z);
      return std::isfinite(l) ? -l : kInf;
    } catch (const Error&) {
      return kInf;
    }
  };

  Rng rng(derive_seed(cfg.seed, 0xa11));
  Vector start(dim);
  for (int k = 0; k < dim; ++k) start[k] = rng.uniform();

  std::vector<Vector> v(dim + 1, start);
  for (int k = 1; k <= dim; ++k) v[k][k - 1] += 0.1;
  std::vector<double> fv(dim + 1);
  for (int k = 0; k <= dim; ++k) fv[k] = objective(v[k]);

  auto order = [&]() {
    std::vector<int> idx(dim + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Vector> v2(dim + 1);
    std::vector<double> f2(dim + 1);
    for (int k = 0; k <= dim; ++k) {
      v2[k] = v[idx[k]];
      f2[k] = fv[idx[k]];
    }
    v = std::move(v2);
    fv = std::move(f2);
  };

  auto diameter = [&]() {
    double dm = 0.0;
    for (int k = 1; k <= dim; ++k)
      dm = std::max(dm, (v[k] - v[0]).cwiseAbs().maxCoeff());
    return dm;
  };

  order();
  while (evals < kNmMaxEvals && diameter() >= cfg.nm_diameter_tol) {
    Vector centroid = Vector::Zero(dim);
    for (int k = 0; k < dim; ++k) centroid += v[k];
    centroid /= dim;

    Vector xr = centroid + (centroid - v[dim]);
    double fr = objective(xr);
    if (fr < fv[0]) {
      Vector xe = centroid + 2.0 * (xr - centroid);
      double fe = objective(xe);
      if (fe < fr) {
        v[dim] = xe;
        fv[dim] = fe;
      } else {
        v[dim] = xr;
        fv[dim] = fr;
      }
    } else if (fr < fv[dim - 1]) {
      v[dim] = xr;
      fv[dim] = fr;
    } else {
      bool outside = fr < fv[dim];
      Vector xc = outside ? centroid + 0.5 * (xr - centroid)
                          : centroid + 0.5 * (v[dim] - centroid);
      double fc = objective(xc);
      double cmp = outside ? fr : fv[dim];
      if (fc < cmp) {
        v[dim] = xc;
        fv[dim] = fc;
      } else {
        for (int k = 1; k <= dim; ++k) {
          v[k] = v[0] + 0.5 * (v[k] - v[0]);
          fv[k] = objective(v[k]);
        }
      }
    }
    order();
  }
  return params_from_free_coords(d, v[0]);
}

// ---------------------------------------------------------------------------
// Gradient ascent with state transport
// ---------------------------------------------------------------------------

MleResult hgd_run(const SufficientStats& stats, const FullParams& theta0,
                  const MleConfig& cfg) {
  cfg.validate();
  theta0.validate();
  require(theta0.d == stats.d, ErrorCode::InvalidArgument,
          "start point/stats dimension mismatch");
  require(theta0.r == 1.0, ErrorCode::InvalidArgument,
          "estimation runs on the unit sphere (r = 1)");
  double n = static_cast<double>(stats.n_samples);
  double stop = cfg.grad_tol * n;

  MleResult res;
  res.theta_hat = theta0;
  res.state = StateVector(theta0.d);
  res.loglik = -kInf;
  res.status = MleStatus::Aborted;

  FullParams p = theta0;
  StateVector f(p.d);
  double l = 0.0;
  Vector g;

  auto anchor = [&](std::uint64_t salt) {
    hgm::FullEval fe =
        hgm::eval_full_state(p, cfg.eval_tol, cfg.ode, derive_seed(cfg.seed, salt));
    f = fe.state;
    l = loglik(p, stats, f.value());
  };

  try {
    anchor(0x1e);
    g = loglik_gradient(p, f, stats);
  } catch (const Error&) {
    return res;  // Aborted at the start point
  }

  auto record = [&]() {
    res.theta_hat = p;
    res.state = f;
    res.loglik = l;
    res.grad_norm = sup_norm(g);
    gauge_normalize(res.theta_hat, res.state);
  };
  record();
  if (sup_norm(g) <= stop) {
    res.status = MleStatus::Converged;
    return res;
  }

  double alpha = 1.0;
  int accepted = 0;
  res.status = MleStatus::MaxIters;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    res.iters = it;
    Vector dth = alpha * g;
    double len = dth.norm();
    if (len > cfg.max_step_norm) dth *= cfg.max_step_norm / len;

    bool ok = false;
    int t = 0;
    FullParams pn;
    StateVector fn(p.d);
    double ln = 0.0;
    try {
      for (; t <= kMaxBacktracks; ++t) {
        fn = transport_state(p, dth, f);
        pn = apply_step(p, dth);
        if (fn.value() > 0.0 && std::isfinite(fn.value())) {
          ln = loglik(pn, stats, fn.value());
          if (std::isfinite(ln) && ln >= l) {
            ok = true;
            break;
          }
        }
        dth *= 0.5;
      }
      if (!ok) {
        res.status = MleStatus::Aborted;  // no ascent step of any size
        return res;
      }
      alpha = (t == 0) ? alpha * 1.5 : alpha * std::pow(0.5, t);
      alpha = std::clamp(alpha, 1e-8, 1e8);

      p = pn;
      f = fn;
      l = ln;
      ++accepted;
      if (accepted % kReanchorEvery == 0)
        anchor(0x2e00 + static_cast<std::uint64_t>(accepted));
      g = loglik_gradient(p, f, stats);
    } catch (const Error&) {
      res.status = MleStatus::Aborted;
      return res;  // res holds the last recorded good point
    }
    record();
    if (sup_norm(g) <= stop) {
      res.status = MleStatus::Converged;
      return res;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Multi-start pipeline
// ---------------------------------------------------------------------------

MleResult mle_pipeline(const Dataset& data, const MleConfig& cfg) {
  cfg.validate();
  data.validate();
  SufficientStats stats = sufficient_stats(data);

  struct Slot {
    bool have = false;
    MleResult result;
    int restarts = 0;
  };
  std::vector<Slot> slots(cfg.starts);

  parallel_chunks(static_cast<std::size_t>(cfg.starts), [&](std::size_t k) {
    MleConfig local = cfg;
    local.seed = derive_seed(cfg.seed, k);
    Slot& slot = slots[k];

    FullParams theta0;
    try {
      theta0 = nelder_mead_warmstart(stats, local);
    } catch (const Error&) {
      return;  // slot stays empty
    }
    MleResult r = hgd_run(stats, theta0, local);
    if (r.status == MleStatus::Aborted) {
      // One retry from a perturbed copy of the abort point.
      slot.restarts = 1;
      Rng rng(derive_seed(cfg.seed, 0xb000 + k));
      FullParams jittered = r.theta_hat;
      for (double& c : jittered.x) c += 0.01 * rng.normal();
      for (double& c : jittered.y) c += 0.01 * rng.normal();
      MleResult r2 = hgd_run(stats, jittered, local);
      if (r2.status == MleStatus::Converged ||
          (r.status != MleStatus::Converged && r2.loglik > r.loglik))
        r = std::move(r2);
    }
    slot.result = std::move(r);
    slot.have = true;
  });

  int total_restarts = 0;
  for (const Slot& s : slots) total_restarts += s.restarts;

  int best = -1;
  for (int k = 0; k < cfg.starts; ++k) {
    if (!slots[k].have || slots[k].result.status != MleStatus::Converged)
      continue;
    if (best < 0 || slots[k].result.loglik > slots[best].result.loglik)
      best = k;
  }
  require(best >= 0, ErrorCode::AllStartsFailed,
          "no start converged; inspect the data scale or increase starts");

  MleResult out = slots[best].result;
  out.restarts = total_restarts;
  return out;
}

}  // namespace mle
}  // namespace fb
