#include "fisher_bingham.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include "checks.hpp"
#include "common.hpp"
#include "hgm.hpp"
#include "mle.hpp"
#include "model.hpp"
#include "oracle.hpp"

namespace {

thread_local std::string t_error;

fb_status status_of(const fb::Error& e) {
  t_error = e.what();
  switch (e.code()) {
    case fb::ErrorCode::InvalidArgument:
      return FB_ERR_INVALID_ARGUMENT;
    case fb::ErrorCode::AllStartsFailed:
      return FB_ERR_MLE_FAILED;
    default:
      return FB_ERR_EVALUATION;
  }
}

fb_status status_of(const std::exception& e) {
  t_error = e.what();
  return FB_ERR_EVALUATION;
}

fb_status invalid(const char* msg) {
  t_error = msg;
  return FB_ERR_INVALID_ARGUMENT;
}

void copy_name(char* dst, size_t cap, const char* src) {
  std::snprintf(dst, cap, "%s", src);
}

// Homogeneity: Z(x, y, r) = r^d Z(x r^2, y r, 1). Evaluation always runs at
// radius 1; general radii are mapped through this identity.
fb::FullParams to_unit_radius(const fb::FullParams& p) {
  fb::FullParams q = p;
  double r2 = p.r * p.r;
  for (double& c : q.x) c *= r2;
  for (double& c : q.y) c *= p.r;
  q.r = 1.0;
  return q;
}

}  // namespace

struct fb_params {
  fb::FullParams p;
};

struct fb_options {
  double tol = 1e-10;
  double eps = 0.0;
  int replicas = 200;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  fb::hgm::OdeSettings ode;
  fb::mle::MleConfig mle;
  long check_n = 1000000;
  std::vector<int> check_dims{1, 2, 3};
};

extern "C" {

const char* fb_version(void) { return "fisherbingham 1.0.0"; }

const char* fb_last_error(void) { return t_error.c_str(); }

int fb_ut_size(int d) { return fb::ut_size(d); }

fb_params* fb_params_create_full(int d, const double* x_upper,
                                 const double* y, double r) {
  t_error.clear();
  try {
    if (d < 1 || d > FB_MAX_DIM || x_upper == nullptr || y == nullptr) {
      t_error = "bad dimension or null coefficient pointer";
      return nullptr;
    }
    fb::FullParams p = fb::FullParams::zeros(d, r);
    std::copy(x_upper, x_upper + fb::ut_size(d), p.x.begin());
    std::copy(y, y + d + 1, p.y.begin());
    p.validate();
    return new fb_params{std::move(p)};
  } catch (const std::exception& e) {
    t_error = e.what();
    return nullptr;
  }
}

fb_params* fb_params_create_matrix(int d, const double* m, const double* y,
                                   double r) {
  t_error.clear();
  try {
    if (d < 1 || d > FB_MAX_DIM || m == nullptr || y == nullptr) {
      t_error = "bad dimension or null coefficient pointer";
      return nullptr;
    }
    fb::Matrix mm(d + 1, d + 1);
    for (int i = 0; i <= d; ++i)
      for (int j = 0; j <= d; ++j) mm(i, j) = m[i * (d + 1) + j];
    std::vector<double> yv(y, y + d + 1);
    fb::FullParams p = fb::FullParams::from_matrix(mm, yv, r);
    p.validate();
    return new fb_params{std::move(p)};
  } catch (const std::exception& e) {
    t_error = e.what();
    return nullptr;
  }
}

void fb_params_destroy(fb_params* p) { delete p; }

fb_options* fb_options_create(void) {
  t_error.clear();
  return new (std::nothrow) fb_options{};
}

void fb_options_destroy(fb_options* o) { delete o; }

fb_status fb_options_set(fb_options* o, const char* key, double value) {
  t_error.clear();
  if (o == nullptr || key == nullptr) return invalid("null options or key");
  if (!std::isfinite(value)) return invalid("option value must be finite");
  std::string k(key);
  auto positive = [&](double v) { return v > 0.0; };
  if (k == "tol") {
    if (!positive(value)) return invalid("tol must be positive");
    o->tol = value;
  } else if (k == "eps") {
    if (value < 0.0) return invalid("eps must be nonnegative");
    o->eps = value;
  } else if (k == "replicas") {
    if (value < 2.0) return invalid("replicas must be at least 2");
    o->replicas = static_cast<int>(value);
  } else if (k == "confidence") {
    if (value <= 0.0 || value >= 1.0)
      return invalid("confidence must lie in (0,1)");
    o->confidence = value;
  } else if (k == "ode_abs_tol_coeff") {
    if (!positive(value)) return invalid("ode_abs_tol_coeff must be positive");
    o->ode.abs_tol_coeff = value;
    o->mle.ode.abs_tol_coeff = value;
  } else if (k == "ode_rel_tol") {
    if (!positive(value)) return invalid("ode_rel_tol must be positive");
    o->ode.rel_tol = value;
    o->mle.ode.rel_tol = value;
  } else if (k == "ode_initial_step") {
    o->ode.initial_step = value;
    o->mle.ode.initial_step = value;
  } else if (k == "ode_max_steps") {
    if (value < 1.0) return invalid("ode_max_steps must be at least 1");
    o->ode.max_steps = static_cast<long>(value);
    o->mle.ode.max_steps = static_cast<long>(value);
  } else if (k == "mle_starts") {
    if (value < 1.0) return invalid("mle_starts must be at least 1");
    o->mle.starts = static_cast<int>(value);
  } else if (k == "mle_grad_tol") {
    if (!positive(value)) return invalid("mle_grad_tol must be positive");
    o->mle.grad_tol = value;
  } else if (k == "mle_max_iters") {
    if (value < 1.0) return invalid("mle_max_iters must be at least 1");
    o->mle.max_iters = static_cast<int>(value);
  } else if (k == "mle_max_step_norm") {
    if (!positive(value)) return invalid("mle_max_step_norm must be positive");
    o->mle.max_step_norm = value;
  } else if (k == "mle_nm_diameter_tol") {
    if (!positive(value))
      return invalid("mle_nm_diameter_tol must be positive");
    o->mle.nm_diameter_tol = value;
  } else if (k == "mle_eval_tol") {
    if (!positive(value)) return invalid("mle_eval_tol must be positive");
    o->mle.eval_tol = value;
  } else if (k == "check_n") {
    if (value < 100.0) return invalid("check_n must be at least 100");
    o->check_n = static_cast<long>(value);
  } else {
    t_error = "unknown option key: " + k;
    return FB_ERR_INVALID_ARGUMENT;
  }
  return FB_OK;
}

fb_status fb_options_set_seed(fb_options* o, unsigned long long seed) {
  t_error.clear();
  if (o == nullptr) return invalid("null options");
  o->seed = seed;
  o->mle.seed = seed;
  return FB_OK;
}

fb_status fb_options_set_check_dims(fb_options* o, const int* dims,
                                    int ndims) {
  t_error.clear();
  if (o == nullptr || dims == nullptr || ndims < 1)
    return invalid("null options or empty dims");
  for (int k = 0; k < ndims; ++k)
    if (dims[k] < 1 || dims[k] > FB_MAX_DIM)
      return invalid("check dimension out of range");
  o->check_dims.assign(dims, dims + ndims);
  return FB_OK;
}

fb_status fb_normconst(const fb_params* p, const fb_options* o,
                       fb_normconst_result* out) {
  t_error.clear();
  if (p == nullptr || out == nullptr)
    return invalid("null params or result pointer");
  fb_options defaults;
  const fb_options& opt = o ? *o : defaults;
  try {
    fb::FullParams unit = to_unit_radius(p->p);
    double rpow = std::pow(p->p.r, p->p.d);
    auto [dp, frame] = fb::diagonalize(unit);
    (void)frame;
    fb::hgm::DiagEval ev = fb::hgm::eval_diag_state(dp, opt.tol, opt.ode);
    out->value = rpow * ev.value;
    out->r1 = ev.r1;
    out->series_order = ev.order;
    copy_name(out->route, sizeof out->route, ev.route.c_str());
    if (opt.eps > 0.0) {
      fb::hgm::ErrorEstimate ens = fb::hgm::perturbed_ensemble(
          dp, opt.tol, opt.eps, opt.replicas, opt.confidence, opt.seed,
          opt.ode);
      out->sd = rpow * ens.sd;
      out->ci_low = rpow * ens.ci_low;
      out->ci_high = rpow * ens.ci_high;
    } else {
      out->sd = 0.0;
      out->ci_low = out->value;
      out->ci_high = out->value;
    }
    return FB_OK;
  } catch (const fb::Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

fb_status fb_state_eval(const fb_params* p, const fb_options* o,
                        double* out_state, int state_len) {
  t_error.clear();
  if (p == nullptr || out_state == nullptr)
    return invalid("null params or output pointer");
  int need = 2 * p->p.d + 2;
  if (state_len < need) {
    t_error = "state buffer needs " + std::to_string(need) + " entries";
    return FB_ERR_BUFFER_TOO_SMALL;
  }
  fb_options defaults;
  const fb_options& opt = o ? *o : defaults;
  try {
    fb::hgm::FullEval fe =
        fb::hgm::eval_full_state(p->p, opt.tol, opt.ode, opt.seed);
    for (int k = 0; k < need; ++k) out_state[k] = fe.state.entries[k];
    return FB_OK;
  } catch (const fb::Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

fb_status fb_mle(int d, int n_samples, const double* points,
                 const fb_options* o, fb_mle_result* out) {
  t_error.clear();
  if (points == nullptr || out == nullptr)
    return invalid("null points or result pointer");
  if (d < 1 || d > FB_MAX_DIM) return invalid("dimension out of range");
  if (n_samples < 1) return invalid("need at least one sample");
  fb_options defaults;
  const fb_options& opt = o ? *o : defaults;
  try {
    fb::Dataset data;
    data.d = d;
    data.n_samples = n_samples;
    data.points.assign(points,
                       points + static_cast<size_t>(n_samples) * (d + 1));
    std::vector<int> off = fb::validate_on_sphere(data, 1e-8);
    if (!off.empty()) {
      t_error = "row " + std::to_string(off.front() + 1) +
                " is not on the unit sphere (tolerance 1e-8)";
      return FB_ERR_INVALID_ARGUMENT;
    }
    fb::mle::MleResult res = fb::mle::mle_pipeline(data, opt.mle);
    out->d = d;
    std::fill(out->x, out->x + FB_MAX_UT, 0.0);
    std::fill(out->y, out->y + FB_MAX_Y, 0.0);
    for (int k = 0; k < fb::ut_size(d); ++k) out->x[k] = res.theta_hat.x[k];
    for (int k = 0; k < d + 1; ++k) out->y[k] = res.theta_hat.y[k];
    out->loglik = res.loglik;
    out->grad_norm = res.grad_norm;
    out->iters = res.iters;
    out->restarts = res.restarts;
    copy_name(out->status, sizeof out->status,
              fb::mle::mle_status_name(res.status));
    return FB_OK;
  } catch (const fb::Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

fb_status fb_sample(const fb_params* p, int n, unsigned long long seed,
                    double* out_points, int out_len) {
  t_error.clear();
  if (p == nullptr || out_points == nullptr)
    return invalid("null params or output pointer");
  if (n < 1) return invalid("need at least one sample");
  long long need = static_cast<long long>(n) * (p->p.d + 1);
  if (out_len < need) {
    t_error = "points buffer needs " + std::to_string(need) + " entries";
    return FB_ERR_BUFFER_TOO_SMALL;
  }
  try {
    fb::Dataset data = fb::oracle::rejection_sample(p->p, n, seed);
    std::copy(data.points.begin(), data.points.end(), out_points);
    return FB_OK;
  } catch (const fb::Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

fb_status fb_check(const fb_options* o, char* report, int* report_len) {
  t_error.clear();
  if (report == nullptr || report_len == nullptr)
    return invalid("null report buffer or length pointer");
  fb_options defaults;
  const fb_options& opt = o ? *o : defaults;
  try {
    std::vector<fb::checks::CheckResult> results =
        fb::checks::run_all(opt.check_dims, opt.check_n, opt.seed);
    std::string text;
    for (const fb::checks::CheckResult& r : results) {
      text += r.pass ? "PASS " : "FAIL ";
      text += r.name;
      text += ": ";
      text += r.detail;
      text += "\n";
    }
    int need = static_cast<int>(text.size());
    if (*report_len < need + 1) {
      *report_len = need + 1;
      t_error = "report buffer too small";
      return FB_ERR_BUFFER_TOO_SMALL;
    }
    std::memcpy(report, text.c_str(), text.size() + 1);
    *report_len = need;
    if (!fb::checks::all_pass(results)) {
      t_error = "one or more checks failed";
      return FB_ERR_CHECK_FAILED;
    }
    return FB_OK;
  } catch (const fb::Error& e) {
    return status_of(e);
  } catch (const std::exception& e) {
    return status_of(e);
  }
}

}  // extern "C"
