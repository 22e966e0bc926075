#ifndef FISHER_BINGHAM_H
#define FISHER_BINGHAM_H

/* C interface to the Fisher-Bingham normalizing-constant library.
 *
 * The model on the d-sphere of radius r has density proportional to
 *   exp( sum_{1<=i<=j<=d+1} x_ij t_i t_j + sum_i y_i t_i ),
 * each off-diagonal coefficient x_ij counted once. Coefficient vectors use
 * the upper-triangle layout (1,1), (1,2), ..., (1,d+1), (2,2), ..., The
 * library evaluates the normalizing constant with its first and second
 * derivatives, propagates statistical error bounds, fits maximum-likelihood
 * parameters, and draws exact samples.
 *
 * All handles are opaque and immutable after creation; distinct handles may
 * be used from distinct threads concurrently. Every function returns a
 * status code; on failure fb_last_error() returns a thread-local message.
 */

#include <stddef.h>

#if defined(_WIN32)
#define FB_API __declspec(dllexport)
#else
#define FB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fb_status {
  FB_OK = 0,
  FB_ERR_INVALID_ARGUMENT = 1,
  FB_ERR_EVALUATION = 2,
  FB_ERR_MLE_FAILED = 3,
  FB_ERR_CHECK_FAILED = 4,
  FB_ERR_BUFFER_TOO_SMALL = 5
} fb_status;

/* Dimension bounds baked into the result structs. */
#define FB_MAX_DIM 10
#define FB_MAX_UT ((FB_MAX_DIM + 1) * (FB_MAX_DIM + 2) / 2)
#define FB_MAX_Y (FB_MAX_DIM + 1)

typedef struct fb_params fb_params;
typedef struct fb_options fb_options;

FB_API const char* fb_version(void);

/* Thread-local message describing the most recent failure on this thread;
 * empty string when the last call succeeded. Never NULL. */
FB_API const char* fb_last_error(void);

/* Number of stored x coefficients for dimension d. */
FB_API int fb_ut_size(int d);

/* Parameters from the upper-triangle coefficient list (length fb_ut_size(d))
 * and y (length d+1). Sphere radius r > 0. NULL on failure (see
 * fb_last_error). */
FB_API fb_params* fb_params_create_full(int d, const double* x_upper,
                                        const double* y, double r);

/* Parameters from a full (d+1)x(d+1) row-major quadratic-form matrix m,
 * interpreted as t'mt + y't; m must be symmetric (entries are read as
 * given: stored x_ii = m_ii, x_ij = m_ij + m_ji for i < j). */
FB_API fb_params* fb_params_create_matrix(int d, const double* m,
                                          const double* y, double r);

FB_API void fb_params_destroy(fb_params* p);

/* Options bundle with defaults; keys for fb_options_set:
 *   tol                  series truncation target          (1e-10)
 *   eps                  ensemble perturbation size        (0)
 *   replicas             ensemble replicas                 (200)
 *   confidence           two-sided CI level                (0.95)
 *   ode_abs_tol_coeff    ODE absolute tolerance coefficient(1e-6)
 *   ode_rel_tol          ODE relative tolerance            (1e-8)
 *   ode_initial_step     ODE initial step (<=0 auto)       (0)
 *   ode_max_steps        ODE step attempt budget           (200000)
 *   mle_starts           optimizer starts                  (8)
 *   mle_grad_tol         gradient tolerance per sample     (1e-5)
 *   mle_max_iters        ascent iteration cap              (2000)
 *   mle_max_step_norm    parameter step cap                (0.1)
 *   mle_nm_diameter_tol  warm-start simplex diameter stop  (1e-3)
 *   mle_eval_tol         series tolerance inside MLE       (1e-10)
 *   check_n              Monte-Carlo samples per check     (1000000)
 * Unknown keys and out-of-domain values return
 * FB_ERR_INVALID_ARGUMENT. */
FB_API fb_options* fb_options_create(void);
FB_API void fb_options_destroy(fb_options* o);
FB_API fb_status fb_options_set(fb_options* o, const char* key, double value);
FB_API fb_status fb_options_set_seed(fb_options* o,
                                     unsigned long long seed);
/* Dimensions exercised by fb_check (default {1,2,3}). */
FB_API fb_status fb_options_set_check_dims(fb_options* o, const int* dims,
                                           int ndims);

typedef struct fb_normconst_result {
  double value;      /* deterministic estimate of Z */
  double sd;         /* ensemble standard deviation (0 when eps = 0) */
  double ci_low;     /* two-sided interval at the configured confidence */
  double ci_high;
  double r1;         /* ODE endpoint (1 on the pure-series route) */
  int series_order;  /* truncation order of the series stage */
  char route[16];    /* "series" or "hgm" */
} fb_normconst_result;

/* Normalizing constant with statistical error propagation. options may be
 * NULL for defaults. */
FB_API fb_status fb_normconst(const fb_params* p, const fb_options* o,
                              fb_normconst_result* out);

/* Z and its derivatives at the parameters: out_state receives 2d+2 entries
 * (Z, dZ/dy_1..dZ/dy_{d+1}, d^2Z/dy_1^2..d^2Z/dy_d^2); the last second
 * derivative follows from sum_i d_i^2 Z = r^2 Z. state_len is the capacity
 * of out_state. */
FB_API fb_status fb_state_eval(const fb_params* p, const fb_options* o,
                               double* out_state, int state_len);

typedef struct fb_mle_result {
  int d;
  double x[FB_MAX_UT]; /* upper-triangle layout, x_{d+1,d+1} fixed to 0 */
  double y[FB_MAX_Y];
  double loglik;
  double grad_norm;
  int iters;
  int restarts;
  char status[16]; /* "Converged", "Aborted", "MaxIters" */
} fb_mle_result;

/* Maximum-likelihood fit of points on the unit sphere (row-major,
 * n_samples x (d+1)). Rows further than 1e-8 from unit norm are rejected
 * with FB_ERR_INVALID_ARGUMENT naming the first offending row (1-based).
 * FB_ERR_MLE_FAILED when no start converges. */
FB_API fb_status fb_mle(int d, int n_samples, const double* points,
                        const fb_options* o, fb_mle_result* out);

/* Exact rejection sampler on the unit sphere (params must have r = 1);
 * writes n x (d+1) doubles row-major (out_len is the buffer capacity).
 * Deterministic for a fixed seed. */
FB_API fb_status fb_sample(const fb_params* p, int n,
                           unsigned long long seed, double* out_points,
                           int out_len);

/* Runs the built-in validation suite (golden d=1 matrices, integrability,
 * Monte-Carlo identity residuals at the configured dims). Writes one line
 * per check ("PASS name: detail" / "FAIL ...") into report; report_len is
 * the capacity on input and the required/used size (excluding the
 * terminator) on output. Returns FB_OK when every check passes,
 * FB_ERR_CHECK_FAILED when any fails, FB_ERR_BUFFER_TOO_SMALL if the text
 * does not fit (report_len then holds the required capacity). */
FB_API fb_status fb_check(const fb_options* o, char* report,
                          int* report_len);

#ifdef __cplusplus
}
#endif

#endif /* FISHER_BINGHAM_H */
