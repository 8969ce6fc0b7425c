#ifndef LOGCONCAVE_H
#define LOGCONCAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum lc_status {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  LC_STATUS_DATA_ERROR = 3,
  LC_STATUS_NUMERIC_ERROR = 4,
  LC_STATUS_PANIC = 5,
} lc_status;

// A posterior chain together with its evaluation grid.
typedef struct lc_chain lc_chain;

// A normalised log-concave density with a piecewise linear log.
typedef struct lc_density lc_density;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length in bytes of the last error message on this thread, without the
// terminating NUL.
size_t lc_last_error_length(void);

// Copies the last error message into `buf` as a NUL-terminated string,
// truncating to `len - 1` bytes. Returns the number of bytes copied
// without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t lc_last_error_message(char *buf, size_t len);

// Builds the density proportional to `exp(w)`, where `w` interpolates
// `(x[i], y[i])` linearly. `w` must be concave and `x` strictly increasing.
//
// # Safety
// `x` and `y` must point to `len` doubles; `out` must be writable.
enum lc_status lc_density_from_plf(const double *x,
                                   const double *y,
                                   size_t len,
                                   struct lc_density **out);

// Log-concave maximum likelihood estimate from `len` observations.
//
// # Safety
// `data` must point to `len` doubles; `out` must be writable.
enum lc_status lc_mle(const double *data, size_t len, struct lc_density **out);

// # Safety
// `density` must come from this library and not have been freed.
void lc_density_free(struct lc_density *density);

// Support `[lower, upper]` of the density.
//
// # Safety
// `density` must be a live handle; `lower` and `upper` must be writable.
enum lc_status lc_density_support(const struct lc_density *density, double *lower, double *upper);

// Writes the density at each of `xs` into `out`.
//
// # Safety
// `density` must be a live handle; `xs` and `out` must hold `len` doubles.
enum lc_status lc_density_eval(const struct lc_density *density,
                               const double *xs,
                               size_t len,
                               double *out);

// # Safety
// `density` must be a live handle; `out` must be writable.
enum lc_status lc_density_cdf(const struct lc_density *density, double x, double *out);

// # Safety
// `density` must be a live handle; `out` must be writable.
enum lc_status lc_density_quantile(const struct lc_density *density, double u, double *out);

// Hellinger distance `(int (sqrt f - sqrt g)^2)^(1/2)`.
//
// # Safety
// `f` and `g` must be live handles; `out` must be writable.
enum lc_status lc_hellinger(const struct lc_density *f, const struct lc_density *g, double *out);

// Runs a posterior chain. `config_json` holds a chain config as JSON; null
// selects the defaults.
//
// # Safety
// `config_json` must be null or a NUL-terminated string; `data` must hold
// `len` doubles; `out` must be writable.
enum lc_status lc_chain_run(const char *config_json,
                            const double *data,
                            size_t len,
                            uint64_t seed,
                            struct lc_chain **out);

// # Safety
// `chain` must come from `lc_chain_run` and not have been freed.
void lc_chain_free(struct lc_chain *chain);

// Number of kept iterations and evaluation grid points.
//
// # Safety
// `chain` must be a live handle; the out pointers must be writable.
enum lc_status lc_chain_dims(const struct lc_chain *chain, size_t *kept, size_t *grid);

// Pointwise posterior mean and equal-tailed credible band at `level` on
// the evaluation grid. Each output array must hold `len` doubles, where
// `len` is the grid size.
//
// # Safety
// `chain` must be a live handle; the output arrays must hold `len` doubles.
enum lc_status lc_chain_band(const struct lc_chain *chain,
                             double level,
                             double *grid,
                             double *mean,
                             double *lower,
                             double *upper,
                             size_t len);

// Mode of each kept density. `len` must equal the kept iteration count.
//
// # Safety
// `chain` must be a live handle; `out` must hold `len` doubles.
enum lc_status lc_chain_modes(const struct lc_chain *chain, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOGCONCAVE_H */
