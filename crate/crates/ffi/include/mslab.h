#ifndef MSLAB_H
#define MSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every call. Values 2 and 3 match the CLI exit statuses.
 */
typedef enum MslabStatus {
  MSLAB_STATUS_OK = 0,
  MSLAB_STATUS_NULL_POINTER = 1,
  MSLAB_STATUS_INVALID_ARGUMENT = 2,
  MSLAB_STATUS_NUMERICAL = 3,
  MSLAB_STATUS_UTF8 = 4,
  MSLAB_STATUS_PANIC = 5,
} MslabStatus;

typedef struct MslabFormula MslabFormula;

typedef struct MslabSpec MslabSpec;

typedef struct MslabTuple MslabTuple;

/*
 Volume estimate for one matrix size.
 */
typedef struct MslabVolume {
  size_t samples;
  size_t hits;
  /*
   `log vol`, `-inf` when nothing hit.
   */
  double log_vol;
  double ci;
  /*
   Normalized entropy `h_n`.
   */
  double h;
  double h_ci;
} MslabVolume;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static nul-terminated string.
 */
const char *mslab_version(void);

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next call on the same thread.
 */
const char *mslab_last_error(void);

/*
 Builds a `d`-tuple of `n × n` matrices from `d·n²` real and imaginary
 parts; `im` may be null for real matrices.

 # Safety
 `re` (and `im` when non-null) must point to `d·n²` readable doubles and
 `out` to a writable handle slot.
 */
enum MslabStatus mslab_tuple_new(size_t n,
                                 size_t d,
                                 const double *re,
                                 const double *im,
                                 struct MslabTuple **out);

/*
 Draws a tuple of coordinate Gaussians with `E‖X_j‖₂² = 1`
 (`self_adjoint` non-zero for GUE-type matrices).

 # Safety
 `out` must point to a writable handle slot.
 */
enum MslabStatus mslab_tuple_sample(size_t n,
                                    size_t d,
                                    int32_t self_adjoint,
                                    uint64_t seed,
                                    uint64_t stream,
                                    struct MslabTuple **out);

/*
 Writes `n` and `d` of a tuple.

 # Safety
 `t` must be a live tuple handle; `n` and `d` writable.
 */
enum MslabStatus mslab_tuple_shape(const struct MslabTuple *t, size_t *n, size_t *d);

/*
 # Safety
 `t` must be null or a handle from this library not yet freed.
 */
void mslab_tuple_free(struct MslabTuple *t);

/*
 Parses a trace formula.

 # Safety
 `src` must be a nul-terminated string and `out` a writable handle slot.
 */
enum MslabStatus mslab_formula_parse(const char *src, struct MslabFormula **out);

/*
 Evaluates a formula on a tuple with the default optimizer settings for
 quantifiers.

 # Safety
 Handles must be live; `value` writable.
 */
enum MslabStatus mslab_formula_eval(const struct MslabFormula *f,
                                    const struct MslabTuple *t,
                                    double *value);

/*
 # Safety
 `f` must be null or a handle from this library not yet freed.
 */
void mslab_formula_free(struct MslabFormula *f);

/*
 Parses and validates a neighborhood spec given as JSON.

 # Safety
 `json` must be a nul-terminated string and `out` a writable handle slot.
 */
enum MslabStatus mslab_spec_from_json(const char *json, struct MslabSpec **out);

/*
 Importance-sampling volume estimate at size `n`.

 # Safety
 `spec` must be live; `out` writable.
 */
enum MslabStatus mslab_estimate_volume(const struct MslabSpec *spec,
                                       size_t n,
                                       size_t samples,
                                       uint64_t seed,
                                       struct MslabVolume *out);

/*
 # Safety
 `s` must be null or a handle from this library not yet freed.
 */
void mslab_spec_free(struct MslabSpec *s);

/*
 Free cumulants `κ_0 … κ_{len−1}` of a self-adjoint law from its moments
 `m_0 = 1, m_1, …`.

 # Safety
 `moments` and `out` must each hold `len` doubles.
 */
enum MslabStatus mslab_free_cumulants(const double *moments, size_t len, double *out);

/*
 Moments of `μ ⊞ ν` from the moments of `μ` and `ν`, all of length `len`.

 # Safety
 `mu`, `nu` and `out` must each hold `len` doubles.
 */
enum MslabStatus mslab_free_convolve(const double *mu, const double *nu, size_t len, double *out);

/*
 `inf_U ‖U X U^* − Y‖₂` with `starts` optimizer starts.

 # Safety
 Handles must be live; `value` writable.
 */
enum MslabStatus mslab_psi_distance(const struct MslabTuple *x,
                                    const struct MslabTuple *y,
                                    size_t starts,
                                    uint64_t seed,
                                    double *value);

/*
 Runs one CLI experiment (`kind` as on the command line) and writes its
 JSON and CSV reports; `out_path` may be null to use the config's
 `output_path`. Returns `Ok`, `InvalidArgument` or `Numerical` like the
 CLI's exit statuses 0, 2 and 3.

 # Safety
 String arguments must be nul-terminated (or null where allowed).
 */
enum MslabStatus mslab_run_experiment(const char *kind,
                                      const char *config_path,
                                      uint64_t seed,
                                      const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSLAB_H */
