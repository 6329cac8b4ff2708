#ifndef EMS_H
#define EMS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmsStatus {
  EMS_STATUS_OK = 0,
  EMS_STATUS_NULL_POINTER = 1,
  EMS_STATUS_INVALID_UTF8 = 2,
  EMS_STATUS_PARSE = 3,
  EMS_STATUS_INVALID_ARGUMENT = 4,
  EMS_STATUS_INDEX_OUT_OF_RANGE = 5,
  EMS_STATUS_SEQUENCE_TOO_SHORT = 6,
  EMS_STATUS_UNKNOWN_NAME = 7,
  EMS_STATUS_NUMERICAL = 8,
  EMS_STATUS_BUFFER_TOO_SMALL = 9,
  EMS_STATUS_PANIC = 10,
} EmsStatus;

typedef enum EmsMode {
  EMS_MODE_FLOAT = 0,
  EMS_MODE_EXTENDED = 1,
  EMS_MODE_EXACT = 2,
} EmsMode;

typedef enum EmsOutcome {
  EMS_OUTCOME_ALL_PASS = 0,
  EMS_OUTCOME_ANY_FAIL = 1,
  EMS_OUTCOME_INCONCLUSIVE = 2,
} EmsOutcome;

typedef struct EmsDistribution EmsDistribution;

typedef struct EmsForm EmsForm;

typedef struct EmsSequence EmsSequence;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Owned by the library.
 */
const char *ems_last_error(void);

/**
 * Library version, static storage.
 */
const char *ems_version(void);

/**
 * # Safety
 * `s` must come from this library or be NULL.
 */
void ems_string_free(char *s);

/**
 * Sequence from `len` doubles μ_1..μ_len. Exact mode reads each double through its shortest decimal.
 *
 * # Safety
 * `values` must point to `len` doubles; `out` must be writable.
 */
enum EmsStatus ems_sequence_new(const double *values,
                                size_t len,
                                enum EmsMode mode,
                                struct EmsSequence **out);

/**
 * Sequence from JSON or CSV text, in the formats the command line accepts.
 *
 * # Safety
 * `input` must be a NUL-terminated string; `out` must be writable.
 */
enum EmsStatus ems_sequence_parse(const char *input, struct EmsSequence **out);

/**
 * # Safety
 * `seq` must come from this library or be NULL.
 */
void ems_sequence_free(struct EmsSequence *seq);

/**
 * # Safety
 * `seq` must be a live handle.
 */
size_t ems_sequence_len(const struct EmsSequence *seq);

/**
 * Expected-maxima conditions. `depth` 0 uses the mode default. Either output may be NULL.
 *
 * # Safety
 * `seq` must be a live handle; non-NULL outputs must be writable.
 */
enum EmsStatus ems_check_ems(const struct EmsSequence *seq,
                             size_t depth,
                             char **out_json,
                             enum EmsOutcome *out_outcome);

/**
 * Expected-ranges conditions. `depth` 0 uses the mode default. Either output may be NULL.
 *
 * # Safety
 * `seq` must be a live handle; non-NULL outputs must be writable.
 */
enum EmsStatus ems_check_ers(const struct EmsSequence *seq,
                             size_t depth,
                             char **out_json,
                             enum EmsOutcome *out_outcome);

/**
 * (−1)^{s+1} Δ^s μ_k as a double.
 *
 * # Safety
 * `seq` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_forward_difference(const struct EmsSequence *seq,
                                      size_t s,
                                      size_t k,
                                      double *out);

/**
 * β_{1,n} ≤ ... ≤ β_{n,n} as doubles into `out[0..n]`; `cap` is the buffer length.
 *
 * # Safety
 * `seq` must be a live handle; `out` must hold `cap` doubles.
 */
enum EmsStatus ems_beta_table(const struct EmsSequence *seq, size_t n, double *out, size_t cap);

/**
 * Catalog distribution. `params` is JSON, a bare number, "p/q", or NULL for defaults.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum EmsStatus ems_distribution_new(const char *id,
                                    const char *params,
                                    struct EmsDistribution **out);

/**
 * # Safety
 * `d` must come from this library or be NULL.
 */
void ems_distribution_free(struct EmsDistribution *d);

/**
 * Q(u) for 0 < u < 1.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_quantile(const struct EmsDistribution *d, double u, double *out);

/**
 * E max, E min or E range of k draws: `which` is 0, 1 or 2.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_expected(const struct EmsDistribution *d, uint32_t which, size_t k, double *out);

/**
 * The symmetric distribution with the same expected ranges.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_symmetrize(const struct EmsDistribution *d, struct EmsDistribution **out);

/**
 * Equal-expected-ranges check with default grid and tolerances, ranges compared up to `k_max`.
 *
 * # Safety
 * Handles must be live; non-NULL outputs must be writable.
 */
enum EmsStatus ems_compare_ranges(const struct EmsDistribution *a,
                                  const struct EmsDistribution *b,
                                  size_t k_max,
                                  char **out_json,
                                  enum EmsOutcome *out_outcome);

/**
 * Built-in integral form by id with parameters as for `ems_distribution_new`.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be writable.
 */
enum EmsStatus ems_form_new(const char *id, const char *params, struct EmsForm **out);

/**
 * Kernel h1(y) of a catalog distribution's integral form.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_form_from_distribution(const struct EmsDistribution *d, struct EmsForm **out);

/**
 * # Safety
 * `f` must come from this library or be NULL.
 */
void ems_form_free(struct EmsForm *f);

/**
 * g(x) for x ≥ 1.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_form_evaluate(const struct EmsForm *f, double x, double *out);

/**
 * h1(y).
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_form_h1(const struct EmsForm *f, double y, double *out);

/**
 * Symmetry criterion of the form on the default y grid.
 *
 * # Safety
 * `f` must be a live handle; non-NULL outputs must be writable.
 */
enum EmsStatus ems_form_symmetry(const struct EmsForm *f,
                                 char **out_json,
                                 enum EmsOutcome *out_outcome);

/**
 * Quantile rebuilt from a form with E X = mu1.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum EmsStatus ems_reconstruct(const struct EmsForm *f, double mu1, struct EmsDistribution **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMS_H */
