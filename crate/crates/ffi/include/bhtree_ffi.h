#ifndef BHTREE_FFI_H
#define BHTREE_FFI_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BhStatus {
  BH_STATUS_OK = 0,
  BH_STATUS_NULL_POINTER = 1,
  BH_STATUS_INVALID_ARGUMENT = 2,
  BH_STATUS_INVALID_MODEL = 3,
  BH_STATUS_UNSUPPORTED = 4,
  BH_STATUS_PRECONDITION = 5,
  BH_STATUS_TRUNCATION = 6,
  BH_STATUS_EMPTY_SAMPLE = 7,
  BH_STATUS_STATE_SPACE = 8,
  BH_STATUS_IO = 9,
  BH_STATUS_BUFFER_TOO_SMALL = 10,
  BH_STATUS_PANIC = 11,
} BhStatus;

// Opaque model handle.
typedef struct BhModel BhModel;

// Opaque handle on the accepted replicates of a conditioned run.
typedef struct BhSample BhSample;

typedef struct BhConstants {
  double mu;
  double sigma2;
  double b;
  bool is_lattice;
} BhConstants;

typedef struct BhSampleCounts {
  uint64_t n_total;
  uint64_t n_accepted;
  uint64_t n_capped;
} BhSampleCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library on the same thread.
const char *bh_last_error_message(void);

// Builds one of `bin-lat`, `geo-exp`, `geo-det`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum BhStatus bh_model_builtin(const char *name, struct BhModel **out);

// Builds a model from the JSON model format.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum BhStatus bh_model_from_json(const char *json, struct BhModel **out);

// # Safety
// `model` must come from a `bh_model_*` constructor, or be NULL.
void bh_model_free(struct BhModel *model);

// # Safety
// Pointers must be valid.
enum BhStatus bh_model_constants(const struct BhModel *model, struct BhConstants *out);

// `P(Z(t) > 0)` for a lattice model.
//
// # Safety
// Pointers must be valid.
enum BhStatus bh_survival_prob(const struct BhModel *model, uintptr_t t, double *out);

// `P(Z(t) = k)` for a lattice model.
//
// # Safety
// Pointers must be valid.
enum BhStatus bh_point_prob(const struct BhModel *model, uintptr_t t, uintptr_t k, double *out);

// Coefficients `P(Z(t) = k)`, `k = 0..=order`. Pass `order = 0` for the
// default truncation.
//
// # Safety
// `buf` must hold `len` doubles; other pointers must be valid.
enum BhStatus bh_pgf_coefficients(const struct BhModel *model,
                                  uintptr_t t,
                                  uintptr_t order,
                                  double *buf,
                                  uintptr_t len,
                                  uintptr_t *written);

// Small-population limit of `P(Z(t - y phi(t), t) = j)`.
//
// # Safety
// `out` must be valid.
enum BhStatus bh_theorem1_limit(uintptr_t j, double y, double *out);

// # Safety
// `out` must be valid.
enum BhStatus bh_corollary1_mrca(double y, double *out);

// Linear-event limit of `P(Z(xt, t) = j)`.
//
// # Safety
// `out` must be valid.
enum BhStatus bh_theorem2_limit(uintptr_t j, double x, double a, double *out);

// # Safety
// `out` must be valid.
enum BhStatus bh_corollary2_mrca(double x, double a, double *out);

// Runs `replicates` seeded trees and keeps those in `event`
// (`survival`, `small:pow:0.6`, `linear:1`, ...). Reduced counts are
// recorded at each of the `n_s` times in `s_grid`; `cap = 0` selects the
// default node cap.
//
// # Safety
// `event` must be a NUL-terminated string, `s_grid` must hold `n_s`
// doubles (or be NULL when `n_s = 0`) and `out` must be valid.
enum BhStatus bh_sample_run(const struct BhModel *model,
                            double t,
                            const char *event,
                            const double *s_grid,
                            uintptr_t n_s,
                            uint64_t replicates,
                            uint64_t seed,
                            uintptr_t cap,
                            struct BhSample **out);

// # Safety
// `sample` must come from `bh_sample_run`, or be NULL.
void bh_sample_free(struct BhSample *sample);

// # Safety
// Pointers must be valid.
enum BhStatus bh_sample_counts(const struct BhSample *sample, struct BhSampleCounts *out);

// `Z(t)` of each accepted replicate, in replicate order.
//
// # Safety
// `buf` must hold `len` doubles; other pointers must be valid.
enum BhStatus bh_sample_population(const struct BhSample *sample,
                                   double *buf,
                                   uintptr_t len,
                                   uintptr_t *written);

// `Z(s, t)` at `s_grid[index]` for each accepted replicate.
//
// # Safety
// `buf` must hold `len` doubles; other pointers must be valid.
enum BhStatus bh_sample_reduced(const struct BhSample *sample,
                                uintptr_t index,
                                double *buf,
                                uintptr_t len,
                                uintptr_t *written);

// MRCA depth `d(t)` for each accepted replicate; NaN where undefined.
//
// # Safety
// `buf` must hold `len` doubles; other pointers must be valid.
enum BhStatus bh_sample_mrca_depth(const struct BhSample *sample,
                                   double *buf,
                                   uintptr_t len,
                                   uintptr_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BHTREE_FFI_H */
