/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SFWKIT_H
#define SFWKIT_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SfwStatus {
    SFW_STATUS_OK = 0,
    SFW_STATUS_NULL_POINTER = 1,
    SFW_STATUS_INVALID_ARGUMENT = 2,
    SFW_STATUS_PARSE = 3,
    SFW_STATUS_IO = 4,
    SFW_STATUS_CAPACITY = 5,
    SFW_STATUS_INTERNAL = 6,
} SfwStatus;

typedef enum SfwLoss {
    SFW_LOSS_LOGISTIC = 0,
    SFW_LOSS_SQUARED = 1,
    SFW_LOSS_GEMAN_MCCLURE = 2,
} SfwLoss;

typedef enum SfwNorm {
    SFW_NORM_L1 = 0,
    SFW_NORM_L2 = 1,
    SFW_NORM_LINF = 2,
} SfwNorm;

typedef enum SfwSolver {
    SFW_SOLVER_SFW = 0,
    SFW_SOLVER_FW = 1,
    SFW_SOLVER_MOKHTARI = 2,
    SFW_SOLVER_LUFREUND = 3,
} SfwSolver;

// A constraint set. Opaque.
typedef struct SfwConstraint SfwConstraint;

// A data matrix together with its loss. Opaque.
typedef struct SfwProblem SfwProblem;

// The output of [`sfw_solve`]. Opaque.
typedef struct SfwTrace SfwTrace;

// Settings of one solver run. Obtain defaults from [`sfw_run_options_default`].
typedef struct SfwRunOptions {
    enum SfwSolver solver;
    // Samples per iteration; 0 selects 1% of the samples (at least 1).
    size_t batch_size;
    // Maximum number of per-sample derivative evaluations.
    uint64_t grad_budget;
    uint64_t seed;
    uint64_t trace_every;
    // Stop once the stochastic gap falls below this value; NaN disables.
    double gap_stop;
    // Evaluate the exact gap and table error at every trace row.
    bool exact_diagnostics;
} SfwRunOptions;

// One trace checkpoint.
typedef struct SfwTraceRow {
    uint64_t t;
    uint64_t grad_calls;
    double objective;
    double stochastic_gap;
    // NaN when not computed.
    double exact_gap;
    // NaN when not computed.
    double h_error;
    uint64_t wall_nanos;
} SfwTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The message of the last failed call on this thread, or an empty string.
// The pointer stays valid until the next failing call on the same thread.
const char *sfw_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sfw_version(void);

// Builds a problem from a row-major `n x d` matrix and `n` targets.
//
// # Safety
// `values` must hold `n * d` doubles, `targets` `n` doubles, and `out` must
// be writable.
enum SfwStatus sfw_problem_from_dense(size_t n,
                                      size_t d,
                                      const double *values,
                                      const double *targets,
                                      enum SfwLoss loss,
                                      struct SfwProblem **out);

// Builds a problem from CSR arrays: `offsets` has `n + 1` entries,
// `indices` and `values` have `offsets[n]` entries.
//
// # Safety
// All arrays must be valid for the lengths above and `out` writable.
enum SfwStatus sfw_problem_from_csr(size_t n,
                                    size_t d,
                                    const size_t *offsets,
                                    const size_t *indices,
                                    const double *values,
                                    const double *targets,
                                    enum SfwLoss loss,
                                    struct SfwProblem **out);

// Reads a libsvm-format file. `d` of 0 infers the dimension.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SfwStatus sfw_problem_load_libsvm(const char *path,
                                       size_t d,
                                       enum SfwLoss loss,
                                       struct SfwProblem **out);

// # Safety
// `problem` is NULL or a handle from a `sfw_problem_*` constructor, not yet freed.
void sfw_problem_free(struct SfwProblem *problem);

// # Safety
// `problem` must be a live handle; `n` and `d` writable.
enum SfwStatus sfw_problem_dims(const struct SfwProblem *problem, size_t *n, size_t *d);

// Objective value at `w` (length `d`).
//
// # Safety
// `problem` must be a live handle, `w` valid for `len` reads, `out` writable.
enum SfwStatus sfw_problem_objective(const struct SfwProblem *problem,
                                     const double *w,
                                     size_t len,
                                     double *out);

// Parses `l1:R`, `simplex:R` or `linf:R`.
//
// # Safety
// `spec` must be NUL-terminated and `out` writable.
enum SfwStatus sfw_constraint_parse(const char *spec, struct SfwConstraint **out);

// # Safety
// `set` is NULL or a handle from [`sfw_constraint_parse`], not yet freed.
void sfw_constraint_free(struct SfwConstraint *set);

// Column-sum to max-entry ratio of the data matrix.
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum SfwStatus sfw_kappa(const struct SfwProblem *problem, double *out);

// `max_{u, v in C} ||X(u - v)||_p`.
//
// # Safety
// Handles must be live and `out` writable.
enum SfwStatus sfw_diameter(const struct SfwProblem *problem,
                            const struct SfwConstraint *set,
                            enum SfwNorm norm,
                            double *out);

// Fills `out` with defaults: SFW, automatic batch, 50 passes, seed 0,
// a row per iteration, no gap threshold, no exact diagnostics.
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum SfwStatus sfw_run_options_default(const struct SfwProblem *problem, struct SfwRunOptions *out);

// Runs one solver; the trace is returned through `out` and must be
// released with [`sfw_trace_free`].
//
// # Safety
// Handles must be live, `options` readable and `out` writable.
enum SfwStatus sfw_solve(const struct SfwProblem *problem,
                         const struct SfwConstraint *set,
                         const struct SfwRunOptions *options,
                         struct SfwTrace **out);

// Number of rows in the trace, or 0 for NULL.
//
// # Safety
// `trace` is NULL or a live handle.
size_t sfw_trace_len(const struct SfwTrace *trace);

// Copies row `index` into `out`.
//
// # Safety
// `trace` must be a live handle and `out` writable.
enum SfwStatus sfw_trace_row(const struct SfwTrace *trace, size_t index, struct SfwTraceRow *out);

// Copies the final iterate into `buf`. Fails with `Capacity` when `len` is
// smaller than the dimension; `written` (if not NULL) receives the dimension
// either way.
//
// # Safety
// `trace` must be a live handle, `buf` valid for `len` writes, `written`
// NULL or writable.
enum SfwStatus sfw_trace_final_w(const struct SfwTrace *trace,
                                 double *buf,
                                 size_t len,
                                 size_t *written);

// Whether the run ended on the gap threshold rather than the budget.
//
// # Safety
// `trace` is NULL or a live handle.
bool sfw_trace_stopped_by_gap(const struct SfwTrace *trace);

// # Safety
// `trace` is NULL or a handle from [`sfw_solve`], not yet freed.
void sfw_trace_free(struct SfwTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFWKIT_H */
