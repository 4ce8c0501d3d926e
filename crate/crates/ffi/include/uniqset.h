#ifndef UNIQSET_H
#define UNIQSET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum UqStatus {
  UQ_STATUS_OK = 0,
  UQ_STATUS_NULL_POINTER = 1,
  UQ_STATUS_INVALID_ARGUMENT = 2,
  UQ_STATUS_DEGENERATE_SET = 3,
  UQ_STATUS_NUMERICAL = 4,
  UQ_STATUS_PRECONDITION = 5,
  UQ_STATUS_SEARCH_EXHAUSTED = 6,
  UQ_STATUS_IO = 7,
  UQ_STATUS_PANIC = 99,
} UqStatus;

/**
 * Boundary data of one outer function `F = 1 − exp(χ + iχ̃)`.
 */
typedef struct UqOuter UqOuter;

/**
 * A compact set `E` on the circle.
 */
typedef struct UqSet UqSet;

/**
 * Library version as a static NUL-terminated string.
 */
const char *uq_version(void);

/**
 * Message of the last failure on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *uq_last_error(void);

/**
 * Builds `E` from `len` generations `(ns[i], deltas[i])`.
 *
 * # Safety
 * `ns` and `deltas` must point to `len` readable elements; `out` must be writable.
 */
enum UqStatus uq_set_new(const uint64_t *ns, const double *deltas, size_t len, struct UqSet **out);

/**
 * Parses a set from the `set.json` format written by the CLI.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum UqStatus uq_set_from_json(const char *json, struct UqSet **out);

/**
 * Assembles the MAIN-rule set `δ_j = c/(j log^a j)` with `c` chosen from the budget.
 *
 * # Safety
 * `out` must be writable.
 */
enum UqStatus uq_set_build_main(double a, double budget, size_t generations, struct UqSet **out);

/**
 * Releases a set; NULL is ignored.
 *
 * # Safety
 * `set` must come from a `uq_set_*` constructor and not be used afterwards.
 */
void uq_set_free(struct UqSet *set);

/**
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum UqStatus uq_set_generation_count(const struct UqSet *set, size_t *out);

/**
 * Lebesgue measure of `E`.
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum UqStatus uq_set_measure(const struct UqSet *set, double *out);

/**
 * Exact entropy of the complement and its generation-wise bound.
 *
 * # Safety
 * `set` must be a live handle; `exact` and `bound` must be writable.
 */
enum UqStatus uq_set_entropy(const struct UqSet *set, double *exact, double *bound);

/**
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum UqStatus uq_set_contains(const struct UqSet *set, double t, bool *out);

/**
 * Serializes a set; release the string with `uq_string_free`.
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum UqStatus uq_set_to_json(const struct UqSet *set, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards; NULL is ignored.
 */
void uq_string_free(char *s);

/**
 * Two-sided bounds on the `A_p` capacity of `E`, `p > 2`.
 *
 * # Safety
 * `set` must be a live handle; `lower` and `upper` must be writable.
 */
enum UqStatus uq_capacity(const struct UqSet *set, double p, double *lower, double *upper);

/**
 * Outer function for the arc `I(δ)` and level `ε` on the default grid.
 *
 * # Safety
 * `out` must be writable.
 */
enum UqStatus uq_outer_new(double delta, double eps, struct UqOuter **out);

/**
 * # Safety
 * `outer` must come from `uq_outer_new` and not be used afterwards; NULL is ignored.
 */
void uq_outer_free(struct UqOuter *outer);

/**
 * `F̂(n)`; zero for `n < 0`.
 *
 * # Safety
 * `outer` must be a live handle; `re` and `im` must be writable.
 */
enum UqStatus uq_outer_coeff(const struct UqOuter *outer, int64_t n, double *re, double *im);

/**
 * Certified interval for `‖F‖_{A_1}`.
 *
 * # Safety
 * `outer` must be a live handle; `lower` and `upper` must be writable.
 */
enum UqStatus uq_outer_a1(const struct UqOuter *outer, double *lower, double *upper);

/**
 * `|F(0)|` and `sup |F − 1|` off the widened arc.
 *
 * # Safety
 * `outer` must be a live handle; `f0` and `offarc_sup` must be writable.
 */
enum UqStatus uq_outer_properties(const struct UqOuter *outer, double *f0, double *offarc_sup);

/**
 * Runs a CLI pipeline (`build`, `blocks`, `separate`, `density`, `capacity`,
 * `outer`, `transfer` or `asymmetry-demo`) into `out_dir`.
 *
 * `config_json` may be NULL for the defaults. `passed` receives whether
 * every certificate of the run passed.
 *
 * # Safety
 * String arguments must be NUL-terminated; `passed` must be writable.
 */
enum UqStatus uq_run(const char *command,
                     const char *config_json,
                     const char *out_dir,
                     bool *passed);

#endif  /* UNIQSET_H */
