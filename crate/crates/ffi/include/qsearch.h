#ifndef QSEARCH_H
#define QSEARCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QsSolver {
  QS_SOLVER_WATERFILL = 0,
  QS_SOLVER_CLOSED_T1 = 1,
} QsSolver;

/**
 * Result codes. Zero is success.
 */
typedef enum QsStatus {
  QS_STATUS_OK = 0,
  QS_STATUS_INVALID_INPUT = 1,
  QS_STATUS_NUMERICAL_FAILURE = 2,
  QS_STATUS_RESOURCE_LIMIT = 3,
  QS_STATUS_NULL_POINTER = 4,
  QS_STATUS_BUFFER_TOO_SMALL = 5,
  QS_STATUS_PANIC = 6,
} QsStatus;

typedef struct QsCircuit QsCircuit;

typedef struct QsPlan QsPlan;

typedef struct QsPrior QsPrior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread. Valid until the next
 * failing call on the same thread; never NULL.
 */
const char *qs_last_error(void);

/**
 * Normalizes `len` non-negative weights into a prior.
 *
 * # Safety
 * `weights` must point to `len` readable doubles; `out` must be writable.
 */
enum QsStatus qs_prior_new(const double *weights, size_t len, struct QsPrior **out);

/**
 * Seeded random prior of `n` items.
 *
 * # Safety
 * `out` must be writable.
 */
enum QsStatus qs_prior_sample(size_t n, uint64_t seed, struct QsPrior **out);

/**
 * Item count, or 0 for a NULL handle.
 *
 * # Safety
 * `prior` must be NULL or a live handle.
 */
size_t qs_prior_len(const struct QsPrior *prior);

/**
 * Copies the normalized weights into `buf` (at least `qs_prior_len`
 * entries).
 *
 * # Safety
 * `prior` must be a live handle and `buf` must hold `len` doubles.
 */
enum QsStatus qs_prior_weights(const struct QsPrior *prior, double *buf, size_t len);

/**
 * # Safety
 * `prior` must be NULL or a handle not yet freed.
 */
void qs_prior_free(struct QsPrior *prior);

/**
 * `sin^2((2t+1) asin sqrt(q))`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QsStatus qs_success_prob_single(double q, uint32_t t, double *out);

/**
 * Saturating squared amplitude `sin^2(pi / (2(2t+1)))`.
 */
double qs_cap(uint32_t t);

/**
 * Optimal plan for `t` queries.
 *
 * # Safety
 * `prior` must be a live handle; `out` must be writable.
 */
enum QsStatus qs_optimize(const struct QsPrior *prior,
                          uint32_t t,
                          enum QsSolver solver,
                          struct QsPlan **out);

/**
 * Plan from raw squared amplitudes.
 *
 * # Safety
 * `q` must point to `len` doubles; `out` must be writable.
 */
enum QsStatus qs_plan_new(const double *q, size_t len, uint32_t t, struct QsPlan **out);

/**
 * # Safety
 * `plan` must be NULL or a live handle.
 */
size_t qs_plan_len(const struct QsPlan *plan);

/**
 * # Safety
 * `plan` must be NULL or a live handle.
 */
uint32_t qs_plan_queries(const struct QsPlan *plan);

/**
 * KKT residual of an optimized plan; NaN for raw plans or NULL.
 *
 * # Safety
 * `plan` must be NULL or a live handle.
 */
double qs_plan_kkt_residual(const struct QsPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle and `buf` must hold `len` doubles.
 */
enum QsStatus qs_plan_amplitudes(const struct QsPlan *plan, double *buf, size_t len);

/**
 * # Safety
 * `plan` must be NULL or a handle not yet freed.
 */
void qs_plan_free(struct QsPlan *plan);

/**
 * Expected success probability of `plan` under `prior`.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum QsStatus qs_esp(const struct QsPrior *prior, const struct QsPlan *plan, double *out);

/**
 * Best uniform Grover search over the `m` most likely items.
 *
 * # Safety
 * `prior` must be live; `value` and `m` must be writable.
 */
enum QsStatus qs_ranking_baseline(const struct QsPrior *prior,
                                  uint32_t t,
                                  double *value,
                                  size_t *m);

/**
 * Simulated probability of finding item `x` (1-based).
 *
 * # Safety
 * `plan` must be live; `out` must be writable.
 */
enum QsStatus qs_run_iterations(const struct QsPlan *plan, size_t x, double *out);

/**
 * Rotation angle of the optimal single-query half-half circuit.
 *
 * # Safety
 * `out` must be writable.
 */
enum QsStatus qs_theta_for_sigma(double sigma, double *out);

/**
 * Half-half circuit marking `solution` (3 characters, `'0'`/`'1'`,
 * qubit 2 first).
 *
 * # Safety
 * `solution` must be a NUL-terminated string; `out` must be writable.
 */
enum QsStatus qs_halfhalf_circuit(double sigma, const char *solution, struct QsCircuit **out);

/**
 * Number of basis outcomes (`2^qubits`), or 0 for NULL.
 *
 * # Safety
 * `circuit` must be NULL or a live handle.
 */
size_t qs_circuit_outcomes(const struct QsCircuit *circuit);

/**
 * Exact outcome distribution (little-endian basis index).
 *
 * # Safety
 * `circuit` must be live and `buf` must hold `len` doubles.
 */
enum QsStatus qs_circuit_probabilities(const struct QsCircuit *circuit, double *buf, size_t len);

/**
 * OpenQASM 2.0 text, or NULL on failure. Release with `qs_string_free`.
 *
 * # Safety
 * `circuit` must be a live handle.
 */
char *qs_circuit_qasm(const struct QsCircuit *circuit);

/**
 * # Safety
 * `circuit` must be NULL or a handle not yet freed.
 */
void qs_circuit_free(struct QsCircuit *circuit);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void qs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSEARCH_H */
