#ifndef PHOTONSUB_H
#define PHOTONSUB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_NUMERICAL = 3,
  PS_STATUS_PANIC = 4,
} PsStatus;

typedef enum PsTargetKind {
  PS_TARGET_KIND_CAT_EVEN = 0,
  PS_TARGET_KIND_CAT_ODD = 1,
  PS_TARGET_KIND_PLUS = 2,
  PS_TARGET_KIND_GHZ = 3,
  PS_TARGET_KIND_CCCS = 4,
} PsTargetKind;

/**
 * Pure zero-mean Gaussian state.
 */
typedef struct PsState PsState;

/**
 * Binary-phase coherent-superposition target.
 */
typedef struct PsTarget PsTarget;

/**
 * Result of [`ps_fidelity`]. Optional values carry a `has_*` flag; the value is 0 when absent.
 */
typedef struct PsFidelityReport {
  bool has_fidelity;
  double fidelity;
  bool has_ratio;
  double ratio;
  double probability;
  double bound_general;
  bool has_bound_vacuum;
  double bound_vacuum;
  double phase_factor;
} PsFidelityReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread into `buf` (NUL-terminated, truncated to `len`).
 * Returns the full message length excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ps_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Squeezed state with Fock form `exp(½ Σ tanh(Gr)_ij a†_i a†_j)|0⟩`; `G` is symmetric `n×n`, row-major.
 *
 * # Safety
 * `g` must point to `n*n` doubles and `out_state` must be writable.
 */
enum PsStatus ps_state_from_hamiltonian(const double *g,
                                        size_t n,
                                        double r,
                                        struct PsState **out_state);

/**
 * State from a `2n×2n` row-major covariance matrix in `(q_1..q_n, p_1..p_n)` ordering.
 *
 * # Safety
 * `v` must point to `4*n*n` doubles and `out_state` must be writable.
 */
enum PsStatus ps_state_from_covariance(const double *v, size_t n_modes, struct PsState **out_state);

/**
 * # Safety
 * `state` must be null or a handle from this library that has not been freed.
 */
void ps_state_free(struct PsState *state);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t ps_state_n_modes(const struct PsState *state);

/**
 * Builds a target of `kind` (a [`PsTargetKind`] value) with amplitude `γ = (q + ip)/√2`.
 * `n_modes` is ignored for single-mode kinds.
 * `edges` holds `n_edges` pairs of mode indices and is only read for cluster states.
 *
 * # Safety
 * `edges` must point to `2*n_edges` values and `out_target` must be writable.
 */
enum PsStatus ps_target_new(uint32_t kind,
                            size_t n_modes,
                            double gamma_q,
                            double gamma_p,
                            const size_t *edges,
                            size_t n_edges,
                            struct PsTarget **out_target);

/**
 * # Safety
 * `target` must be null or a handle from this library that has not been freed.
 */
void ps_target_free(struct PsTarget *target);

/**
 * Heralding probability of the photon-count `pattern` after beamsplitters of transmissivity `tau`.
 *
 * # Safety
 * `pattern` must point to `len` values and `out_p` must be writable.
 */
enum PsStatus ps_success_probability(const struct PsState *state,
                                     double tau,
                                     const uint32_t *pattern,
                                     size_t len,
                                     double *out_p);

/**
 * Exact fidelity of the heralded state with `target`, plus the ratio, probability and bounds.
 *
 * # Safety
 * Handles must be live, `pattern` must point to `len` values and `report` must be writable.
 */
enum PsStatus ps_fidelity(const struct PsState *state,
                          const struct PsTarget *target,
                          double tau,
                          const uint32_t *pattern,
                          size_t len,
                          struct PsFidelityReport *report);

/**
 * `f_N = 1ᵀ tanh(Gr) 1` and its bound `N tanh((N−1) r)` for an `n×n` row-major generator.
 *
 * # Safety
 * `g` must point to `n*n` doubles; `out_value` and `out_bound` must be writable.
 */
enum PsStatus ps_f_n(const double *g, size_t n, double r, double *out_value, double *out_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHOTONSUB_H */
