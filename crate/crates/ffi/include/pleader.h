#ifndef PLEADER_H
#define PLEADER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  PLD_STATUS_OK = 0,
  PLD_STATUS_NULL_POINTER = -1,
  PLD_STATUS_INVALID_ARGUMENT = -2,
  PLD_STATUS_NUMERICAL = -3,
  PLD_STATUS_PANIC = -255,
} PldStatus;

/**
 * Time-scale plane, row-major with scales decreasing down the rows.
 */
typedef struct PldPlane PldPlane;

/**
 * One realization of the pulse process with its lookup index.
 */
typedef struct PldPulses PldPulses;

/**
 * Analyzing wavelet.
 */
typedef struct PldWavelet PldWavelet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pld_version(void);

/**
 * Length in bytes of this thread's last error message, without the NUL.
 */
size_t pld_last_error_length(void);

/**
 * Copies the last error message into `buf` (NUL-terminated, truncated to
 * `capacity - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `capacity` writable bytes.
 */
size_t pld_last_error_message(char *buf, size_t capacity);

/**
 * Even wavelet on `[-1, 1]` with `vanishing_moments` vanishing moments and
 * `smoothness` continuous derivatives.
 *
 * # Safety
 * `out` must be null or a valid pointer to a handle slot.
 */
PldStatus pld_wavelet_build(uint32_t vanishing_moments, uint32_t smoothness, PldWavelet **out);

/**
 * # Safety
 * `w` must be null or a handle from `pld_wavelet_build` not yet freed.
 */
void pld_wavelet_free(PldWavelet *w);

/**
 * # Safety
 * `w` must be a live handle and `value` a valid pointer.
 */
PldStatus pld_wavelet_eval(const PldWavelet *w, double x, double *value);

/**
 * `∫ x^m ψ(x) dx`, exact.
 *
 * # Safety
 * `w` must be a live handle and `value` a valid pointer.
 */
PldStatus pld_wavelet_moment(const PldWavelet *w, uint32_t m, double *value);

/**
 * The admissibility constant `c_ψ`.
 *
 * # Safety
 * `w` must be a live handle and `value` a valid pointer.
 */
PldStatus pld_wavelet_admissibility(const PldWavelet *w, double *value);

/**
 * Transform of `len` samples `f(origin + i step)` on dyadic scales from
 * `a_max` down to `a_min` and on `positions_len` positions
 * `positions_start + k positions_step`.
 *
 * # Safety
 * `samples` must hold `len` doubles; `w` must be a live handle; `out` must be
 * a valid handle slot.
 */
PldStatus pld_cwt(const PldWavelet *w,
                  const double *samples,
                  size_t len,
                  double origin,
                  double step,
                  double a_max,
                  double a_min,
                  uint32_t scales_per_octave,
                  double positions_start,
                  double positions_step,
                  size_t positions_len,
                  PldPlane **out);

/**
 * # Safety
 * `plane` must be null or a handle from `pld_cwt` not yet freed.
 */
void pld_plane_free(PldPlane *plane);

/**
 * Number of scales (rows) and positions (columns).
 *
 * # Safety
 * `plane` must be a live handle; `rows` and `cols` valid pointers.
 */
PldStatus pld_plane_shape(const PldPlane *plane, size_t *rows, size_t *cols);

/**
 * Copies the scales (decreasing) into `buf`, which must hold `rows` doubles.
 *
 * # Safety
 * `plane` must be a live handle; `buf` must hold `capacity` doubles.
 */
PldStatus pld_plane_scales(const PldPlane *plane, double *buf, size_t capacity);

/**
 * Copies the plane row-major into `buf`, which must hold `rows * cols`
 * doubles. Entries whose wavelet support leaves the signal are NaN.
 *
 * # Safety
 * `plane` must be a live handle; `buf` must hold `capacity` doubles.
 */
PldStatus pld_plane_values(const PldPlane *plane, double *buf, size_t capacity);

/**
 * p-exponent at `x0` (a plane position) from a log-log fit of the p-leaders
 * over `[scale_lo, scale_hi]`; `p = INFINITY` uses sup-leaders. A signal that
 * vanishes near `x0` yields `INFINITY`.
 *
 * # Safety
 * `plane` must be a live handle; `value` a valid pointer.
 */
PldStatus pld_p_exponent(const PldPlane *plane,
                         double p,
                         double x0,
                         double scale_lo,
                         double scale_hi,
                         double *value);

/**
 * Samples a pulse process with the default pulse shape.
 *
 * # Safety
 * `out` must be a valid handle slot.
 */
PldStatus pld_pulses_simulate(double alpha,
                              double eta,
                              uint32_t j_max,
                              uint64_t seed,
                              PldPulses **out);

/**
 * # Safety
 * `pulses` must be null or a handle from `pld_pulses_simulate` not yet freed.
 */
void pld_pulses_free(PldPulses *pulses);

/**
 * # Safety
 * `pulses` must be a live handle; `count` a valid pointer.
 */
PldStatus pld_pulses_count(const PldPulses *pulses, size_t *count);

/**
 * Copies the `(C_n, B_n, X_n)` triples into `buf` (3 doubles per pulse).
 *
 * # Safety
 * `pulses` must be a live handle; `buf` must hold `capacity` doubles.
 */
PldStatus pld_pulses_triples(const PldPulses *pulses, double *buf, size_t capacity);

/**
 * Path values at the `len` points in `xs`, written to `values`.
 *
 * # Safety
 * `pulses` must be a live handle; `xs` and `values` must hold `len` doubles.
 */
PldStatus pld_pulses_evaluate(const PldPulses *pulses,
                              const double *xs,
                              double *values,
                              size_t len);

/**
 * `D(h) = h/α` on `[αη, α]`, `-INFINITY` elsewhere.
 *
 * # Safety
 * `value` must be a valid pointer.
 */
PldStatus pld_holder_spectrum(double alpha, double eta, double h, double *value);

/**
 * p-spectrum for `α < 0`, `-INFINITY` outside its support.
 *
 * # Safety
 * `value` must be a valid pointer.
 */
PldStatus pld_p_spectrum(double alpha, double eta, double p, double h, double *value);

/**
 * Open interval of `p` for which the p-spectrum formula holds.
 *
 * # Safety
 * `lo` and `hi` must be valid pointers.
 */
PldStatus pld_admissible_p_range(double alpha, double eta, double *lo, double *hi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLEADER_H */
