#ifndef SQBTC_H
#define SQBTC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqbtcStatus {
  SQBTC_STATUS_OK = 0,
  SQBTC_STATUS_NULL_POINTER = 1,
  SQBTC_STATUS_INVALID_ARGUMENT = 2,
  SQBTC_STATUS_NUMERICAL = 3,
  SQBTC_STATUS_RESOURCE_CAP = 4,
  SQBTC_STATUS_BUFFER_TOO_SMALL = 5,
  SQBTC_STATUS_IO = 6,
  SQBTC_STATUS_PANIC = 7,
} SqbtcStatus;

typedef struct SqbtcModel SqbtcModel;

typedef struct SqbtcSpectrum SqbtcSpectrum;

typedef struct SqbtcState SqbtcState;

typedef struct SqbtcTrace SqbtcTrace;

typedef struct SqbtcWigner SqbtcWigner;

// Dissipative gaps; absent values are NaN.
typedef struct SqbtcGaps {
  double delta_1;
  double delta_2;
  double delta_omega;
} SqbtcGaps;

// Collective-spin observables of a state.
typedef struct SqbtcObservables {
  double sz_over_n;
  double sx_over_n;
  double sy_over_n;
  double var_sx;
  double var_sy;
  double participation_ratio;
} SqbtcObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sqbtc_version(void);

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call into the library on the same thread.
const char *sqbtc_last_error(void);

// Model with explicit rates. `m_abs < 0` selects perfect squeezing.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SqbtcStatus sqbtc_model_new(uintptr_t n_atoms,
                                 double rabi,
                                 double drive_phase,
                                 double gamma,
                                 double n_bar,
                                 double m_abs,
                                 double squeeze_phase,
                                 struct SqbtcModel **out);

// Model in reduced units (`NΓ/2 = 1`, ψ = π/2, φ = 0, perfect squeezing).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SqbtcStatus sqbtc_model_new_reduced(uintptr_t n_atoms,
                                         double drive_ratio,
                                         double n_bar,
                                         struct SqbtcModel **out);

// # Safety
// `model` must be null or a handle from `sqbtc_model_new*` not yet freed.
void sqbtc_model_free(struct SqbtcModel *model);

// Full Liouvillian spectrum (dense; small systems only).
//
// # Safety
// `model` must be a live model handle and `out` writable.
enum SqbtcStatus sqbtc_spectrum_dense(const struct SqbtcModel *model, struct SqbtcSpectrum **out);

// Slowest `k` eigenvalues near the origin plus the first `harmonics`
// oscillation bands, from shift-invert iteration.
//
// # Safety
// `model` must be a live model handle and `out` writable.
enum SqbtcStatus sqbtc_spectrum_low_lying(const struct SqbtcModel *model,
                                          uintptr_t k,
                                          uintptr_t harmonics,
                                          struct SqbtcSpectrum **out);

// # Safety
// `spectrum` must be a live spectrum handle.
uintptr_t sqbtc_spectrum_len(const struct SqbtcSpectrum *spectrum);

// Eigenvalue `index` in spectrum order (ascending `|Re λ|`).
//
// # Safety
// `spectrum` must be a live spectrum handle; `re` and `im` writable.
enum SqbtcStatus sqbtc_spectrum_get(const struct SqbtcSpectrum *spectrum,
                                    uintptr_t index,
                                    double *re,
                                    double *im);

// # Safety
// `spectrum` must be a live spectrum handle and `out` writable.
enum SqbtcStatus sqbtc_spectrum_gaps(const struct SqbtcSpectrum *spectrum, struct SqbtcGaps *out);

// # Safety
// `spectrum` must be null or a live spectrum handle.
void sqbtc_spectrum_free(struct SqbtcSpectrum *spectrum);

// Unique steady state of the model.
//
// # Safety
// `model` must be a live model handle and `out` writable.
enum SqbtcStatus sqbtc_steady_state(const struct SqbtcModel *model, struct SqbtcState **out);

// All atoms in the ground state.
//
// # Safety
// `out` must be writable.
enum SqbtcStatus sqbtc_state_all_down(uintptr_t n_atoms, struct SqbtcState **out);

// Spin coherent state along `(θ, φ)`.
//
// # Safety
// `out` must be writable.
enum SqbtcStatus sqbtc_state_coherent(uintptr_t n_atoms,
                                      double theta,
                                      double phi,
                                      struct SqbtcState **out);

// Hilbert-space dimension `N + 1`, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live state handle.
uintptr_t sqbtc_state_dim(const struct SqbtcState *state);

// # Safety
// `state` must be a live state handle and `out` writable.
enum SqbtcStatus sqbtc_state_observables(const struct SqbtcState *state,
                                         struct SqbtcObservables *out);

// Dicke-level populations `p_m` from `m = +j` down to `-j` into `buf`.
//
// # Safety
// `state` must be a live state handle and `buf` valid for `len` doubles.
enum SqbtcStatus sqbtc_state_occupations(const struct SqbtcState *state,
                                         double *buf,
                                         uintptr_t len);

// # Safety
// `state` must be null or a live state handle.
void sqbtc_state_free(struct SqbtcState *state);

// Integrates from `initial` to `t_final` (in `(NΓ/2)t`), sampling every `sample_dt`.
//
// # Safety
// `model` and `initial` must be live handles and `out` writable.
enum SqbtcStatus sqbtc_evolve(const struct SqbtcModel *model,
                              const struct SqbtcState *initial,
                              double t_final,
                              double sample_dt,
                              double rtol,
                              double atol,
                              struct SqbtcTrace **out);

// # Safety
// `trace` must be null or a live trace handle.
uintptr_t sqbtc_trace_len(const struct SqbtcTrace *trace);

// Copies the sample times and `⟨Sz⟩/N`, `⟨Sx⟩/N`, `⟨Sy⟩/N`; any output
// pointer may be null to skip that column.
//
// # Safety
// `trace` must be a live trace handle; non-null buffers must hold `len` doubles.
enum SqbtcStatus sqbtc_trace_copy(const struct SqbtcTrace *trace,
                                  double *times,
                                  double *sz_over_n,
                                  double *sx_over_n,
                                  double *sy_over_n,
                                  uintptr_t len);

// Strongest Fourier peak of `⟨Sz⟩/N` after `transient_cut` (Hann window).
//
// # Safety
// `trace` must be a live trace handle and `frequency` writable.
enum SqbtcStatus sqbtc_trace_dominant_frequency(const struct SqbtcTrace *trace,
                                                double transient_cut,
                                                double *frequency);

// # Safety
// `trace` must be null or a live trace handle.
void sqbtc_trace_free(struct SqbtcTrace *trace);

// Spin Wigner function on `n_theta × n_phi` points.
//
// # Safety
// `state` must be a live state handle and `out` writable.
enum SqbtcStatus sqbtc_wigner(const struct SqbtcState *state,
                              uintptr_t n_theta,
                              uintptr_t n_phi,
                              struct SqbtcWigner **out);

// Grid values row-major over θ (`n_theta * n_phi` doubles).
//
// # Safety
// `wigner` must be a live handle and `buf` valid for `len` doubles.
enum SqbtcStatus sqbtc_wigner_values(const struct SqbtcWigner *wigner, double *buf, uintptr_t len);

// Integral of the map over the sphere (1 for a normalized state).
//
// # Safety
// `wigner` must be null or a live handle.
double sqbtc_wigner_integral(const struct SqbtcWigner *wigner);

// # Safety
// `wigner` must be null or a live handle.
void sqbtc_wigner_free(struct SqbtcWigner *wigner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQBTC_H */
