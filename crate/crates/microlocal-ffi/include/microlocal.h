#ifndef MICROLOCAL_H
#define MICROLOCAL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define ML_OK 0

#define ML_ERR_NULL -1

#define ML_ERR_UTF8 -2

#define ML_ERR_CONFIG -3

#define ML_ERR_PARAMETER -4

#define ML_ERR_COMPUTE -5

#define ML_ERR_PANIC -6

#define ML_ERR_IO -7

#define ML_GROUP_SIMILITUDE 0

#define ML_GROUP_DIAGONAL 1

#define ML_GROUP_SHEARLET 2

#define ML_VERDICT_REGULAR 0

#define ML_VERDICT_SINGULAR 1

#define ML_VERDICT_INCONCLUSIVE 2

typedef struct MlConfig MlConfig;

typedef struct MlGroup MlGroup;

typedef struct MlWavelet MlWavelet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
int32_t ml_last_error(char *buf, uintptr_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ml_version(void);

/**
 * Builds a dilation group. `anisotropy` may be null when `anisotropy_len` is 0.
 *
 * # Safety
 * `anisotropy` must be valid for `anisotropy_len` reads; `out` must be writable.
 */
int32_t ml_group_new(int32_t kind,
                     uintptr_t dimension,
                     const double *anisotropy,
                     uintptr_t anisotropy_len,
                     MlGroup **out_group);

/**
 * # Safety
 * `group` must come from `ml_group_new` and not be used afterwards.
 */
void ml_group_free(MlGroup *group);

/**
 * ‖h‖, ‖h⁻¹‖ and det h for the element with the given flat chart vector
 * (similitude d=2: [scale, angle]; diagonal: entries; shearlet: [scale, shears…]).
 *
 * # Safety
 * Pointers must be valid; `chart` for `chart_len` reads.
 */
int32_t ml_group_element_norms(const MlGroup *group,
                               const double *chart,
                               uintptr_t chart_len,
                               double *out_norm,
                               double *out_inverse_norm,
                               double *out_det);

/**
 * Writes 1 when ξ lies in the open dual orbit, else 0.
 *
 * # Safety
 * `xi` must be valid for `len` reads.
 */
int32_t ml_group_in_orbit(const MlGroup *group, const double *xi, uintptr_t len, int32_t *out_flag);

/**
 * Writes 1 when strong cone approximation is not excluded by scalar dilations, else 0.
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t ml_strong_mode_permitted(const MlGroup *group, int32_t *out_flag);

/**
 * Normalized bump wavelet on a frequency window given as JSON, e.g.
 * `{"shape":"shearlet_box","dimension":2}`.
 *
 * # Safety
 * `group` must be valid and `window_json` NUL-terminated.
 */
int32_t ml_wavelet_new(const MlGroup *group, const char *window_json, MlWavelet **out_wavelet);

/**
 * # Safety
 * `wavelet` must come from `ml_wavelet_new` and not be used afterwards.
 */
void ml_wavelet_free(MlWavelet *wavelet);

/**
 * Analytic coefficient ⟨u, π(y,h)ψ⟩ for an object given as JSON, e.g.
 * `{"kind":"point_mass","x0":[0.1,-0.2]}`; h is given by its flat chart vector.
 *
 * # Safety
 * Pointers must be valid; `y` for `dimension` reads, `chart` for `chart_len` reads.
 */
int32_t ml_coefficient(const MlGroup *group,
                       const MlWavelet *wavelet,
                       const char *object_json,
                       const double *y,
                       uintptr_t dimension,
                       const double *chart,
                       uintptr_t chart_len,
                       double *out_re,
                       double *out_im,
                       double *out_error);

/**
 * Loads a TOML run configuration and builds its group and wavelet.
 *
 * # Safety
 * `path` must be NUL-terminated; `out_config` writable.
 */
int32_t ml_config_load(const char *path, MlConfig **out_config);

/**
 * # Safety
 * `config` must come from `ml_config_load` and not be used afterwards.
 */
void ml_config_free(MlConfig *config);

/**
 * Classifies (x, ξ) for the configured signal. Writes an `ML_VERDICT_*`
 * code and the fitted decay slope (NaN when no fit was possible).
 *
 * # Safety
 * `x` and `xi` must be valid for `dimension` reads.
 */
int32_t ml_probe(const MlConfig *config,
                 const double *x,
                 const double *xi,
                 uintptr_t dimension,
                 int32_t *out_verdict,
                 double *out_slope);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MICROLOCAL_H */
