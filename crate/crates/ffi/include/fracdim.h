#ifndef FRACDIM_H
#define FRACDIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FRACDIM_MODE_EXACT 0

#define FRACDIM_MODE_GREEDY 1

#define FRACDIM_MODE_AUTO 2

/**
 * Result codes. The numbering matches the command-line exit codes.
 */
typedef enum {
  FRAC_STATUS_OK = 0,
  FRAC_STATUS_INVALID_ARGUMENT = 2,
  FRAC_STATUS_NOT_FOUND = 3,
  FRAC_STATUS_VERIFICATION_FAILED = 4,
  FRAC_STATUS_IO = 5,
  FRAC_STATUS_NULL_POINTER = 6,
  FRAC_STATUS_PANIC = 7,
} FracStatus;

/**
 * A point cloud.
 */
typedef struct FracCloud FracCloud;

/**
 * A labeled (k,l)-regular family.
 */
typedef struct FracFamily FracFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *fracdim_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void fracdim_string_free(char *s);

/**
 * Parses a cloud document (`metric` plus `points` or `matrix`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
FracStatus fracdim_cloud_from_json(const char *json, FracCloud **out);

/**
 * Builds a cloud from a generator spec such as `{"kind":"cantor","level":5}`.
 *
 * # Safety
 * `spec_json` must be a NUL-terminated string; `out` must be writable.
 */
FracStatus fracdim_cloud_generate(const char *spec_json, FracCloud **out);

/**
 * # Safety
 * `cloud` must be a live handle; `out` must be writable.
 */
FracStatus fracdim_cloud_to_json(const FracCloud *cloud, char **out);

/**
 * # Safety
 * `cloud` must be a live handle; `out` must be writable.
 */
FracStatus fracdim_cloud_len(const FracCloud *cloud, size_t *out);

/**
 * # Safety
 * `cloud` must be null or a live handle, which becomes invalid.
 */
void fracdim_cloud_free(FracCloud *cloud);

/**
 * Window lower-dimension estimate, returned as a JSON report.
 * A null `window_json` selects the default window; `cutoff` 0 selects the default.
 *
 * # Safety
 * `cloud` must be a live handle, `window_json` null or NUL-terminated, `out` writable.
 */
FracStatus fracdim_estimate(const FracCloud *cloud,
                            const char *window_json,
                            uint32_t mode_code,
                            size_t cutoff,
                            char **out);

/**
 * Searches for a (k,l)-regular family of the given depth.
 * Returns `NotFound` when none exists or the budget runs out; `*exhausted`
 * (if non-null) tells the two apart.
 *
 * # Safety
 * `cloud` must be a live handle; `out` writable; `exhausted` null or writable.
 */
FracStatus fracdim_search(const FracCloud *cloud,
                          uint32_t k,
                          uint32_t l,
                          uint32_t depth,
                          bool strong,
                          uint64_t budget,
                          FracFamily **out,
                          bool *exhausted);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
FracStatus fracdim_family_from_json(const char *json, FracFamily **out);

/**
 * # Safety
 * `family` must be a live handle; `out` must be writable.
 */
FracStatus fracdim_family_to_json(const FracFamily *family, char **out);

/**
 * Dimension bound `log2(l)/k` certified by a family.
 *
 * # Safety
 * `family` must be a live handle; `out` must be writable.
 */
FracStatus fracdim_family_bound(const FracFamily *family, double *out);

/**
 * # Safety
 * `family` must be null or a live handle, which becomes invalid.
 */
void fracdim_family_free(FracFamily *family);

/**
 * Checks a family against its cloud. Returns `VerificationFailed` if any
 * constraint is violated; the JSON report (if `report` is non-null) lists them.
 *
 * # Safety
 * Handles must be live; `report` null or writable.
 */
FracStatus fracdim_verify(const FracCloud *cloud, const FracFamily *family, char **report);

/**
 * Runs the covering-count check on a verified family.
 *
 * # Safety
 * Handles must be live.
 */
FracStatus fracdim_scaling_check(const FracCloud *cloud, const FracFamily *family);

/**
 * # Safety
 * `out` must be writable.
 */
FracStatus fracdim_dimension_bound(uint32_t k, uint64_t l, double *out);

/**
 * # Safety
 * `k` and `l` must be writable.
 */
FracStatus fracdim_choose_parameters(double c, double beta, double alpha, uint32_t *k, uint64_t *l);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACDIM_H */
