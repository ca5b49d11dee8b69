#ifndef SCATLAB_H
#define SCATLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call in this ABI.
 */
typedef enum ScatStatus {
  /**
   * The call succeeded.
   */
  SCAT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SCAT_STATUS_NULL_ARGUMENT = 1,
  /**
   * The arguments were rejected; `scat_last_error` explains why.
   */
  SCAT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The computation failed internally; `scat_last_error` explains why.
   */
  SCAT_STATUS_RUNTIME_ERROR = 3,
} ScatStatus;

/**
 * Double spherical-harmonic amplitude coefficients on an energy interval.
 */
typedef struct ScatAmplitude ScatAmplitude;

/**
 * Compactly supported real potential on a voxel grid.
 */
typedef struct ScatPotential ScatPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Writes the message of the most recent failure on this thread into `buf`
 * as a NUL-terminated string, truncating to `cap` bytes. Returns the size
 * the full message needs, including the terminator.
 */
uintptr_t scat_last_error(char *buf, uintptr_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *scat_version(void);

/**
 * Discrete contraction constant `c1(h)` of the strip-weighted free
 * resolvent on an `n^3` grid; approaches 1/2 as `h` goes to 0.
 */
enum ScatStatus scat_c1_constant(double h, uintptr_t n, double *out);

/**
 * Builds a mollifier bump supported in the ball of radius `scale` around
 * `(cx, cy, cz)`, which must stay inside the half ball `|x| <= 1/2`, with
 * sup norm `|amplitude|` and smoothness budget order `m`.
 */
enum ScatStatus scat_potential_bump(uintptr_t n,
                                    double cx,
                                    double cy,
                                    double cz,
                                    double scale,
                                    double amplitude,
                                    uintptr_t m,
                                    struct ScatPotential **out);

/**
 * Returns a copy of `p` rescaled by `lambda`.
 */
enum ScatStatus scat_potential_scaled(const struct ScatPotential *p,
                                      double lambda,
                                      struct ScatPotential **out);

/**
 * Sup norm of the potential over the grid.
 */
enum ScatStatus scat_potential_sup_norm(const struct ScatPotential *p, double *out);

/**
 * Releases a potential handle. Null is ignored.
 */
void scat_potential_free(struct ScatPotential *p);

/**
 * Solves the forward problem for `p` on the energy interval `[s1, s2]`
 * (one fixed energy when `s_samples <= 1` or the endpoints coincide) in
 * the strip of half-width `h`, and projects the scattering amplitudes onto
 * spherical-harmonic pairs up to degree `l_max`.
 */
enum ScatStatus scat_amplitude_compute(const struct ScatPotential *p,
                                       double s1,
                                       double s2,
                                       uintptr_t s_samples,
                                       double h,
                                       uintptr_t l_max,
                                       struct ScatAmplitude **out);

/**
 * Highest harmonic degree carried by the amplitude handle.
 */
enum ScatStatus scat_amplitude_l_max(const struct ScatAmplitude *a, uintptr_t *out);

/**
 * Number of energy samples carried by the amplitude handle.
 */
enum ScatStatus scat_amplitude_sample_count(const struct ScatAmplitude *a, uintptr_t *out);

/**
 * Reads one coefficient `a_{j1 p1 j2 p2}` at energy sample `sample`.
 * Degrees run from 0 and orders from 1 to `2j + 1`.
 */
enum ScatStatus scat_amplitude_entry(const struct ScatAmplitude *a,
                                     uintptr_t sample,
                                     uintptr_t j1,
                                     uintptr_t p1,
                                     uintptr_t j2,
                                     uintptr_t p2,
                                     double *out_re,
                                     double *out_im);

/**
 * Weighted coefficient norm at one energy `s`, with weights
 * `((2j + 1) / (e s))^(j + sigma)` on each factor.
 */
enum ScatStatus scat_amplitude_stefanov_norm(const struct ScatAmplitude *a,
                                             double s,
                                             double sigma1,
                                             double sigma2,
                                             double *out);

/**
 * Interval norm: the weighted sup over coefficients of their maximum
 * modulus across the energy samples.
 */
enum ScatStatus scat_amplitude_interval_norm(const struct ScatAmplitude *a,
                                             double sigma1,
                                             double sigma2,
                                             double *out);

/**
 * Serializes the amplitude handle to JSON, NUL-terminated and truncated to
 * `cap` bytes. Returns the size the full document needs, including the
 * terminator; call once with `cap = 0` to size a buffer.
 */
enum ScatStatus scat_amplitude_json(const struct ScatAmplitude *a,
                                    char *buf,
                                    uintptr_t cap,
                                    uintptr_t *needed);

/**
 * Releases an amplitude handle. Null is ignored.
 */
void scat_amplitude_free(struct ScatAmplitude *a);

/**
 * Smallest degree past which the weighted tail envelope
 * `c4 (2l + 1)^(sigma1 + sigma2) 2^(-l)` stays below `delta`.
 */
enum ScatStatus scat_truncation_degree(double delta,
                                       double sigma1,
                                       double sigma2,
                                       double c4,
                                       uintptr_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCATLAB_H */
