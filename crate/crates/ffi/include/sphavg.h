/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SPHAVG_H
#define SPHAVG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SphStatus {
  SPH_STATUS_OK = 0,
  SPH_STATUS_ERR_NULL = 1,
  SPH_STATUS_ERR_INVALID = 2,
  SPH_STATUS_ERR_PRECISION = 3,
  SPH_STATUS_ERR_RESOURCE = 4,
  SPH_STATUS_ERR_PANIC = 5,
} SphStatus;

/**
 * The multiplier `a_λ` and its main term at one radius.
 */
typedef struct SphMultiplier SphMultiplier;

/**
 * Lattice points on one sphere.
 */
typedef struct SphSphere SphSphere;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *sph_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sph_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void sph_string_free(char *s);

enum SphStatus sph_admissible(uint32_t d, uint64_t lambda2, bool *result);

/**
 * `|S^d_λ|`; fails with `ERR_RESOURCE` if the count does not fit in 64 bits.
 */
enum SphStatus sph_sphere_count(uint32_t d, uint64_t lambda2, uint64_t *result);

/**
 * `K(λ, q, ℓ)` with `d = l_len`.
 */
enum SphStatus sph_kloosterman(uint64_t lambda2,
                               uint64_t q,
                               const int64_t *l,
                               size_t l_len,
                               double *result);

/**
 * `ρ(q, λ)`.
 */
enum SphStatus sph_rho(uint64_t q, uint64_t lambda2, double *result);

/**
 * `σ_b(n)`.
 */
enum SphStatus sph_sigma(double b, uint64_t n, double *result);

/**
 * Transform of normalized measure on the sphere of radius `lambda` in
 * `R^{xi_len}` at `xi`.
 */
enum SphStatus sph_sphere_ft(double lambda, const double *xi, size_t xi_len, double *result);

enum SphStatus sph_sphere_new(uint32_t d, uint64_t lambda2, struct SphSphere **handle);

void sph_sphere_free(struct SphSphere *handle);

enum SphStatus sph_sphere_len(const struct SphSphere *handle, size_t *result);

/**
 * Writes point `index` (lexicographic order) into `coords[0..d]`.
 */
enum SphStatus sph_sphere_point(const struct SphSphere *handle,
                                size_t index,
                                int64_t *coords,
                                size_t coords_len);

enum SphStatus sph_multiplier_new(uint32_t d, uint64_t lambda2, struct SphMultiplier **handle);

void sph_multiplier_free(struct SphMultiplier *handle);

/**
 * `a_λ(ξ)`.
 */
enum SphStatus sph_multiplier_a(const struct SphMultiplier *handle,
                                const double *xi,
                                size_t xi_len,
                                double *result);

/**
 * `c_λ(ξ)`.
 */
enum SphStatus sph_multiplier_c(const struct SphMultiplier *handle,
                                const double *xi,
                                size_t xi_len,
                                double *result);

/**
 * `r_λ(ξ) = a_λ(ξ) - c_λ(ξ)`.
 */
enum SphStatus sph_multiplier_residual(const struct SphMultiplier *handle,
                                       const double *xi,
                                       size_t xi_len,
                                       double *result);

/**
 * Weil-bound certificate for modulus `q` as JSON.
 */
enum SphStatus sph_weil_ratio_json(uint64_t lambda2,
                                   uint64_t q,
                                   uint32_t d,
                                   double eta,
                                   char **json);

/**
 * Residual sup-estimate certificate as JSON.
 */
enum SphStatus sph_residual_sup_json(uint32_t d,
                                     uint64_t lambda2,
                                     size_t grid,
                                     uint64_t seed,
                                     double epsilon,
                                     char **json);

/**
 * Runs any command from a serialized run configuration and returns the
 * `{config, results}` document the command-line tool would print.
 */
enum SphStatus sph_run_json(const char *config, char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHAVG_H */
