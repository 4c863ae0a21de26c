#ifndef RIALIGN_H
#define RIALIGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RiaStatus {
  RIA_STATUS_OK = 0,
  RIA_STATUS_NULL_POINTER = 1,
  RIA_STATUS_INVALID_ARGUMENT = 2,
  RIA_STATUS_CAP_EXCEEDED = 3,
  RIA_STATUS_PARSE_ERROR = 4,
  RIA_STATUS_OVERFLOW = 5,
  RIA_STATUS_INTERNAL = 6,
} RiaStatus;

typedef struct RiaChannel RiaChannel;

/**
 * A validated network configuration with its seed.
 */
typedef struct RiaConfig RiaConfig;

typedef struct RiaRegion RiaRegion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ria_last_error(void);

/**
 * Parse a JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RiaStatus ria_config_from_json(const char *json, struct RiaConfig **out);

/**
 * # Safety
 * `config` must come from [`ria_config_from_json`] or be null.
 */
void ria_config_free(struct RiaConfig *config);

/**
 * Seed stored in the configuration file.
 *
 * # Safety
 * `config` must be a live handle.
 */
uint64_t ria_config_seed(const struct RiaConfig *config);

/**
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
enum RiaStatus ria_channel_sample(const struct RiaConfig *config,
                                  uint64_t seed,
                                  struct RiaChannel **out);

/**
 * Coefficient from transmit antenna `t` of transmitter `k` to receive antenna
 * `r` of receiver `j`.
 *
 * # Safety
 * `channel` must be a live handle and `out` writable.
 */
enum RiaStatus ria_channel_get(const struct RiaChannel *channel,
                               size_t j,
                               size_t k,
                               size_t r,
                               size_t t,
                               double *out);

/**
 * # Safety
 * `channel` must come from [`ria_channel_sample`] or be null.
 */
void ria_channel_free(struct RiaChannel *channel);

/**
 * Number of direction families: 1 for interference networks, J for X networks.
 *
 * # Safety
 * `config` must be a live handle.
 */
size_t ria_family_count(const struct RiaConfig *config);

/**
 * Base and extended direction counts of one family.
 *
 * # Safety
 * `config` must be a live handle; `d` and `d_ext` writable.
 */
enum RiaStatus ria_direction_counts(const struct RiaConfig *config,
                                    uint32_t n,
                                    size_t family,
                                    uint64_t *d,
                                    uint64_t *d_ext);

/**
 * Build the scheme for one stream per message and count alignment
 * violations over all receivers.
 *
 * # Safety
 * `config` must be a live handle and `violations` writable.
 */
enum RiaStatus ria_verify_alignment(const struct RiaConfig *config,
                                    uint32_t n,
                                    uint64_t seed,
                                    uint64_t *violations);

/**
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
enum RiaStatus ria_inner_region(const struct RiaConfig *config, struct RiaRegion **out);

/**
 * Outer region of the `K`-user interference channel with `M` and `N` antennas.
 *
 * # Safety
 * `out` must be writable.
 */
enum RiaStatus ria_outer_region(size_t k, size_t m, size_t n, struct RiaRegion **out);

/**
 * # Safety
 * `region` must be a live handle.
 */
size_t ria_region_dim(const struct RiaRegion *region);

/**
 * Membership of the point `nums[i] / dens[i]`.
 *
 * # Safety
 * `nums` and `dens` must hold `len` values; `region` live; `out` writable.
 */
enum RiaStatus ria_region_contains(const struct RiaRegion *region,
                                   const int64_t *nums,
                                   const int64_t *dens,
                                   size_t len,
                                   bool *out);

/**
 * Largest total DoF over the region, as `num / den`.
 *
 * # Safety
 * `region` must be live; `num` and `den` writable.
 */
enum RiaStatus ria_region_maximize_sum(const struct RiaRegion *region, int64_t *num, int64_t *den);

/**
 * JSON form of the region; free the string with [`ria_string_free`].
 *
 * # Safety
 * `region` must be live and `out` writable.
 */
enum RiaStatus ria_region_to_json(const struct RiaRegion *region, char **out);

/**
 * # Safety
 * `region` must come from a region constructor or be null.
 */
void ria_region_free(struct RiaRegion *region);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void ria_string_free(char *s);

/**
 * Outer total-DoF bound and the zero-forcing value, each as `num / den`.
 *
 * # Safety
 * All outputs must be writable.
 */
enum RiaStatus ria_outer_total_dof(size_t k,
                                   size_t m,
                                   size_t n,
                                   int64_t *outer_num,
                                   int64_t *outer_den,
                                   int64_t *zf_num,
                                   int64_t *zf_den);

/**
 * Minimum of `‖A q‖` over nonzero integer differences `q ∈ [-2Q, 2Q]^cols`.
 * `a` is row-major.
 *
 * # Safety
 * `a` must hold `rows * cols` values; `d_min` writable.
 */
enum RiaStatus ria_min_distance(const double *a,
                                size_t rows,
                                size_t cols,
                                uint64_t q,
                                double *d_min);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIALIGN_H */
