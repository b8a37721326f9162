#ifndef HYDROSPLIT_H
#define HYDROSPLIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HsStatus {
  HS_STATUS_OK = 0,
  HS_STATUS_NULL_POINTER = 1,
  HS_STATUS_INVALID_ARGUMENT = 2,
  HS_STATUS_SOLVER_FAILURE = 3,
  HS_STATUS_PANIC = 4,
} HsStatus;

/**
 * Opaque simulation handle.
 */
typedef struct HsSimulation HsSimulation;

/**
 * Latest values at one Stokes–circuit connection.
 */
typedef struct HsInterfaceSample {
  uint32_t domain;
  uint32_t circuit;
  uint32_t index;
  double pressure;
  double flow;
  double node_pressure;
} HsInterfaceSample;

typedef struct HsEnergy {
  double kinetic;
  double circuit;
  double viscous_dissipation;
  double connection_dissipation;
  double circuit_dissipation;
  double stokes_power;
  double circuit_power;
} HsEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds the configured example and sets it to its exact state at t = 0.
 *
 * # Safety
 * `config_toml` is NULL or a NUL-terminated string; `out` is a valid
 * pointer to writable storage for one handle.
 */
enum HsStatus hs_simulation_create(const char *config_toml, struct HsSimulation **out);

/**
 * Advances by `steps` global time steps. On failure the state is left at
 * the last completed step.
 *
 * # Safety
 * `sim` is NULL or a handle from [`hs_simulation_create`] not yet freed.
 */
enum HsStatus hs_simulation_advance(struct HsSimulation *sim, size_t steps);

/**
 * # Safety
 * `sim` is a live handle or NULL; `out` is valid or NULL.
 */
enum HsStatus hs_simulation_time(const struct HsSimulation *sim, double *out);

/**
 * # Safety
 * `sim` is a live handle or NULL; `out` is valid or NULL.
 */
enum HsStatus hs_simulation_interface_count(const struct HsSimulation *sim, size_t *out);

/**
 * # Safety
 * `sim` is a live handle or NULL; `out` is valid or NULL.
 */
enum HsStatus hs_simulation_interface(const struct HsSimulation *sim,
                                      size_t index,
                                      struct HsInterfaceSample *out);

/**
 * # Safety
 * `sim` is a live handle or NULL; `out` is valid or NULL.
 */
enum HsStatus hs_simulation_energy(const struct HsSimulation *sim, struct HsEnergy *out);

/**
 * Runs the oracle self-check; `passed` receives 1 or 0. The names of
 * failed checks are stored as the last error.
 *
 * # Safety
 * `config_toml` is NULL or a NUL-terminated string; `passed` is valid or
 * NULL.
 */
enum HsStatus hs_verify_oracle(const char *config_toml, int32_t *passed);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `sim` is NULL or a handle from [`hs_simulation_create`] not yet freed.
 */
void hs_simulation_free(struct HsSimulation *sim);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated) and returns its full length in bytes. Passing a NULL
 * `buf` only queries the length.
 *
 * # Safety
 * `buf` is NULL or points to `len` writable bytes.
 */
size_t hs_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYDROSPLIT_H */
