#ifndef LEOVEC_H
#define LEOVEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum LeovecStatus {
  LEOVEC_STATUS_OK = 0,
  LEOVEC_STATUS_NULL_POINTER = 1,
  LEOVEC_STATUS_INVALID_UTF8 = 2,
  LEOVEC_STATUS_CONFIG = 3,
  LEOVEC_STATUS_CONSTELLATION = 4,
  LEOVEC_STATUS_IO = 5,
  LEOVEC_STATUS_BUFFER_TOO_SMALL = 6,
  LEOVEC_STATUS_PANIC = 7,
} LeovecStatus;

/**
 * Opaque simulation report handle.
 */
typedef struct LeovecReport LeovecReport;

/**
 * Opaque scenario handle.
 */
typedef struct LeovecScenario LeovecScenario;

/**
 * Aggregate results of one run. `median_delay_s` is NaN when no frame completed.
 */
typedef struct LeovecMetrics {
  uint64_t generated;
  uint64_t onboard;
  uint64_t offloaded;
  uint64_t dropped;
  uint64_t in_flight;
  double p_rt;
  double p_d;
  double frac_onboard;
  double frac_offload;
  double frac_drop;
  double rho;
  double median_delay_s;
} LeovecMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *leovec_version(void);

/**
 * Copy the calling thread's last error message into `buf`; returns the size
 * needed including the NUL (0 when there is no message).
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t leovec_last_error_message(char *buf, size_t cap);

/**
 * New scenario with the reference parameter set.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LeovecStatus leovec_scenario_table1(struct LeovecScenario **out);

/**
 * Parse a scenario from JSON text. Relative constellation paths resolve
 * against the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LeovecStatus leovec_scenario_from_json(const char *json, struct LeovecScenario **out);

/**
 * Load a scenario file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LeovecStatus leovec_scenario_load(const char *path, struct LeovecScenario **out);

/**
 * Set one key (dotted for nested settings) from its JSON or bare-string value.
 * The scenario is unchanged on error.
 *
 * # Safety
 * `scenario` must come from this library; `key`/`value` NUL-terminated.
 */
enum LeovecStatus leovec_scenario_set(struct LeovecScenario *scenario,
                                      const char *key,
                                      const char *value);

/**
 * Serialize the effective scenario as JSON into `buf`.
 *
 * # Safety
 * `scenario` must come from this library; `buf` null or valid for `cap` bytes;
 * `needed` null or valid.
 */
enum LeovecStatus leovec_scenario_to_json(const struct LeovecScenario *scenario,
                                          char *buf,
                                          size_t cap,
                                          size_t *needed);

/**
 * # Safety
 * `scenario` must be null or come from this library, and not be used again.
 */
void leovec_scenario_free(struct LeovecScenario *scenario);

/**
 * Run the scenario with `seed` (overriding the scenario's own).
 *
 * # Safety
 * `scenario` must come from this library and `out` be a valid pointer.
 */
enum LeovecStatus leovec_simulate(const struct LeovecScenario *scenario,
                                  uint64_t seed,
                                  struct LeovecReport **out);

/**
 * # Safety
 * `report` must come from this library; `out` must be valid.
 */
enum LeovecStatus leovec_report_metrics(const struct LeovecReport *report,
                                        struct LeovecMetrics *out);

/**
 * Per-frame CSV. Call with a null `buf` to learn the size.
 *
 * # Safety
 * As for [`leovec_scenario_to_json`].
 */
enum LeovecStatus leovec_report_frames_csv(const struct LeovecReport *report,
                                           char *buf,
                                           size_t cap,
                                           size_t *needed);

/**
 * Summary JSON (metrics, configuration, seed, version).
 *
 * # Safety
 * As for [`leovec_scenario_to_json`].
 */
enum LeovecStatus leovec_report_summary_json(const struct LeovecReport *report,
                                             char *buf,
                                             size_t cap,
                                             size_t *needed);

/**
 * # Safety
 * `report` must be null or come from this library, and not be used again.
 */
void leovec_report_free(struct LeovecReport *report);

/**
 * Free-space path loss [dB] for carrier [GHz] and distance [km].
 */
double leovec_fspl_db(double carrier_ghz, double d_km);

/**
 * SNR [dB] from transmitter EIRP, receiver G/T, path loss and bandwidth,
 * with k = -228.6 dBW/K/Hz.
 */
double leovec_snr_db(double eirp_dbw, double g_over_t_dbk, double pl_db, double bandwidth_hz);

double leovec_ergodic_capacity_bps(double bandwidth_hz, double snr_db);

/**
 * GV-to-satellite range [km].
 */
double leovec_slant_distance_km(double altitude_km, double cos_alpha);

/**
 * Elevation [deg], or NaN below the horizon.
 */
double leovec_elevation_deg(double altitude_km, double cos_alpha);

double leovec_propagation_delay_s(double d_km);

/**
 * Light-drop probability min(1, (t_hat/deadline)^sigma).
 */
double leovec_drop_probability(double t_hat_s, double deadline_s, double sigma);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEOVEC_H */
