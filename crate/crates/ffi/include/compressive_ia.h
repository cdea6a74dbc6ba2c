#ifndef COMPRESSIVE_IA_H
#define COMPRESSIVE_IA_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CiaStatus {
  CIA_STATUS_OK = 0,
  CIA_STATUS_NULL_POINTER = 1,
  CIA_STATUS_INVALID_ARGUMENT = 2,
  CIA_STATUS_INVALID_CONFIG = 3,
  /**
   * Singular information matrix, zero tone or a diverging latency.
   */
  CIA_STATUS_NUMERICAL = 4,
  CIA_STATUS_IO = 5,
  CIA_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  CIA_STATUS_INTERNAL = 7,
} CiaStatus;

typedef enum CiaMode {
  CIA_MODE_PT = 0,
  CIA_MODE_NT = 1,
  CIA_MODE_DIA = 2,
} CiaMode;

/**
 * Opaque codebook: one unit-norm beam per burst.
 */
typedef struct CiaCodebook CiaCodebook;

/**
 * Opaque scenario (frame constants, arrays, thresholds, seed).
 */
typedef struct CiaScenario CiaScenario;

/**
 * Single-path parameters. `eps_f` in radians per sample, angles in
 * radians, `delay` in seconds.
 */
typedef struct CiaLosParams {
  double eps_f;
  double aod;
  double aoa;
  double delay;
  double gain_re;
  double gain_im;
} CiaLosParams;

typedef struct CiaTrainingResult {
  /**
   * 1 when the cell was detected and the remaining fields are set.
   */
  int32_t detected;
  uint64_t eps_t_hat;
  double statistic;
  double aod;
  double aoa;
  double delay;
  double eps_f;
  double gain_re;
  double gain_im;
} CiaTrainingResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *cia_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cia_version(void);

enum CiaStatus cia_scenario_new_default(struct CiaScenario **out_scenario);

/**
 * Parses a scenario from TOML text; unspecified keys take defaults.
 */
enum CiaStatus cia_scenario_from_toml(const char *toml, struct CiaScenario **out_scenario);

void cia_scenario_free(struct CiaScenario *scenario);

enum CiaStatus cia_scenario_set_seed(struct CiaScenario *scenario, uint64_t seed);

/**
 * Samples in one SS-period capture for this scenario.
 */
enum CiaStatus cia_scenario_capture_len(const struct CiaScenario *scenario, uint64_t *out_len);

/**
 * Normalized CFO (radians per sample) of `ppm` at the scenario carrier.
 */
enum CiaStatus cia_cfo_from_ppm(const struct CiaScenario *scenario, double ppm, double *out_eps_f);

/**
 * Pseudorandom codebook of `bursts` beams for `antennas` elements, drawn
 * from the scenario seed and `stream`.
 */
enum CiaStatus cia_codebook_pseudorandom(const struct CiaScenario *scenario,
                                         uint64_t antennas,
                                         uint64_t stream,
                                         struct CiaCodebook **out_codebook);

/**
 * Sector codebook with `sectors` beams covering (-pi/2, pi/2).
 */
enum CiaStatus cia_codebook_sector(uint64_t antennas,
                                   uint64_t sectors,
                                   struct CiaCodebook **out_codebook);

void cia_codebook_free(struct CiaCodebook *codebook);

enum CiaStatus cia_codebook_shape(const struct CiaCodebook *codebook,
                                  uint64_t *out_beams,
                                  uint64_t *out_antennas);

/**
 * Copies beam `index` as interleaved `re, im` pairs into `buf`
 * (`2 * antennas` doubles).
 */
enum CiaStatus cia_codebook_beam(const struct CiaCodebook *codebook,
                                 uint64_t index,
                                 double *buf,
                                 uint64_t buf_len);

/**
 * SNR degradation factor for timing offset `eps_t` and CFO `eps_f`.
 */
enum CiaStatus cia_kappa(const struct CiaScenario *scenario,
                         uint64_t eps_t,
                         double eps_f,
                         double *out_kappa);

/**
 * Detection threshold at the scenario's false-alarm target.
 */
enum CiaStatus cia_threshold(const struct CiaScenario *scenario,
                             enum CiaMode mode,
                             double noise_power,
                             double *out_eta);

/**
 * Predicted miss-detection probability.
 */
enum CiaStatus cia_predicted_pmd(const struct CiaScenario *scenario,
                                 enum CiaMode mode,
                                 double snr_db,
                                 uint64_t eps_t,
                                 double eps_f,
                                 double *out_pmd);

/**
 * CRLB of AoD and AoA for one parameter point and beam pair.
 */
enum CiaStatus cia_crlb(const struct CiaScenario *scenario,
                        const struct CiaCodebook *tx,
                        const struct CiaCodebook *rx,
                        const struct CiaLosParams *params,
                        double noise_power,
                        double *out_aod,
                        double *out_aoa);

/**
 * Synthesizes one single-path capture into `buf` as interleaved `re, im`
 * pairs (`2 * capture_len` doubles). Noise comes from the scenario seed
 * and `stream`.
 */
enum CiaStatus cia_synth_los(const struct CiaScenario *scenario,
                             const struct CiaCodebook *tx,
                             const struct CiaCodebook *rx,
                             const struct CiaLosParams *params,
                             uint64_t eps_t,
                             double noise_power,
                             uint64_t stream,
                             double *buf,
                             uint64_t buf_len);

/**
 * Detection with unknown timing followed by beam training on the same
 * capture (`samples` holds `2 * n` interleaved doubles).
 */
enum CiaStatus cia_run_algorithm1(const struct CiaScenario *scenario,
                                  const struct CiaCodebook *tx,
                                  const struct CiaCodebook *rx,
                                  const double *samples,
                                  uint64_t n,
                                  double noise_power,
                                  struct CiaTrainingResult *out_result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMPRESSIVE_IA_H */
