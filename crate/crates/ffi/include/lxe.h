#ifndef LXE_H
#define LXE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LxeStatus {
  LXE_STATUS_OK = 0,
  LXE_STATUS_NULL_POINTER = 1,
  LXE_STATUS_INVALID_ARGUMENT = 2,
  LXE_STATUS_SIMULATION_ERROR = 3,
  LXE_STATUS_IO_ERROR = 4,
  LXE_STATUS_CONFIG_ERROR = 5,
  LXE_STATUS_PANIC = 6,
} LxeStatus;

// Initial states. Block kinds use the block width passed alongside.
typedef enum LxeStateKind {
  LXE_STATE_KIND_GHZ_PLUS = 0,
  LXE_STATE_KIND_GHZ_MINUS = 1,
  LXE_STATE_KIND_BLOCK_PLUS = 2,
  LXE_STATE_KIND_BLOCK_MINUS = 3,
  LXE_STATE_KIND_PRODUCT_PLUS_X = 4,
} LxeStateKind;

typedef enum LxeModel {
  LXE_MODEL_ZZ_X = 0,
  LXE_MODEL_HYBRID = 1,
  LXE_MODEL_ZIZ_XX = 2,
} LxeModel;

typedef enum LxeBoundary {
  LXE_BOUNDARY_OPEN = 0,
  LXE_BOUNDARY_PERIODIC = 1,
} LxeBoundary;

typedef enum LxeScope {
  LXE_SCOPE_ALL = 0,
  LXE_SCOPE_X_ONLY = 1,
  LXE_SCOPE_Z_ONLY = 2,
} LxeScope;

// Opaque ensemble description.
typedef struct LxeEnsemble LxeEnsemble;

// Opaque stabilizer state with its own outcome stream.
typedef struct LxeState LxeState;

// Mean, Bernoulli standard error and sample count of an estimate.
typedef struct LxeResult {
  double mean;
  double std_error;
  uint64_t n_samples;
} LxeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *lxe_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *lxe_version(void);

// Creates an initial state on `n_sites` qubits. `block` is the GHZ block
// width of the block kinds and is ignored otherwise.
//
// # Safety
// `out` must be a valid pointer to writable storage.
enum LxeStatus lxe_state_new(enum LxeStateKind kind,
                             size_t n_sites,
                             size_t block,
                             uint64_t seed,
                             struct LxeState **out);

// # Safety
// `state` must come from [`lxe_state_new`] and not be used afterwards.
void lxe_state_free(struct LxeState *state);

// Number of qubits.
//
// # Safety
// Both pointers must be valid.
enum LxeStatus lxe_state_n_sites(const struct LxeState *state, size_t *out);

// Number of independent stabilizer generators.
//
// # Safety
// Both pointers must be valid.
enum LxeStatus lxe_state_rank(const struct LxeState *state, size_t *out);

// Measures a Pauli string such as `"-XZ_Y"` (`_` or `I` for identity).
// Writes `+1` or `-1` to `outcome` and whether it was random to `random`.
//
// # Safety
// `state` and the out-pointers must be valid; `pauli` must be a
// NUL-terminated string.
enum LxeStatus lxe_state_measure(struct LxeState *state,
                                 const char *pauli,
                                 int32_t *outcome,
                                 bool *random);

// Creates an ensemble with `T` steps on `L` qubits at X-measurement rate `p`.
// Other fields start at zero, open boundaries (periodic for ZIZ–XX) and a
// full-width GHZ block.
//
// # Safety
// `out` must be valid.
enum LxeStatus lxe_ensemble_new(enum LxeModel model,
                                size_t n_sites,
                                size_t n_steps,
                                double p,
                                struct LxeEnsemble **out);

// # Safety
// `ensemble` must come from [`lxe_ensemble_new`] and not be used afterwards.
void lxe_ensemble_free(struct LxeEnsemble *ensemble);

// Unitary rate of the hybrid model.
//
// # Safety
// `ensemble` must be valid.
enum LxeStatus lxe_ensemble_set_q(struct LxeEnsemble *ensemble, double q);

// XX rate of the ZIZ–XX model.
//
// # Safety
// `ensemble` must be valid.
enum LxeStatus lxe_ensemble_set_r_xx(struct LxeEnsemble *ensemble, double r_xx);

// # Safety
// `ensemble` must be valid.
enum LxeStatus lxe_ensemble_set_noise(struct LxeEnsemble *ensemble, double noise_rate);

// # Safety
// `ensemble` must be valid.
enum LxeStatus lxe_ensemble_set_boundary(struct LxeEnsemble *ensemble, enum LxeBoundary bc);

// GHZ block width of the block states; 0 restores the full width.
//
// # Safety
// `ensemble` must be valid.
enum LxeStatus lxe_ensemble_set_block_width(struct LxeEnsemble *ensemble, size_t r);

// # Safety
// `ensemble` must be valid.
enum LxeStatus lxe_ensemble_set_scramble_depth(struct LxeEnsemble *ensemble, size_t depth);

// LXE between the GHZ± pair (in the given order) over `n_circuits`
// realizations. GHZ kinds become block states of the ensemble's width.
//
// # Safety
// `ensemble` and `out` must be valid.
enum LxeStatus lxe_estimate(const struct LxeEnsemble *ensemble,
                            enum LxeStateKind rho,
                            enum LxeStateKind sigma,
                            enum LxeScope record_scope,
                            uint64_t n_circuits,
                            uint64_t records_per_circuit,
                            uint64_t master_seed,
                            struct LxeResult *out);

// Critical open-boundary LXE at aspect `T/L` and block width `r/L`.
//
// # Safety
// `out` must be valid.
enum LxeStatus lxe_cardy_chi_obc(double aspect, double r_over_l, double *out);

// Periodic prediction `amplitude · [2cosh(2π·aspect) − 2]^(−5/48)`.
//
// # Safety
// `out` must be valid.
enum LxeStatus lxe_chi_pbc(double aspect, double amplitude, double *out);

// Monte Carlo spanning probability of the equivalent bond percolation.
//
// # Safety
// `out` must be valid.
enum LxeStatus lxe_crossing_probability_mc(size_t n_sites,
                                           size_t n_steps,
                                           double p,
                                           size_t r,
                                           enum LxeBoundary bc,
                                           uint64_t n_samples,
                                           uint64_t seed,
                                           struct LxeResult *out);

// Probability that a depth-`L` symmetric scrambler leaks the GHZ sign.
//
// # Safety
// `out` must be valid.
enum LxeStatus lxe_leak_probability(size_t n_sites,
                                    uint64_t n_samples,
                                    uint64_t seed,
                                    struct LxeResult *out);

// Runs a JSON config file and writes the CSV and sidecar to `csv_path`.
//
// # Safety
// Both arguments must be NUL-terminated strings.
enum LxeStatus lxe_run_config(const char *config_path, const char *csv_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LXE_H */
