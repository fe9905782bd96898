#ifndef SSFM_H
#define SSFM_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

enum SsfmStatus {
  SSFM_STATUS_OK = 0,
  SSFM_STATUS_NULL_POINTER = 1,
  SSFM_STATUS_INVALID_PARAMETER = 2,
  SSFM_STATUS_SIZE_MISMATCH = 3,
  SSFM_STATUS_OUT_OF_RANGE = 4,
  // Linear stability or a frequency definition fails for the given parameters.
  SSFM_STATUS_UNSTABLE = 5,
  // The trajectory left the finite numbers.
  SSFM_STATUS_BLOW_UP = 6,
  SSFM_STATUS_INTERNAL = 7,
};

enum SsfmScheme {
  SSFM_SCHEME_LIE_TROTTER = 0,
  SSFM_SCHEME_STRANG_LINEAR_OUTSIDE = 1,
  SSFM_SCHEME_STRANG_NONLINEAR_OUTSIDE = 2,
};

// Opaque table of numerical frequencies.
struct SsfmFrequencyTable;

// Opaque split-step integrator state.
struct SsfmSimulation;

struct SsfmLinearReport {
  bool holds;
  double c1;
  // Grid-order index of the mode with the smallest margin.
  uintptr_t worst_index;
};

struct SsfmResonanceParams {
  uint32_t n;
  double c2;
  double delta2;
  // `s2 = s2_value * N` when set, `s2 = s2_value` otherwise.
  bool s2_per_n;
  double s2_value;
  double eps_hat;
  bool exhaustive;
};

struct SsfmResonanceReport {
  bool holds;
  // False when some frequency needed by the check is undefined.
  bool available;
  bool part_a_holds;
  bool part_b_holds;
  bool part_c_holds;
  uintptr_t classes;
  uintptr_t cells;
  uint64_t vectors_checked;
  uint64_t near_resonances;
  uint64_t cell_vectors_checked;
  // `max |varpi_j - omega_j|`, NaN when not computed.
  double frequency_deviation;
};

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error of this thread into `buf` (NUL-terminated, truncated to
// `len`). Returns the full message length without the terminator.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
uintptr_t ssfm_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *ssfm_version(void);

// Writes the `d` components of the mode at grid-order position `index`.
//
// # Safety
// `mode` must be valid for `d` writes.
enum SsfmStatus ssfm_grid_mode(uintptr_t k, uintptr_t d, uintptr_t index, int64_t *mode);

// Largest step size allowed by the CFL restriction `d h K^2 + 2 h rho0^2 <= pi / (N + 1)`.
//
// # Safety
// `out` must be valid for one write.
enum SsfmStatus ssfm_cfl_max_h(uintptr_t d, uintptr_t k, double rho0, uint32_t n, double *out);

// Linear stability check of the plane wave with wave vector `ell` (length `d`).
//
// # Safety
// `ell` must be valid for `d` reads and `out` for one write.
enum SsfmStatus ssfm_check_assumption1(double h,
                                       double rho,
                                       double lambda,
                                       const int64_t *ell,
                                       uintptr_t d,
                                       uintptr_t k,
                                       struct SsfmLinearReport *out);

// Builds the frequency table. Free it with [`ssfm_frequency_table_free`].
//
// # Safety
// `ell` must be valid for `d` reads and `out` for one write.
enum SsfmStatus ssfm_frequency_table_new(double h,
                                         double rho,
                                         double lambda,
                                         const int64_t *ell,
                                         uintptr_t d,
                                         uintptr_t k,
                                         struct SsfmFrequencyTable **out);

// # Safety
// `table` must come from [`ssfm_frequency_table_new`] and not be used afterwards.
void ssfm_frequency_table_free(struct SsfmFrequencyTable *table);

// Number of nonzero modes in the table.
//
// # Safety
// `table` must be a live handle and `out` valid for one write.
enum SsfmStatus ssfm_frequency_table_len(const struct SsfmFrequencyTable *table, uintptr_t *out);

// Frequency `omega_j` of the `i`-th nonzero mode, with its components in `mode`.
//
// # Safety
// `table` must be a live handle, `mode` valid for `d` writes, `omega` for one.
enum SsfmStatus ssfm_frequency_table_entry(const struct SsfmFrequencyTable *table,
                                           uintptr_t i,
                                           int64_t *mode,
                                           double *omega);

// Largest per-step amplification over all modes; 1 when linearly stable.
//
// # Safety
// `table` must be a live handle and `out` valid for one write.
enum SsfmStatus ssfm_frequency_table_max_growth(const struct SsfmFrequencyTable *table,
                                                double *out);

// Non-resonance check on a frequency table.
//
// # Safety
// `table` must be a live handle, `params` valid for reading, `out` for one write.
enum SsfmStatus ssfm_check_assumption2(const struct SsfmFrequencyTable *table,
                                       const struct SsfmResonanceParams *params,
                                       struct SsfmResonanceReport *out);

// Starts a simulation from `len = 2 (2K)^d` interleaved coefficients.
//
// # Safety
// `coeffs` must be valid for `len` reads and `out` for one write.
enum SsfmStatus ssfm_simulation_new(uintptr_t k,
                                    uintptr_t d,
                                    const double *coeffs,
                                    uintptr_t len,
                                    double h,
                                    double lambda,
                                    enum SsfmScheme scheme,
                                    struct SsfmSimulation **out);

// Starts a simulation from the plane wave `rho e^{i ell.x}`.
//
// # Safety
// `ell` must be valid for `d` reads and `out` for one write.
enum SsfmStatus ssfm_simulation_new_plane_wave(uintptr_t k,
                                               uintptr_t d,
                                               double rho,
                                               const int64_t *ell,
                                               double h,
                                               double lambda,
                                               enum SsfmScheme scheme,
                                               struct SsfmSimulation **out);

// # Safety
// `sim` must come from a constructor and not be used afterwards.
void ssfm_simulation_free(struct SsfmSimulation *sim);

// Advances by `steps` steps. Returns `BLOW_UP` if the field is no longer finite.
//
// # Safety
// `sim` must be a live handle.
enum SsfmStatus ssfm_simulation_advance(struct SsfmSimulation *sim, uintptr_t steps);

// # Safety
// `sim` must be a live handle and `out` valid for one write.
enum SsfmStatus ssfm_simulation_steps(const struct SsfmSimulation *sim, uintptr_t *out);

// Current time `steps * h`.
//
// # Safety
// `sim` must be a live handle and `out` valid for one write.
enum SsfmStatus ssfm_simulation_time(const struct SsfmSimulation *sim, double *out);

// Mass `||u||_0^2`.
//
// # Safety
// `sim` must be a live handle and `out` valid for one write.
enum SsfmStatus ssfm_simulation_mass(const struct SsfmSimulation *sim, double *out);

// Copies the current coefficients as interleaved pairs; `len` must be `2 (2K)^d`.
//
// # Safety
// `sim` must be a live handle and `out` valid for `len` writes.
enum SsfmStatus ssfm_simulation_coefficients(const struct SsfmSimulation *sim,
                                             double *out,
                                             uintptr_t len);

// `H^s` distance of the current field to the orbit of plane waves with wave vector `ell`.
//
// # Safety
// `sim` must be a live handle, `ell` valid for `d` reads, `out` for one write.
enum SsfmStatus ssfm_simulation_orbital_distance(const struct SsfmSimulation *sim,
                                                 const int64_t *ell,
                                                 double s,
                                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSFM_H */
