#ifndef EVONET_H
#define EVONET_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every call.
typedef enum EvonetStatus {
  EVONET_STATUS_OK = 0,
  EVONET_STATUS_NULL_POINTER = 1,
  // Invalid parameters or configuration.
  EVONET_STATUS_INVALID_ARGUMENT = 2,
  // Solver, quadrature or fit failure.
  EVONET_STATUS_NUMERICAL = 3,
  // Simulation invariant or I/O failure.
  EVONET_STATUS_RUNTIME = 4,
  // A caller buffer is shorter than required.
  EVONET_STATUS_BUFFER_TOO_SMALL = 5,
  // The requested quantity does not exist for this object.
  EVONET_STATUS_UNAVAILABLE = 6,
  EVONET_STATUS_PANIC = 7,
} EvonetStatus;

// Solved stationary degree distribution.
typedef struct EvonetDistribution EvonetDistribution;

// Degree histogram, pooled over replicas when produced by a simulation.
typedef struct EvonetHistogram EvonetHistogram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buffer` as a
// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
// message length excluding the terminator.
//
// # Safety
// `buffer` must be null or valid for `len` writable bytes.
size_t evonet_last_error(char *buffer, size_t len);

// Library version as a static NUL-terminated string.
const char *evonet_version(void);

// Solves for kernels `F+(k) = a k + b`, `F-(k) = abar k + bbar` and the
// newborn law placing mass `probs[i]` on degree `degrees[i]`.
//
// # Safety
// `degrees` and `probs` must be valid for `len` reads; `out` must be valid
// for one write.
enum EvonetStatus evonet_solve(double a,
                               double b,
                               double abar,
                               double bbar,
                               const size_t *degrees,
                               const double *probs,
                               size_t len,
                               struct EvonetDistribution **out);

// Solves the model preset given as JSON, for example
// `{"variant": "ba-del", "m": 3, "m0": 4, "N0": 12}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for one write.
enum EvonetStatus evonet_solve_preset_json(const char *json, struct EvonetDistribution **out);

// Releases a distribution; null is ignored.
//
// # Safety
// `dist` must come from this library and not be used afterwards.
void evonet_distribution_free(struct EvonetDistribution *dist);

// Tail constant `C` with `P(k) = C g(k)` beyond the seam.
//
// # Safety
// `dist` must be a live handle; `out` must be valid for one write.
enum EvonetStatus evonet_distribution_tail_constant(const struct EvonetDistribution *dist,
                                                    double *out);

// Exponent `gamma` of a scale-free solution; `Unavailable` otherwise.
//
// # Safety
// `dist` must be a live handle; `out` must be valid for one write.
enum EvonetStatus evonet_distribution_gamma(const struct EvonetDistribution *dist, double *out);

// Asymptotic prefactor `c` in `P(k) ~ c k^-gamma`; `Unavailable` when absent.
//
// # Safety
// `dist` must be a live handle; `out` must be valid for one write.
enum EvonetStatus evonet_distribution_prefactor(const struct EvonetDistribution *dist, double *out);

// Writes `P(0..=max_degree)` into `buffer`, which needs `max_degree + 1` slots.
//
// # Safety
// `dist` must be a live handle; `buffer` must be valid for `len` writes.
enum EvonetStatus evonet_distribution_pmf(const struct EvonetDistribution *dist,
                                          size_t max_degree,
                                          double *buffer,
                                          size_t len);

// Histogram from `counts[k]` nodes of degree `k`.
//
// # Safety
// `counts` must be valid for `len` reads; `out` must be valid for one write.
enum EvonetStatus evonet_histogram_new(const uint64_t *counts,
                                       size_t len,
                                       struct EvonetHistogram **out);

// Runs the network simulation described by a JSON simulation config and
// returns the histogram at the horizon, pooled over replicas.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for one write.
enum EvonetStatus evonet_simulate_json(const char *json, struct EvonetHistogram **out);

// Releases a histogram; null is ignored.
//
// # Safety
// `hist` must come from this library and not be used afterwards.
void evonet_histogram_free(struct EvonetHistogram *hist);

// Number of degree slots of the histogram, `max degree + 1`.
//
// # Safety
// `hist` must be a live handle; `out` must be valid for one write.
enum EvonetStatus evonet_histogram_len(const struct EvonetHistogram *hist, size_t *out);

// Copies the counts into `buffer`, which needs `evonet_histogram_len` slots.
//
// # Safety
// `hist` must be a live handle; `buffer` must be valid for `len` writes.
enum EvonetStatus evonet_histogram_counts(const struct EvonetHistogram *hist,
                                          uint64_t *buffer,
                                          size_t len);

// Maximum-likelihood power-law fit over `k >= k_min`; with `k_min = 0` the
// start is chosen by minimal KS distance from degree 1.
//
// # Safety
// `hist` must be a live handle; `gamma` and `std_err` must be valid for one write each.
enum EvonetStatus evonet_fit_tail(const struct EvonetHistogram *hist,
                                  size_t k_min,
                                  double *gamma,
                                  double *std_err);

// Total variation and Kolmogorov distances between the distribution and
// the histogram over degrees `0..=max_degree`, remaining mass pooled.
//
// # Safety
// Both handles must be live; `tv` and `kolmogorov` must be valid for one write each.
enum EvonetStatus evonet_compare(const struct EvonetDistribution *dist,
                                 const struct EvonetHistogram *hist,
                                 size_t max_degree,
                                 double *tv,
                                 double *kolmogorov);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVONET_H */
