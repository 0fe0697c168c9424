#ifndef RQF_H
#define RQF_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RqfStatus {
  RQF_STATUS_OK = 0,
  RQF_STATUS_NULL_POINTER = 1,
  RQF_STATUS_INVALID_INPUT = 2,
  RQF_STATUS_NUMERICAL = 3,
  RQF_STATUS_RESOURCE_CAP = 4,
  RQF_STATUS_DIMENSION_MISMATCH = 5,
  RQF_STATUS_BUFFER_TOO_SMALL = 6,
  RQF_STATUS_IO = 7,
  RQF_STATUS_PANIC = 8,
} RqfStatus;

// Drift model of the inner-product diffusion.
typedef enum RqfZModel {
  RQF_Z_MODEL_OUTWARD = 0,
  RQF_Z_MODEL_COUPLED = 1,
} RqfZModel;

typedef struct RqfEnsemble RqfEnsemble;

typedef struct RqfNoisePath RqfNoisePath;

typedef struct RqfTrajectory RqfTrajectory;

typedef struct RqfLyapunov {
  double lambda;
  double std_error;
  double t_total;
} RqfLyapunov;

// Cluster structure of a pushed-forward grid. Entries past `k` are zero;
// `pole_inner_product` is NaN unless `k == 2`.
typedef struct RqfClusterSummary {
  uint8_t k;
  double masses[2];
  double diameters[2];
  double pole_inner_product;
  double max_pole_distance;
} RqfClusterSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next call into the library on the same thread.
const char *rqf_last_error(void);

// Library version as a static NUL-terminated string.
const char *rqf_version(void);

// Stores `steps` matrix increments (and vector increments if `with_vector`).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum RqfStatus rqf_noise_path_new(uint64_t seed,
                                  uint64_t replicate,
                                  size_t n,
                                  double dt,
                                  size_t steps,
                                  bool with_vector,
                                  struct RqfNoisePath **out);

// # Safety
// `path` must be NULL or a handle from [`rqf_noise_path_new`] not yet freed.
void rqf_noise_path_free(struct RqfNoisePath *path);

// # Safety
// `path` must be a live handle and `out` writable.
enum RqfStatus rqf_noise_path_steps(const struct RqfNoisePath *path, size_t *out);

// Copies the raw `n × n` row-major Brownian increment of step `k` into `out`;
// the flow is driven by its symmetric part.
//
// # Safety
// `path` must be a live handle and `out` must hold `len` doubles.
enum RqfStatus rqf_noise_path_matrix(const struct RqfNoisePath *path,
                                     size_t k,
                                     double *out,
                                     size_t len);

// One trajectory of the flow from `x0`, recorded at every step.
//
// # Safety
// `x0` must point to `n` doubles and `out` to storage for one handle.
enum RqfStatus rqf_simulate(const double *x0,
                            size_t n,
                            double t_end,
                            double dt,
                            uint64_t seed,
                            uint64_t replicate,
                            struct RqfTrajectory **out);

// # Safety
// `traj` must be NULL or a handle from [`rqf_simulate`] not yet freed.
void rqf_trajectory_free(struct RqfTrajectory *traj);

// Number of recorded states, `steps + 1`.
//
// # Safety
// `traj` must be a live handle and `out` writable.
enum RqfStatus rqf_trajectory_len(const struct RqfTrajectory *traj, size_t *out);

// Time and coordinates of recorded state `k`.
//
// # Safety
// `traj` must be a live handle, `t` writable and `x` must hold `len` doubles.
enum RqfStatus rqf_trajectory_state(const struct RqfTrajectory *traj,
                                    size_t k,
                                    double *t,
                                    double *x,
                                    size_t len);

// Several members driven by one realization. `initials` is `members × n`
// row-major.
//
// # Safety
// `initials` must point to `members * n` doubles and `out` to storage for one handle.
enum RqfStatus rqf_simulate_coupled(const double *initials,
                                    size_t members,
                                    size_t n,
                                    double t_end,
                                    double dt,
                                    uint64_t seed,
                                    uint64_t replicate,
                                    struct RqfEnsemble **out);

// # Safety
// `ens` must be NULL or a handle from [`rqf_simulate_coupled`] not yet freed.
void rqf_ensemble_free(struct RqfEnsemble *ens);

// Member count and number of recorded states per member.
//
// # Safety
// `ens` must be a live handle; `members` and `len` writable.
enum RqfStatus rqf_ensemble_shape(const struct RqfEnsemble *ens, size_t *members, size_t *len);

// Coordinates of `member` at recorded state `k`.
//
// # Safety
// `ens` must be a live handle and `x` must hold `len` doubles.
enum RqfStatus rqf_ensemble_state(const struct RqfEnsemble *ens,
                                  size_t member,
                                  size_t k,
                                  double *x,
                                  size_t len);

// Geodesic synchronization distance between two points of `S^{n−1}`.
//
// # Safety
// `x` and `y` must point to `n` doubles; `out` writable.
enum RqfStatus rqf_sync_metric(const double *x, const double *y, size_t n, double *out);

// Probability that the inner-product diffusion started at `z0` reaches `+1` first.
//
// # Safety
// `out` must be writable.
enum RqfStatus rqf_hit_up_probability(enum RqfZModel model, double z0, double *out);

// Evolves cell masses on `[−1, 1]` in place with the finite-volume scheme.
//
// # Safety
// `masses` must point to `cells` writable doubles.
enum RqfStatus rqf_fokker_planck(enum RqfZModel model,
                                 double *masses,
                                 size_t cells,
                                 double t_end,
                                 double dt_pde);

// Largest stable `dt_pde` for the given grid.
//
// # Safety
// `out` must be writable.
enum RqfStatus rqf_fokker_planck_max_dt(enum RqfZModel model, size_t cells, double *out);

// Top Lyapunov exponent of the flow on `S^{n−1}` under one realization.
//
// # Safety
// `out` must be writable.
enum RqfStatus rqf_lyapunov(size_t n,
                            double t_end,
                            double dt,
                            double renorm_interval,
                            uint64_t seed,
                            struct RqfLyapunov *out);

// Pushes `count` grid points forward for time `T` under one realization and
// summarizes the clusters.
//
// # Safety
// `grid` must point to `count * n` doubles and `out` must be writable.
enum RqfStatus rqf_pullback(const double *grid,
                            size_t count,
                            size_t n,
                            double t_end,
                            double dt,
                            uint64_t seed,
                            double diameter_tol,
                            struct RqfClusterSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RQF_H */
