#ifndef UVAA_H
#define UVAA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UvaaStatus {
  UVAA_STATUS_OK = 0,
  UVAA_STATUS_NULL_POINTER = 1,
  UVAA_STATUS_INVALID_ARGUMENT = 2,
  UVAA_STATUS_EPISODE_DONE = 3,
  UVAA_STATUS_CHECKPOINT_MISMATCH = 4,
  UVAA_STATUS_INTERNAL = 5,
  UVAA_STATUS_PANIC = 6,
} UvaaStatus;

/*
 Opaque simulation environment.
 */
typedef struct UvaaEnv UvaaEnv;

/*
 Opaque trained policy with its recurrent state.
 */
typedef struct UvaaPolicy UvaaPolicy;

/*
 Outcome of one environment step.
 */
typedef struct UvaaStep {
  double rate_reward;
  double energy_reward;
  /*
   Achievable rate, bits/s/Hz.
   */
  double rate;
  /*
   Propulsion energy of the whole swarm in the slot, J.
   */
  double energy;
  bool valid;
  bool done;
} UvaaStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *uvaa_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *uvaa_version(void);

/*
 Create an environment from a JSON configuration (null or "" for the
 defaults) and start an episode with `seed`.

 # Safety
 `config_json` must be null or a NUL-terminated string; `out` must be a
 valid pointer.
 */
enum UvaaStatus uvaa_env_new(const char *config_json, uint64_t seed, struct UvaaEnv **out);

/*
 # Safety
 `env` must be null or a handle from [`uvaa_env_new`] not yet freed.
 */
void uvaa_env_free(struct UvaaEnv *env);

/*
 Start a new episode.

 # Safety
 `env` must be a live handle.
 */
enum UvaaStatus uvaa_env_reset(struct UvaaEnv *env, uint64_t seed);

/*
 Observation length 3N+3, or 0 for a null handle.

 # Safety
 `env` must be null or a live handle.
 */
size_t uvaa_env_observation_len(const struct UvaaEnv *env);

/*
 Action length 4N, or 0 for a null handle.

 # Safety
 `env` must be null or a live handle.
 */
size_t uvaa_env_action_len(const struct UvaaEnv *env);

/*
 # Safety
 `env` must be a live handle and `obs` must hold `len` doubles.
 */
enum UvaaStatus uvaa_env_observe(const struct UvaaEnv *env, double *obs, size_t len);

/*
 Apply a flat action `[I_1..I_N, ψ_1..ψ_N, d^h_1..d^h_N, d^v_1..d^v_N]`.

 # Safety
 `env` must be a live handle, `action` must hold `len` doubles and `out`
 must be null or valid.
 */
enum UvaaStatus uvaa_env_step(struct UvaaEnv *env,
                              const double *action,
                              size_t len,
                              struct UvaaStep *out);

/*
 Load the actor of a checkpoint for use with environments shaped like `env`.

 # Safety
 `path` must be a NUL-terminated string, `env` a live handle and `out` valid.
 */
enum UvaaStatus uvaa_policy_load(const char *path,
                                 const struct UvaaEnv *env,
                                 struct UvaaPolicy **out);

/*
 # Safety
 `policy` must be null or a handle from [`uvaa_policy_load`] not yet freed.
 */
void uvaa_policy_free(struct UvaaPolicy *policy);

/*
 Clear the recurrent state before a new episode.

 # Safety
 `policy` must be a live handle.
 */
enum UvaaStatus uvaa_policy_reset(struct UvaaPolicy *policy);

/*
 Deterministic (mean) action for one observation, mapped into the action
 bounds. Advances the recurrent state.

 # Safety
 `policy` must be a live handle; `obs` and `action` must hold
 `obs_len` and `action_len` doubles.
 */
enum UvaaStatus uvaa_policy_act(struct UvaaPolicy *policy,
                                const double *obs,
                                size_t obs_len,
                                double *action,
                                size_t action_len);

/*
 Array factor of `n` elements at `positions` (x, y, z triples, m) with
 excitation `weights`, toward (theta, phi) in radians.

 # Safety
 `positions` must hold `3n` doubles, `weights` `n`; `re` and `im` valid.
 */
enum UvaaStatus uvaa_array_factor(const double *positions,
                                  const double *weights,
                                  size_t n,
                                  double theta,
                                  double phi,
                                  double wavelength,
                                  double *re,
                                  double *im);

/*
 log2(1 + sinr), bits/s/Hz.
 */
double uvaa_achievable_rate(double sinr);

/*
 Rotary-wing propulsion power at horizontal speed `speed` (m/s) with
 the default rotor constants, W.
 */
double uvaa_propulsion_power(double speed);

/*
 Hypervolume of `n` two-objective points (maximized) against `reference`.

 # Safety
 `points` must hold `2n` doubles, `reference` 2 and `out` must be valid.
 */
enum UvaaStatus uvaa_hypervolume(const double *points,
                                 size_t n,
                                 const double *reference,
                                 double *out);

/*
 Inverted generational distance of a front against a reference front,
 both two-objective.

 # Safety
 `front` must hold `2n` doubles, `reference` `2m`, and `out` must be valid.
 */
enum UvaaStatus uvaa_igd(const double *front,
                         size_t n,
                         const double *reference,
                         size_t m,
                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UVAA_H */
