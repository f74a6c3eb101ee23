#pragma once

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RAIL_API __declspec(dllexport)
#else
#define RAIL_API __attribute__((visibility("default")))
#endif

typedef enum rail_status {
  RAIL_OK = 0,
  RAIL_ERR_ARGUMENT = 1,   /* null pointer or out-of-range argument */
  RAIL_ERR_CONFIG = 2,     /* invalid configuration value */
  RAIL_ERR_DOMAIN = 3,     /* shape mismatch, bad action id, ... */
  RAIL_ERR_STATE = 4,      /* operation not allowed in the current state */
  RAIL_ERR_FORMAT = 5,     /* file failed validation */
  RAIL_ERR_IO = 6,         /* file could not be read or written */
  RAIL_ERR_ENGINE = 7,     /* a rollout worker failed */
  RAIL_ERR_NUMERICAL = 8,  /* training produced a non-finite value */
  RAIL_ERR_VERIFY = 9,     /* run directory failed verification */
  RAIL_ERR_INTERNAL = 10
} rail_status;

/* Message of the last failed call on this thread ("" after success). */
RAIL_API const char* rail_last_error(void);
RAIL_API const char* rail_status_name(rail_status status);
RAIL_API const char* rail_version(void);

/* Driving statistics averaged over episodes. */
typedef struct rail_stats {
  double avg_speed;
  double lane_changes;
  double overtakes;
  double longitudinal;
  double lateral;
} rail_stats;

/* Writes the two-line stats CSV (header + row) into buf, NUL-terminated.
   Returns the full length needed, excluding the terminator. */
RAIL_API size_t rail_stats_csv(const rail_stats* stats, char* buf, size_t size);

/* ---- configuration ---------------------------------------------------- */

typedef struct rail_config rail_config;

RAIL_API rail_status rail_config_default(rail_config** out);
/* Run config or bare environment config; unknown keys are rejected. */
RAIL_API rail_status rail_config_load(const char* path, rail_config** out);
RAIL_API rail_status rail_config_parse(const char* json_text, rail_config** out);
RAIL_API void rail_config_free(rail_config* config);

RAIL_API rail_status rail_config_set_seed(rail_config* config, uint64_t seed);
RAIL_API rail_status rail_config_set_workers(rail_config* config, int workers);
RAIL_API rail_status rail_config_set_output(rail_config* config, const char* output_dir,
                                            const char* experiment);
RAIL_API rail_status rail_config_set_demos(rail_config* config, const char* path);
/* Canonical JSON of the resolved config; valid until the next call on this
   thread. */
RAIL_API const char* rail_config_json(const rail_config* config);
/* 16 hex digits + NUL. */
RAIL_API rail_status rail_config_digest(const rail_config* config, char out[17]);
RAIL_API size_t rail_config_observation_size(const rail_config* config);

/* ---- environment ------------------------------------------------------ */

typedef struct rail_env rail_env;

RAIL_API rail_status rail_env_create(const rail_config* config, rail_env** out);
RAIL_API void rail_env_free(rail_env* env);
RAIL_API size_t rail_env_observation_size(const rail_env* env);
/* obs must hold rail_env_observation_size() doubles. */
RAIL_API rail_status rail_env_reset(rail_env* env, uint64_t seed, double* obs);
/* Applies action 0..4 (maintain, accelerate, decelerate, left, right). */
RAIL_API rail_status rail_env_step(rail_env* env, int action, double* obs, double* longitudinal,
                                   double* lateral, int* terminated);
/* Action the scripted expert would take in the current state. */
RAIL_API rail_status rail_env_expert_action(const rail_env* env, int* action);
RAIL_API rail_status rail_env_host(const rail_env* env, int* lane, double* speed);

/* ---- demonstrations --------------------------------------------------- */

/* Records `episodes` collision-free expert episodes into an RDEM1 file and
   fills `summary` (may be NULL) with their average statistics. */
RAIL_API rail_status rail_generate_demonstrations(const rail_config* config, int episodes,
                                                  uint64_t seed, const char* path,
                                                  rail_stats* summary);
RAIL_API rail_status rail_demonstrations_info(const char* path, size_t* state_dim,
                                              size_t* action_count, size_t* episodes,
                                              size_t* steps);

/* ---- training --------------------------------------------------------- */

typedef void (*rail_log_fn)(const char* line, void* user);

typedef struct rail_train_options {
  const char* algo;             /* "bc" or "rail" */
  const char* init_checkpoint;  /* RAIL only; may be NULL */
  int resume;                   /* continue from the newest checkpoint */
  rail_log_fn log;              /* may be NULL */
  void* log_user;
} rail_train_options;

typedef struct rail_train_result {
  int iterations;
  char metrics_digest[17];
  char run_dir[1024];
} rail_train_result;

RAIL_API rail_status rail_train(const rail_config* config, const rail_train_options* options,
                                rail_train_result* result);

/* ---- checkpoints ------------------------------------------------------ */

typedef struct rail_checkpoint rail_checkpoint;

RAIL_API rail_status rail_checkpoint_load(const char* path, rail_checkpoint** out);
RAIL_API void rail_checkpoint_free(rail_checkpoint* checkpoint);
/* kind: 0 linear, 1 two-layer; h is 0 for linear policies. */
RAIL_API rail_status rail_checkpoint_shape(const rail_checkpoint* checkpoint, int* kind,
                                           size_t* n, size_t* h, size_t* p, size_t* layers);
RAIL_API rail_status rail_checkpoint_layer_shape(const rail_checkpoint* checkpoint, size_t layer,
                                                 size_t* rows, size_t* cols);
/* Row-major copy of a weight layer; `count` must equal rows * cols. */
RAIL_API rail_status rail_checkpoint_layer(const rail_checkpoint* checkpoint, size_t layer,
                                           double* out, size_t count);
RAIL_API rail_status rail_checkpoint_act(const rail_checkpoint* checkpoint, const double* obs,
                                         size_t n, int* action);

/* ---- evaluation ------------------------------------------------------- */

RAIL_API rail_status rail_evaluate_checkpoint(const rail_config* config,
                                              const rail_checkpoint* checkpoint, int episodes,
                                              uint64_t seed, rail_stats* out);
RAIL_API rail_status rail_evaluate_expert(const rail_config* config, int episodes, uint64_t seed,
                                          rail_stats* out);

/* ---- weight export ---------------------------------------------------- */

/* Writes layer `layer` as a CSV matrix, reshaped to rows x cols when both are
   non-zero, plus an equal-width histogram CSV when histogram_path is set. */
RAIL_API rail_status rail_export_weights(const rail_checkpoint* checkpoint, size_t layer,
                                         size_t rows, size_t cols, const char* matrix_path,
                                         const char* histogram_path);

/* ---- verification ----------------------------------------------------- */

typedef void (*rail_problem_fn)(const char* problem, void* user);

/* RAIL_OK when every digest and cross-reference holds; RAIL_ERR_VERIFY
   otherwise, with each problem reported through `on_problem`. */
RAIL_API rail_status rail_verify_run(const char* run_dir, rail_problem_fn on_problem, void* user,
                                     int* artifacts_checked);

#ifdef __cplusplus
}
#endif
