/* ddeid: reconstruction of delay differential equations from sampled data. C interface. */
#ifndef DDEID_H
#define DDEID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DDEID_BUILDING)
#    define DDEID_API __declspec(dllexport)
#  else
#    define DDEID_API __declspec(dllimport)
#  endif
#else
#  define DDEID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ddeid_status {
    DDEID_OK = 0,
    DDEID_INVALID_ARGUMENT = 1,
    DDEID_INTEGRATION_DIVERGED = 2,
    DDEID_UNKNOWN_SYSTEM = 3,
    DDEID_INSUFFICIENT_DATA = 4,
    DDEID_INVALID_GROUND_TRUTH = 5,
    DDEID_IO = 6,
    DDEID_PARSE = 7,
    DDEID_INTERNAL = 99
} ddeid_status;

typedef struct ddeid_config ddeid_config;
typedef struct ddeid_series ddeid_series;
typedef struct ddeid_result ddeid_result;
typedef struct ddeid_benchmark ddeid_benchmark;

/* Message of the last failed call on this thread; "" when none. */
DDEID_API const char* ddeid_last_error(void);
DDEID_API const char* ddeid_version(void);

/* ---- configuration ---- */

DDEID_API ddeid_status ddeid_config_new(ddeid_config** out);
/* Applies an INI file on top of the current settings. */
DDEID_API ddeid_status ddeid_config_load(ddeid_config* config, const char* path);
/* key is "section.key", e.g. "data.system", "dictionary.p2", "run.seed". */
DDEID_API ddeid_status ddeid_config_set(ddeid_config* config, const char* key, const char* value);
/* Current value of a data.* or run.* key as text ("" when unset); owned by the config. */
DDEID_API const char* ddeid_config_get(ddeid_config* config, const char* key);
DDEID_API void ddeid_config_free(ddeid_config* config);

/* ---- trajectories ---- */

/* Integrates the configured built-in system. */
DDEID_API ddeid_status ddeid_simulate(const ddeid_config* config, ddeid_series** out);
/* The configured data file if set, otherwise a simulation. */
DDEID_API ddeid_status ddeid_load_data(const ddeid_config* config, ddeid_series** out);
DDEID_API ddeid_status ddeid_series_load_csv(const char* path, ddeid_series** out);
DDEID_API ddeid_status ddeid_series_save_csv(const ddeid_series* series, const char* path);
DDEID_API size_t ddeid_series_rows(const ddeid_series* series);
DDEID_API size_t ddeid_series_cols(const ddeid_series* series);
DDEID_API double ddeid_series_t0(const ddeid_series* series);
DDEID_API double ddeid_series_dt(const ddeid_series* series);
DDEID_API ddeid_status ddeid_series_value(const ddeid_series* series, size_t row, size_t col, double* out);
DDEID_API void ddeid_series_free(ddeid_series* series);

/* ---- reconstruction ---- */

DDEID_API ddeid_status ddeid_reconstruct(const ddeid_config* config, const ddeid_series* data, ddeid_result** out);
DDEID_API size_t ddeid_result_dimensions(const ddeid_result* result);
/* Rendered equation, e.g. "dx/dt = −0.1000·x + 2.0000·y". Owned by the result; NULL on error. */
DDEID_API const char* ddeid_result_equation(const ddeid_result* result, size_t dimension);
DDEID_API ddeid_status ddeid_result_objective(const ddeid_result* result, size_t dimension, double* out);
DDEID_API ddeid_status ddeid_result_seed(const ddeid_result* result, uint64_t* out);
/* Scores against the configured system's ground truth and keeps the report in the result.
   *success is 1 or 0. */
DDEID_API ddeid_status ddeid_result_score(ddeid_result* result, const ddeid_config* config, int* success);
/* JSON document; owned by the result; NULL on error. */
DDEID_API const char* ddeid_result_json(ddeid_result* result, int record_timing);
DDEID_API ddeid_status ddeid_result_save_json(ddeid_result* result, const char* path, int record_timing);
DDEID_API ddeid_status ddeid_result_load_json(const char* path, ddeid_result** out);
DDEID_API void ddeid_result_free(ddeid_result* result);

/* Integrates the recovered model from the start of `original` for `duration` seconds
   (negative: the original's length). */
DDEID_API ddeid_status ddeid_replay(const ddeid_result* result, const ddeid_series* original, double duration,
                                    ddeid_series** out);
/* CSV with columns t, orig_x.., recon_x.. over the replayed rows. */
DDEID_API ddeid_status ddeid_replay_save_csv(const ddeid_series* original, const ddeid_series* replay,
                                             const char* path);

/* ---- benchmark ---- */

/* Called on the calling thread after each trial, in trial order. */
typedef void (*ddeid_trial_callback)(size_t trial, uint64_t seed, int scored, int success, double wall_time,
                                     void* user);

/* Runs run.trials trials with seeds run.seed + k on run.workers threads. When out_dir is not
   NULL it receives trials.csv and trial_<k>.json, written as trials finish. */
DDEID_API ddeid_status ddeid_benchmark_run(const ddeid_config* config, const ddeid_series* data, const char* out_dir,
                                           ddeid_trial_callback callback, void* user, ddeid_benchmark** out);
DDEID_API size_t ddeid_benchmark_trials(const ddeid_benchmark* bench);
DDEID_API size_t ddeid_benchmark_successes(const ddeid_benchmark* bench);
DDEID_API int ddeid_benchmark_scored(const ddeid_benchmark* bench);
DDEID_API ddeid_status ddeid_benchmark_objective(const ddeid_benchmark* bench, size_t trial, size_t dimension,
                                                 double* out);
/* 1 success, 0 failure, -1 unscored. */
DDEID_API int ddeid_benchmark_trial_success(const ddeid_benchmark* bench, size_t trial);
DDEID_API void ddeid_benchmark_free(ddeid_benchmark* bench);

#ifdef __cplusplus
}
#endif

#endif
