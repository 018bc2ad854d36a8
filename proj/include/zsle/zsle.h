/* C interface to the zero-shot-learning engine.
 *
 * All entry points return a zsle_status; on failure zsle_last_error() holds
 * a thread-local message describing what went wrong. Strings returned through
 * out-parameters are heap-allocated and must be released with zsle_free().
 * Configs are JSON objects; see the README for the key set.
 */
#ifndef ZSLE_H
#define ZSLE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ZSLE_API __declspec(dllexport)
#else
#define ZSLE_API __attribute__((visibility("default")))
#endif

typedef enum zsle_status {
  ZSLE_OK = 0,
  ZSLE_ERR_CHECK = 1,    /* a verification ran and failed (e.g. gradient check) */
  ZSLE_ERR_CONFIG = 2,   /* bad config, bad arguments, or invalid input data */
  ZSLE_ERR_IO = 3,       /* file missing, unreadable, unwritable, or malformed */
  ZSLE_ERR_INTERNAL = 4  /* unexpected failure */
} zsle_status;

typedef struct zsle_session zsle_session;

/* Receives one JSON object per training epoch. */
typedef void (*zsle_log_fn)(const char* json_line, void* user);

ZSLE_API const char* zsle_version(void);

/* Message for the most recent failure on this thread; never NULL. */
ZSLE_API const char* zsle_last_error(void);

/* Releases a string returned through any out-parameter. NULL is a no-op. */
ZSLE_API void zsle_free(char* ptr);

/* config_json mirrors the CLI flags (paths, hyperparameters). The session
 * holds the parsed config; data files are read by the operations below. */
ZSLE_API zsle_status zsle_session_create(const char* config_json, zsle_session** out_session);
ZSLE_API void zsle_session_destroy(zsle_session* session);

/* Trains on the configured dataset, writing the configured checkpoint.
 * log may be NULL. */
ZSLE_API zsle_status zsle_train(zsle_session* session, zsle_log_fn log, void* user);

/* Evaluates the configured checkpoint; *out_report_json receives the report. */
ZSLE_API zsle_status zsle_evaluate(zsle_session* session, char** out_report_json);

/* Retrains one model per variant and evaluates each. plan is a comma-
 * separated variant list, or NULL/empty for the default eight-variant plan.
 * *out_table_csv receives a CSV table. */
ZSLE_API zsle_status zsle_ablate(zsle_session* session, const char* plan, char** out_table_csv);

/* Sweeps "beta" or "gamma" over grid (comma-separated values, or NULL/empty
 * for the default grid) using the configured checkpoint. */
ZSLE_API zsle_status zsle_sweep(zsle_session* session, const char* axis, const char* grid,
                                char** out_table_csv);

/* Generates a synthetic dataset. spec_json keys: out_dir (required), seen,
 * unseen, samples_per_class, attributes, regions, dim, sigma, seed.
 * *out_files_json receives {"files": [paths...]}. */
ZSLE_API zsle_status zsle_synth(const char* spec_json, char** out_files_json);

/* Compares analytic gradients of the training loss against central finite
 * differences on a toy instance. config_json keys: regions, dim, attributes,
 * seen_classes, lambda, step, tolerance, seed, attention_axis, corrupt_group.
 * *out_report_json receives the per-group table; it is populated on
 * ZSLE_ERR_CHECK as well so callers can show which group failed. */
ZSLE_API zsle_status zsle_gradcheck(const char* config_json, char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif
