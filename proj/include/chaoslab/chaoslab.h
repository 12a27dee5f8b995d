/* C interface to the chaoslab simulation library. */
#ifndef CHAOSLAB_H
#define CHAOSLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define CHAOSLAB_API __attribute__((visibility("default")))
#else
#define CHAOSLAB_API
#endif

typedef enum {
  CHAOSLAB_OK = 0,
  CHAOSLAB_CONFIG_ERROR = 1,   /* invalid configuration or input */
  CHAOSLAB_RUNTIME_ERROR = 2,  /* simulation or I/O failure */
  CHAOSLAB_INVALID_ARGUMENT = 3
} chaoslab_status;

typedef struct chaoslab_config chaoslab_config;
typedef struct chaoslab_model chaoslab_model;

CHAOSLAB_API const char* chaoslab_version(void);

/* Message of the last failed call on this thread, "" if none. */
CHAOSLAB_API const char* chaoslab_last_error(void);

/* Parses a JSON configuration. On failure *out is NULL. */
CHAOSLAB_API chaoslab_status chaoslab_config_from_json(const char* json, chaoslab_config** out);
CHAOSLAB_API chaoslab_status chaoslab_config_load(const char* path, chaoslab_config** out);
CHAOSLAB_API void chaoslab_config_free(chaoslab_config* config);

/* Overrides applied after parsing; they take precedence over the file. */
CHAOSLAB_API chaoslab_status chaoslab_config_set_seed(chaoslab_config* config, uint64_t seed);
CHAOSLAB_API chaoslab_status chaoslab_config_set_reps(chaoslab_config* config, uint64_t reps);
CHAOSLAB_API chaoslab_status chaoslab_config_set_out(chaoslab_config* config, const char* dir);
/* threads <= 0 selects one worker per hardware thread. */
CHAOSLAB_API chaoslab_status chaoslab_config_set_threads(chaoslab_config* config, int threads);
CHAOSLAB_API chaoslab_status chaoslab_config_set_tmax(chaoslab_config* config, double tmax);

/* Resolved configuration as JSON (without threads and out). The string is
   owned by the handle and valid until the next call on it. */
CHAOSLAB_API const char* chaoslab_config_to_json(chaoslab_config* config);

/* Runs "sample", "evolve", "diagnose" or "scan", writing into the output
   directory. Diagnose and scan fail with CHAOSLAB_RUNTIME_ERROR only when
   every diagnostic failed. */
CHAOSLAB_API chaoslab_status chaoslab_run(const chaoslab_config* config, const char* command);

/* Renders SVG plots of a diagnose or scan JSON report. */
CHAOSLAB_API chaoslab_status chaoslab_plot(const char* report_path, const char* out_dir);

/* Model evaluation on explicit coordinates (row-major, n points of the
   configured dimension). */
CHAOSLAB_API chaoslab_status chaoslab_model_create(const chaoslab_config* config, chaoslab_model** out);
CHAOSLAB_API void chaoslab_model_free(chaoslab_model* model);
CHAOSLAB_API int chaoslab_model_dimension(const chaoslab_model* model);
CHAOSLAB_API chaoslab_status chaoslab_model_evaluate(const chaoslab_model* model, const double* coords, size_t n,
                                                     double* value);
/* D_x F(mu) at the m locations xs. */
CHAOSLAB_API chaoslab_status chaoslab_model_add_one_costs(const chaoslab_model* model, const double* coords,
                                                          size_t n, const double* xs, size_t m, double* costs);
/* D^-_x F(mu) at each of the n points. */
CHAOSLAB_API chaoslab_status chaoslab_model_remove_one_costs(const chaoslab_model* model, const double* coords,
                                                             size_t n, double* costs);

#ifdef __cplusplus
}
#endif

#endif /* CHAOSLAB_H */
