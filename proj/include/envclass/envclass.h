/* C interface to the envclass library: trajectory features, k-means
 * environment clustering and the logistic feature-significance fit.
 *
 * Every function returns an envc_status. On failure the message is available
 * from envc_last_error() on the same thread until the next failing call.
 * Strings returned through char** are owned by the caller and released with
 * envc_string_free(). Handles are released with their *_free function;
 * passing NULL to a free function is a no-op. */
#ifndef ENVCLASS_H
#define ENVCLASS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ENVC_BUILDING)
#    define ENVC_API __declspec(dllexport)
#  else
#    define ENVC_API __declspec(dllimport)
#  endif
#else
#  define ENVC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum envc_status {
  ENVC_OK = 0,
  ENVC_E_ARGUMENT = 1,    /* NULL handle or out-of-range argument */
  ENVC_E_PARSE = 2,       /* malformed input file */
  ENVC_E_REFERENCE = 3,   /* dangling scene or agent reference */
  ENVC_E_CONFIG = 4,      /* invalid configuration */
  ENVC_E_IO = 5,          /* file not readable / writable */
  ENVC_E_INVARIANT = 6,   /* data invariant violated */
  ENVC_E_DATA = 7,        /* not enough data for the statistic */
  ENVC_E_SEPARATION = 8,  /* logistic fit has no finite estimate */
  ENVC_E_RANK = 9,        /* singular design */
  ENVC_E_CONVERGENCE = 10,
  ENVC_E_INTERNAL = 99
} envc_status;

typedef enum envc_label { ENVC_LABEL_A = 0, ENVC_LABEL_B = 1, ENVC_LABEL_UNRESOLVED = 2 } envc_label;

typedef struct envc_config envc_config;
typedef struct envc_bundle envc_bundle;
typedef struct envc_model envc_model;

ENVC_API const char* envc_version(void);
ENVC_API const char* envc_last_error(void);
ENVC_API const char* envc_status_name(envc_status status);
ENVC_API void envc_string_free(char* s);

/* Run configuration. An empty config has the default thresholds and no inputs. */
ENVC_API envc_status envc_config_new(envc_config** out);
ENVC_API envc_status envc_config_load(const char* path, envc_config** out);
ENVC_API envc_status envc_config_parse(const char* json, const char* base_dir, envc_config** out);
ENVC_API envc_status envc_config_set_seed(envc_config* cfg, uint64_t seed);
ENVC_API envc_status envc_config_set_out(envc_config* cfg, const char* dir);
ENVC_API envc_status envc_config_set_per_dataset_iqr(envc_config* cfg, int enabled);
ENVC_API envc_status envc_config_set_model(envc_config* cfg, const char* path);
/* adapter: "normalized", "sdd" or "generic". scene_id and extra may be NULL;
 * extra is the homography file for sdd and the column map for generic. */
ENVC_API envc_status envc_config_add_input(envc_config* cfg, const char* adapter, const char* path,
                                           const char* scenes, const char* scene_id, const char* extra);
ENVC_API envc_status envc_config_add_synth(envc_config* cfg, const char* params_json);
/* Overrides the adapter of every file input (not synth inputs). */
ENVC_API envc_status envc_config_set_adapter(envc_config* cfg, const char* adapter);
ENVC_API envc_status envc_config_input_count(const envc_config* cfg, size_t* out);
ENVC_API envc_status envc_config_to_json(const envc_config* cfg, char** out);
ENVC_API void envc_config_free(envc_config* cfg);

/* Commands. Each writes its files and manifest.json into the configured output
 * directory and returns a printable summary. */
ENVC_API envc_status envc_run_features(const envc_config* cfg, char** summary);
ENVC_API envc_status envc_run_cluster(const envc_config* cfg, char** summary);
ENVC_API envc_status envc_run_glm(const envc_config* cfg, char** table);
ENVC_API envc_status envc_run_classify(const envc_config* cfg, char** report);
/* params_json may name a preset ({"preset": "road"}); count scenes with consecutive seeds. */
ENVC_API envc_status envc_run_synth(const char* params_json, size_t count, const char* out_dir, char** summary);

/* Trajectory bundles. */
ENVC_API envc_status envc_bundle_load(const envc_config* cfg, envc_bundle** out);
ENVC_API envc_status envc_bundle_generate(const char* params_json, envc_bundle** out);
ENVC_API envc_status envc_bundle_merge(envc_bundle* into, const envc_bundle* other);
ENVC_API envc_status envc_bundle_counts(const envc_bundle* b, size_t* scenes, size_t* pedestrians,
                                        size_t* vehicles, size_t* others);
ENVC_API envc_status envc_bundle_write_csv(const envc_bundle* b, const char* path);
ENVC_API void envc_bundle_free(envc_bundle* b);

/* Cluster models. Centroids are in standardized feature space, 13 values each. */
ENVC_API envc_status envc_model_fit(const envc_bundle* b, uint64_t seed, size_t restarts, envc_model** out);
ENVC_API envc_status envc_model_load(const char* path, envc_model** out);
ENVC_API envc_status envc_model_save(const envc_model* m, const char* path);
ENVC_API envc_status envc_model_centroid(const envc_model* m, envc_label cluster, double* out, size_t len);
ENVC_API envc_status envc_model_inertia(const envc_model* m, double* out);
ENVC_API envc_status envc_classify(const envc_model* m, const envc_bundle* b, envc_label* label,
                                   size_t* rows_a, size_t* rows_b);
ENVC_API void envc_model_free(envc_model* m);

ENVC_API size_t envc_feature_count(void);
ENVC_API const char* envc_feature_name(size_t index);

#ifdef __cplusplus
}
#endif

#endif
