#ifndef ANACP_H
#define ANACP_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  ANACP_STATUS_OK = 0,
  ANACP_STATUS_NULL_POINTER = 1,
  ANACP_STATUS_INVALID_ARGUMENT = 2,
  ANACP_STATUS_IO = 3,
  ANACP_STATUS_FORMAT = 4,
  ANACP_STATUS_DIMENSION_MISMATCH = 5,
  ANACP_STATUS_NUMERICAL = 6,
  ANACP_STATUS_NOT_FITTED = 7,
  ANACP_STATUS_PANIC = 8,
} AnacpStatus;

typedef enum {
  ANACP_METHOD_ANACP = 0,
  ANACP_METHOD_RAW_NCM = 1,
  ANACP_METHOD_INCREMENTAL_RIDGE = 2,
  ANACP_METHOD_RP_RIDGE = 3,
} AnacpMethod;

typedef enum {
  ANACP_CLASSIFIER_NCM = 0,
  ANACP_CLASSIFIER_ELM = 1,
} AnacpClassifier;

/**
 * Labelled feature matrix.
 */
typedef struct AnacpDataset AnacpDataset;

/**
 * Incremental learner.
 */
typedef struct AnacpLearner AnacpLearner;

/**
 * Learner settings. Fill with [`anacp_config_default`] and override.
 */
typedef struct {
  AnacpMethod method;
  AnacpClassifier classifier;
  size_t rp_dim;
  size_t heads;
  size_t replay;
  double lambda_cp;
  double lambda_cls;
  double alpha;
  double eps_scale;
  uint64_t base_seed;
  bool use_repulsion;
  bool normalize_inputs;
} AnacpConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *anacp_last_error(void);

/**
 * Writes the default configuration to `out`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
AnacpStatus anacp_config_default(AnacpConfig *out);

/**
 * Loads a single `.feat` file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be valid for writes.
 */
AnacpStatus anacp_dataset_load(const char *path, AnacpDataset **out);

/**
 * Loads split `split` (`"train"` or `"test"`) of a feature directory,
 * verifying the manifest checksum.
 *
 * # Safety
 * `dir` and `split` must be nul-terminated strings; `out` must be valid
 * for writes.
 */
AnacpStatus anacp_dataset_load_split(const char *dir, const char *split, AnacpDataset **out);

/**
 * Copies `rows × dim` row-major features and `rows` labels into a new
 * dataset. Labels must be below `num_classes`.
 *
 * # Safety
 * `features` must point to `rows * dim` floats, `labels` to `rows`
 * integers; `out` must be valid for writes.
 */
AnacpStatus anacp_dataset_from_raw(const float *features,
                                   const uint32_t *labels,
                                   size_t rows,
                                   size_t dim,
                                   uint32_t num_classes,
                                   AnacpDataset **out);

/**
 * Writes sample count, dimension and class count; any output may be null.
 *
 * # Safety
 * `dataset` must come from an `anacp_dataset_*` constructor.
 */
AnacpStatus anacp_dataset_shape(const AnacpDataset *dataset,
                                size_t *rows,
                                size_t *dim,
                                uint32_t *num_classes);

/**
 * Rows of `dataset` whose label is one of `classes`.
 *
 * # Safety
 * `classes` must point to `count` integers; `out` must be valid for writes.
 */
AnacpStatus anacp_dataset_select_classes(const AnacpDataset *dataset,
                                         const uint32_t *classes,
                                         size_t count,
                                         AnacpDataset **out);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void anacp_dataset_free(AnacpDataset *dataset);

/**
 * # Safety
 * `config` must point to a valid configuration; `out` must be valid for
 * writes.
 */
AnacpStatus anacp_learner_new(const AnacpConfig *config, size_t dim, AnacpLearner **out);

/**
 * Learns one task made of every class present in `train`. On failure the
 * learner is unchanged.
 *
 * # Safety
 * Both handles must be live.
 */
AnacpStatus anacp_learner_learn_task(AnacpLearner *learner, const AnacpDataset *train);

/**
 * Number of tasks learned so far.
 *
 * # Safety
 * `learner` must be live; `out` must be valid for writes.
 */
AnacpStatus anacp_learner_num_tasks(const AnacpLearner *learner, size_t *out);

/**
 * Predicts a class for every row of `data`. `task < 0` predicts among all
 * seen classes; otherwise among the classes of that task.
 *
 * # Safety
 * Handles must be live; `out_labels` must hold `capacity` integers, at
 * least the number of rows of `data`.
 */
AnacpStatus anacp_learner_predict(const AnacpLearner *learner,
                                  const AnacpDataset *data,
                                  int64_t task,
                                  uint32_t *out_labels,
                                  size_t capacity);

/**
 * # Safety
 * `learner` must be live; `path` must be a nul-terminated string.
 */
AnacpStatus anacp_learner_save(const AnacpLearner *learner, const char *path);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be valid for writes.
 */
AnacpStatus anacp_learner_load(const char *path, AnacpLearner **out);

/**
 * # Safety
 * `learner` must be null or a handle not yet freed.
 */
void anacp_learner_free(AnacpLearner *learner);

/**
 * Relative error reduction of `improved` over `baseline`, both in percent.
 *
 * # Safety
 * `out` must be valid for writes.
 */
AnacpStatus anacp_rel_error_reduction(double baseline, double improved, double *out);

/**
 * Splits the classes of `train`/`test` into `num_tasks` tasks (shuffled
 * with `stream_seed`), runs the learner over them and returns the report
 * as a JSON string to be released with [`anacp_string_free`].
 *
 * # Safety
 * Handles must be live; `out_json` must be valid for writes.
 */
AnacpStatus anacp_run_stream(const AnacpConfig *config,
                             const AnacpDataset *train,
                             const AnacpDataset *test,
                             size_t num_tasks,
                             uint64_t stream_seed,
                             char **out_json);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void anacp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANACP_H */
