#ifndef TRITREE_H
#define TRITREE_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TT_STRATEGY_MAJORITY 0

#define TT_STRATEGY_MIA 1

#define TT_STRATEGY_FC 2

#define TT_STRATEGY_TRINARY 3

#define TT_STRATEGY_TRINARY_MIA 4

#define TT_TASK_REGRESSION 0

#define TT_TASK_CLASSIFICATION 1

// Result code of every fallible call.
typedef enum TtStatus {
  TT_STATUS_OK = 0,
  TT_STATUS_NULL_POINTER = 1,
  TT_STATUS_INVALID_ARGUMENT = 2,
  TT_STATUS_IO = 3,
  TT_STATUS_PARSE = 4,
  TT_STATUS_SCHEMA = 5,
  TT_STATUS_VALIDATION = 6,
  TT_STATUS_CONFIG = 7,
  TT_STATUS_TREE_FORMAT = 8,
  TT_STATUS_BUFFER_SIZE = 9,
  TT_STATUS_PANIC = 10,
} TtStatus;

// A loaded dataset.
typedef struct TtDataset TtDataset;

// A trained decision tree.
typedef struct TtTree TtTree;

typedef struct TtBiasScenario {
  double a;
  double b;
  double p;
  double q;
  double sigma;
  size_t n;
  size_t reps;
  uint64_t seed;
} TtBiasScenario;

typedef struct TtBiasResult {
  double mean_a_hat;
  double se;
  // NaN for strategies without a routing rule.
  double kappa_hat;
  double bound;
  size_t used_reps;
  size_t skipped_reps;
} TtBiasResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *tt_last_error(void);

// Loads a CSV file. `categorical` is a comma-separated list of column
// names, or NULL.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum TtStatus tt_dataset_load_csv(const char *path,
                                  const char *target,
                                  uint32_t task,
                                  const char *categorical,
                                  struct TtDataset **out);

// Loads a CSV file typed by a TOML schema file.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum TtStatus tt_dataset_load_with_schema(const char *path,
                                          const char *schema_path,
                                          struct TtDataset **out);

// # Safety
// `ds` must be a live dataset handle or NULL.
size_t tt_dataset_n_rows(const struct TtDataset *ds);

// # Safety
// `ds` must be a live dataset handle or NULL.
size_t tt_dataset_n_features(const struct TtDataset *ds);

// Copy of `ds` with feature cells censored completely at random
// (`informative == 0`) or largest-first (`informative != 0`).
//
// # Safety
// `ds` must be a live dataset handle; `out` must be writable.
enum TtStatus tt_dataset_censor(const struct TtDataset *ds,
                                double q,
                                int32_t informative,
                                uint64_t seed,
                                struct TtDataset **out);

// # Safety
// `ds` must come from this library and not be used afterwards.
void tt_dataset_free(struct TtDataset *ds);

// Trains on every row of `ds`.
//
// # Safety
// `ds` must be a live dataset handle; `out` must be writable.
enum TtStatus tt_tree_train(const struct TtDataset *ds,
                            uint32_t strategy,
                            size_t max_depth,
                            size_t min_samples,
                            struct TtTree **out);

// Number of classes, or 0 for a regression tree.
//
// # Safety
// `tree` must be a live tree handle or NULL.
size_t tt_tree_n_classes(const struct TtTree *tree);

// Writes one point prediction per row into `out`: the mean for regression,
// the class index for classification. `len` must equal the row count.
//
// # Safety
// Handles must be live; `out` must hold `len` doubles.
enum TtStatus tt_tree_predict(const struct TtTree *tree,
                              const struct TtDataset *ds,
                              double *out,
                              size_t len);

// Writes row-major class probabilities; `len` must equal rows × classes.
//
// # Safety
// Handles must be live; `out` must hold `len` doubles.
enum TtStatus tt_tree_predict_proba(const struct TtTree *tree,
                                    const struct TtDataset *ds,
                                    double *out,
                                    size_t len);

// Total loss of the tree on `ds`: squared error or cross-entropy.
//
// # Safety
// Handles must be live; `loss` must be writable.
enum TtStatus tt_tree_evaluate(const struct TtTree *tree, const struct TtDataset *ds, double *loss);

// Serializes the tree to a JSON document.
//
// # Safety
// `tree` must be live; `out` must be writable.
enum TtStatus tt_tree_to_json(const struct TtTree *tree, char **out);

// # Safety
// `json` must be NUL-terminated; `out` must be writable.
enum TtStatus tt_tree_from_json(const char *json, struct TtTree **out);

// Human-readable rendering of the tree.
//
// # Safety
// `tree` must be live; `out` must be writable.
enum TtStatus tt_tree_render(const struct TtTree *tree, char **out);

// # Safety
// `tree` must come from this library and not be used afterwards.
void tt_tree_free(struct TtTree *tree);

// # Safety
// `s` must be a string returned by this library, or NULL.
void tt_string_free(char *s);

// Monte-Carlo estimate of the left-leaf bias for one strategy (not
// TrinaryMIA).
//
// # Safety
// `scenario` must be readable and `out` writable.
enum TtStatus tt_bias_simulate(const struct TtBiasScenario *scenario,
                               uint32_t strategy,
                               struct TtBiasResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRITREE_H */
