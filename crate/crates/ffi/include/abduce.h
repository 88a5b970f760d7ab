#ifndef ABDUCE_H
#define ABDUCE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AbduceAuditStatus {
  /**
   * The candidate admits a counterexample.
   */
  ABDUCE_AUDIT_STATUS_OPTIMISTIC = 0,
  /**
   * The candidate entails the prediction but is not subset-minimal.
   */
  ABDUCE_AUDIT_STATUS_PESSIMISTIC = 1,
  /**
   * The candidate is a subset-minimal explanation.
   */
  ABDUCE_AUDIT_STATUS_REALISTIC = 2,
} AbduceAuditStatus;

typedef enum AbduceMinimality {
  ABDUCE_MINIMALITY_SUBSET = 0,
  ABDUCE_MINIMALITY_CARDINALITY = 1,
} AbduceMinimality;

/**
 * Result code of every fallible call.
 */
typedef enum AbduceStatus {
  ABDUCE_STATUS_OK = 0,
  ABDUCE_STATUS_NULL_ARGUMENT = 1,
  ABDUCE_STATUS_INVALID_UTF8 = 2,
  ABDUCE_STATUS_IO = 3,
  ABDUCE_STATUS_PARSE = 4,
  ABDUCE_STATUS_INVALID_ARGUMENT = 5,
  ABDUCE_STATUS_WRONG_PREDICTION = 6,
  ABDUCE_STATUS_NOT_ENTAILING = 7,
  ABDUCE_STATUS_INDETERMINATE = 8,
  ABDUCE_STATUS_INTERNAL = 9,
  ABDUCE_STATUS_PANIC = 10,
} AbduceStatus;

/**
 * A parsed ensemble with its feature space and query budget.
 */
typedef struct AbduceModel AbduceModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *abduce_last_error(void);

/**
 * Parses a model and feature map held in memory.
 *
 * # Safety
 * The buffers must be readable for the given lengths and `out` writable.
 */
enum AbduceStatus abduce_model_from_bytes(const uint8_t *model,
                                          size_t model_len,
                                          const uint8_t *feature_map,
                                          size_t feature_map_len,
                                          struct AbduceModel **out);

/**
 * Reads and parses a model and feature map from disk.
 *
 * # Safety
 * The paths must be NUL-terminated strings and `out` writable.
 */
enum AbduceStatus abduce_model_load(const char *model_path,
                                    const char *feature_map_path,
                                    struct AbduceModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from a loader of this library and not be used again.
 */
void abduce_model_free(struct AbduceModel *model);

/**
 * Number of features, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t abduce_model_num_features(const struct AbduceModel *model);

/**
 * Number of classes, or 0 for a null model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t abduce_model_num_classes(const struct AbduceModel *model);

/**
 * Name of a feature, owned by the model; null when out of range.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *abduce_model_feature_name(const struct AbduceModel *model, size_t feature);

/**
 * Name of a class, owned by the model; null when out of range.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *abduce_model_class_name(const struct AbduceModel *model, size_t class_);

/**
 * Sets the per-query budget. A zero `time_limit_seconds` disables the
 * time limit.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum AbduceStatus abduce_model_set_budget(struct AbduceModel *model,
                                          uint64_t node_limit,
                                          double time_limit_seconds);

/**
 * Predicted class of a total instance.
 *
 * # Safety
 * `values` must hold `num_values` NUL-terminated strings; `out_class`
 * must be writable.
 */
enum AbduceStatus abduce_predict(const struct AbduceModel *model,
                                 const char *const *values,
                                 size_t num_values,
                                 size_t *out_class);

/**
 * Whether fixing the listed features to their instance values forces
 * class `target`.
 *
 * # Safety
 * As for [`abduce_predict`]; `fixed` must hold `num_fixed` indices.
 */
enum AbduceStatus abduce_entails(const struct AbduceModel *model,
                                 const char *const *values,
                                 size_t num_values,
                                 const size_t *fixed,
                                 size_t num_fixed,
                                 size_t target,
                                 bool *out_entails);

/**
 * Explanation of the predicted class of an instance.
 *
 * # Safety
 * As for [`abduce_predict`]; `out_features` must hold
 * `abduce_model_num_features` entries.
 */
enum AbduceStatus abduce_explain(const struct AbduceModel *model,
                                 const char *const *values,
                                 size_t num_values,
                                 enum AbduceMinimality mode,
                                 size_t *out_features,
                                 size_t *out_len);

/**
 * Checks a candidate explanation. On success `out_valid` tells whether it
 * entails the prediction.
 *
 * # Safety
 * As for [`abduce_entails`].
 */
enum AbduceStatus abduce_validate(const struct AbduceModel *model,
                                  const char *const *values,
                                  size_t num_values,
                                  const size_t *candidate,
                                  size_t num_candidate,
                                  bool *out_valid);

/**
 * Subset-minimal explanation that keeps the candidate's features longest.
 *
 * # Safety
 * As for [`abduce_explain`]; `candidate` must hold `num_candidate` indices.
 */
enum AbduceStatus abduce_repair(const struct AbduceModel *model,
                                const char *const *values,
                                size_t num_values,
                                const size_t *candidate,
                                size_t num_candidate,
                                size_t *out_features,
                                size_t *out_len);

/**
 * Minimal explanation inside an entailing candidate; fails with
 * `NotEntailing` otherwise.
 *
 * # Safety
 * As for [`abduce_repair`].
 */
enum AbduceStatus abduce_refine(const struct AbduceModel *model,
                                const char *const *values,
                                size_t num_values,
                                const size_t *candidate,
                                size_t num_candidate,
                                enum AbduceMinimality mode,
                                size_t *out_features,
                                size_t *out_len);

/**
 * Classifies a candidate and returns its corrected explanation: the repair
 * of an optimistic candidate, the refinement of any other.
 *
 * # Safety
 * As for [`abduce_repair`]; `out_status` must be writable.
 */
enum AbduceStatus abduce_audit(const struct AbduceModel *model,
                               const char *const *values,
                               size_t num_values,
                               const size_t *candidate,
                               size_t num_candidate,
                               enum AbduceAuditStatus *out_status,
                               size_t *out_features,
                               size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABDUCE_H */
