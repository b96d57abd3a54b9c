#ifndef TOURDESK_H
#define TOURDESK_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum TdStatus {
  TD_STATUS_OK = 0,
  TD_STATUS_NULL_ARGUMENT = 1,
  TD_STATUS_INVALID_UTF8 = 2,
  TD_STATUS_CONFIG = 3,
  TD_STATUS_UNKNOWN_SPOT = 4,
  TD_STATUS_SESSION_CLOSED = 5,
  TD_STATUS_INVALID_INPUT = 6,
  TD_STATUS_INTERNAL = 7,
} TdStatus;

/**
 * Which similarity route produced a score.
 */
typedef enum TdMethod {
  TD_METHOD_WRD = 0,
  TD_METHOD_COSINE_MEAN = 1,
} TdMethod;

/**
 * Loaded embeddings, categories, attractions and expression table.
 */
typedef struct TdEngine TdEngine;

/**
 * One visitor conversation. Keeps its engine's data alive on its own.
 */
typedef struct TdSession TdSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *td_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void td_string_free(char *s);

/**
 * Loads a service config file (relative paths resolve against its folder).
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out` must be writable.
 */
enum TdStatus td_engine_open(const char *config_path, struct TdEngine **out);

/**
 * # Safety
 * `engine` must come from [`td_engine_open`] or be null.
 */
void td_engine_free(struct TdEngine *engine);

/**
 * Starts a session between two attractions. `recommended_id` may be null to
 * recommend the spot with more data. The greeting is written to
 * `greeting_json` when that pointer is non-null.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum TdStatus td_session_new(const struct TdEngine *engine,
                             const char *spot_a_id,
                             const char *spot_b_id,
                             const char *recommended_id,
                             uint64_t now_ms,
                             struct TdSession **out,
                             char **greeting_json);

/**
 * Feeds one visitor utterance and writes the reply as JSON.
 *
 * # Safety
 * Pointers must be valid; `text` NUL-terminated.
 */
enum TdStatus td_session_advance(struct TdSession *session,
                                 const char *text,
                                 uint64_t now_ms,
                                 char **reply_out);

/**
 * Writes the session's current state name, e.g. `"QA"`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum TdStatus td_session_state(const struct TdSession *session, char **out);

/**
 * # Safety
 * `session` must come from [`td_session_new`] or be null.
 */
void td_session_free(struct TdSession *session);

/**
 * Classifies one utterance; writes tokens, out-of-vocabulary words, the
 * decision and per-category scores as JSON.
 *
 * # Safety
 * Pointers must be valid; `text` NUL-terminated.
 */
enum TdStatus td_classify(const struct TdEngine *engine, const char *text, char **out);

/**
 * Two-stage similarity of two sentences under the engine's thresholds.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum TdStatus td_similarity(const struct TdEngine *engine,
                            const char *a,
                            const char *b,
                            double *score,
                            enum TdMethod *method);

/**
 * Minimum transport cost between `supply` (n) and `demand` (m). Both sides
 * are rescaled to sum to one; `cost` is n×m in row-major order.
 *
 * # Safety
 * The arrays must hold `n`, `m` and `n * m` values.
 */
enum TdStatus td_solve_ot(const double *supply,
                          size_t n,
                          const double *demand,
                          size_t m,
                          const double *cost,
                          double *out_value);

/**
 * Face parameters (valence, arousal, dominance, real intention) for an
 * expression event. Unknown events yield the neutral face.
 *
 * # Safety
 * `out` must have room for four doubles.
 */
enum TdStatus td_expression_params(const struct TdEngine *engine, const char *event, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOURDESK_H */
