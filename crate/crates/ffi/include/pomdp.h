#ifndef POMDP_H
#define POMDP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum PomdpStatus {
  POMDP_STATUS_OK = 0,
  POMDP_STATUS_NULL_POINTER = 1,
  POMDP_STATUS_INVALID_UTF8 = 2,
  POMDP_STATUS_PARSE_ERROR = 3,
  POMDP_STATUS_INVALID_ARGUMENT = 4,
  POMDP_STATUS_RUNTIME_ERROR = 5,
  POMDP_STATUS_BUFFER_TOO_SMALL = 6,
  POMDP_STATUS_PANIC = 7,
} PomdpStatus;

/*
 Planner used by a session.
 */
typedef enum PomdpSolver {
  POMDP_SOLVER_POUCT = 0,
  POMDP_SOLVER_POMCP = 1,
  POMDP_SOLVER_VALUE_ITERATION = 2,
  POMDP_SOLVER_RANDOM = 3,
} PomdpSolver;

/*
 Parsed `.pomdp` model.
 */
typedef struct PomdpModel PomdpModel;

/*
 Agent, environment, planner and random stream.
 */
typedef struct PomdpSession PomdpSession;

/*
 Session settings. Zero `simulations`, `max_depth` or `horizon` select
 1000, 20 and 3.
 */
typedef struct PomdpSessionConfig {
  enum PomdpSolver solver;
  size_t simulations;
  size_t max_depth;
  size_t horizon;
  uint64_t seed;
} PomdpSessionConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread; empty after success.
 The pointer stays valid until the next call into this library on the
 same thread.
 */
const char *pomdp_last_error_message(void);

/*
 Parses `.pomdp` text.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PomdpStatus pomdp_model_parse(const char *text, struct PomdpModel **out);

/*
 Releases a model. Null is ignored.

 # Safety
 `model` must come from [`pomdp_model_parse`] and not be freed twice.
 */
void pomdp_model_free(struct PomdpModel *model);

/*
 Writes the number of states, actions and observations.

 # Safety
 All pointers must be valid.
 */
enum PomdpStatus pomdp_model_dimensions(const struct PomdpModel *model,
                                        size_t *states,
                                        size_t *actions,
                                        size_t *observations);

/*
 Writes the model's discount factor.

 # Safety
 All pointers must be valid.
 */
enum PomdpStatus pomdp_model_discount(const struct PomdpModel *model, double *discount);

/*
 Creates a session for `model`. The environment's hidden state is drawn
 from the start belief with the session seed.

 # Safety
 All pointers must be valid.
 */
enum PomdpStatus pomdp_session_new(const struct PomdpModel *model,
                                   const struct PomdpSessionConfig *config,
                                   struct PomdpSession **out);

/*
 Releases a session. Null is ignored.

 # Safety
 `session` must come from [`pomdp_session_new`] and not be freed twice.
 */
void pomdp_session_free(struct PomdpSession *session);

/*
 Plans from the current belief and writes the chosen action index.

 # Safety
 All pointers must be valid.
 */
enum PomdpStatus pomdp_session_plan(struct PomdpSession *session, size_t *action);

/*
 Executes `action` in the simulated environment and writes the emitted
 observation and reward. The belief is unchanged; call
 [`pomdp_session_update`] next.

 # Safety
 All pointers must be valid.
 */
enum PomdpStatus pomdp_session_step(struct PomdpSession *session,
                                    size_t action,
                                    size_t *observation,
                                    double *reward);

/*
 Updates the agent's belief and the planner with a real action and
 observation.

 # Safety
 `session` must be valid.
 */
enum PomdpStatus pomdp_session_update(struct PomdpSession *session,
                                      size_t action,
                                      size_t observation);

/*
 Writes the belief probability of every state into `out[0..len]`.
 `len` must be at least the number of states.

 # Safety
 `out` must point to `len` writable doubles.
 */
enum PomdpStatus pomdp_session_belief(const struct PomdpSession *session, double *out, size_t len);

/*
 Number of real steps recorded in the agent's history.

 # Safety
 `session` must be valid or null (null yields 0).
 */
size_t pomdp_session_history_len(const struct PomdpSession *session);

/*
 Whether the environment has reached a terminal state.

 # Safety
 `session` must be valid or null (null yields false).
 */
bool pomdp_session_is_terminal(const struct PomdpSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POMDP_H */
