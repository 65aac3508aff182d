#ifndef SFCPLACE_H
#define SFCPLACE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfcpStatus {
  SFCP_STATUS_OK = 0,
  SFCP_STATUS_NULL_POINTER = 1,
  SFCP_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or inconsistent input document or argument.
   */
  SFCP_STATUS_INVALID_INPUT = 3,
  /**
   * No embedding satisfies the constraints.
   */
  SFCP_STATUS_INFEASIBLE = 4,
  /**
   * The embedding violates at least one constraint.
   */
  SFCP_STATUS_REJECTED = 5,
  /**
   * The instance exceeds the exhaustive solver's limits.
   */
  SFCP_STATUS_TOO_LARGE = 6,
  /**
   * A panic was caught at the boundary.
   */
  SFCP_STATUS_INTERNAL = 7,
} SfcpStatus;

/**
 * Values accepted wherever a latency model is expected.
 */
typedef enum SfcpMode {
  SFCP_MODE_SHARING = 0,
  SFCP_MODE_SOTA = 1,
} SfcpMode;

typedef struct SfcpEmbedding SfcpEmbedding;

typedef struct SfcpScenario SfcpScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sfcp_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void sfcp_string_free(char *s);

/**
 * Loads a scenario. A null `topology` or `catalog` selects the bundled
 * Internet2 topology or default catalog.
 *
 * # Safety
 * String arguments must be null or nul-terminated; `out_scenario` must be
 * writable.
 */
enum SfcpStatus sfcp_scenario_new(const char *topology,
                                  const char *catalog,
                                  const char *scenario,
                                  struct SfcpScenario **out_scenario);

/**
 * # Safety
 * `s` must be null or a handle from [`sfcp_scenario_new`], not yet freed.
 */
void sfcp_scenario_free(struct SfcpScenario *s);

/**
 * Number of VNF requests over all SFCs; 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live scenario handle.
 */
size_t sfcp_scenario_request_count(const struct SfcpScenario *s);

/**
 * Runs the greedy embedder. Returns `Infeasible` and leaves `out_embedding`
 * untouched when some SFC cannot be embedded.
 *
 * # Safety
 * `s` must be a live scenario handle and `out_embedding` writable.
 */
enum SfcpStatus sfcp_solve(const struct SfcpScenario *s,
                           uint32_t mode,
                           size_t k_max,
                           struct SfcpEmbedding **out_embedding);

/**
 * Minimum number of active nodes found by exhaustive search. Limited to
 * small instances with unconstrained links.
 *
 * # Safety
 * `s` must be a live scenario handle and `out_active` writable.
 */
enum SfcpStatus sfcp_solve_exact(const struct SfcpScenario *s, size_t *out_active);

/**
 * Parses an embedding document against `s`.
 *
 * # Safety
 * `s` must be a live scenario handle, `doc` nul-terminated and
 * `out_embedding` writable.
 */
enum SfcpStatus sfcp_embedding_from_toml(const struct SfcpScenario *s,
                                         const char *doc,
                                         struct SfcpEmbedding **out_embedding);

/**
 * Serializes an embedding; free the result with [`sfcp_string_free`].
 *
 * # Safety
 * Both handles must be live and `out_doc` writable.
 */
enum SfcpStatus sfcp_embedding_to_toml(const struct SfcpScenario *s,
                                       const struct SfcpEmbedding *e,
                                       char **out_doc);

/**
 * Number of active nodes; 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live embedding handle.
 */
size_t sfcp_embedding_active_nodes(const struct SfcpEmbedding *e);

/**
 * # Safety
 * `e` must be null or an embedding handle not yet freed.
 */
void sfcp_embedding_free(struct SfcpEmbedding *e);

/**
 * Checks every constraint family. Returns `Rejected` when violations are
 * found; their count is written to `out_violations` either way.
 *
 * # Safety
 * Both handles must be live and `out_violations` writable.
 */
enum SfcpStatus sfcp_validate(const struct SfcpScenario *s,
                              const struct SfcpEmbedding *e,
                              uint32_t mode,
                              size_t *out_violations);

/**
 * Writes the placement model in LP format; free the result with
 * [`sfcp_string_free`].
 *
 * # Safety
 * `s` must be a live scenario handle and `out_lp` writable.
 */
enum SfcpStatus sfcp_export_lp(const struct SfcpScenario *s, char **out_lp);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFCPLACE_H */
