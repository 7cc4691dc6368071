#ifndef NETDESIGN_H
#define NETDESIGN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum NdStatus {
  ND_STATUS_OK = 0,
  ND_STATUS_NULL_POINTER = 1,
  ND_STATUS_INVALID_UTF8 = 2,
  ND_STATUS_PARAMETER = 3,
  ND_STATUS_SIZE = 4,
  ND_STATUS_CONSISTENCY = 5,
  ND_STATUS_INFEASIBLE = 6,
  ND_STATUS_DATA = 7,
  ND_STATUS_STRUCTURE = 8,
  ND_STATUS_CONFIG = 9,
  ND_STATUS_LOOKUP = 10,
  ND_STATUS_PARSE = 11,
  ND_STATUS_IO = 12,
  ND_STATUS_JSON = 13,
  ND_STATUS_PANIC = 14,
} NdStatus;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct NdConfig NdConfig;

/**
 * Undirected simple graph.
 */
typedef struct NdGraph NdGraph;

/**
 * Result of a finished experiment.
 */
typedef struct NdReport NdReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Owned by the library and valid until the next call.
 */
const char *nd_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void nd_string_free(char *s);

/**
 * Builds a graph on `n` nodes from `n_edges` pairs stored flat in `edges`.
 *
 * # Safety
 * `edges` must point to `2 * n_edges` readable values (or be null when
 * `n_edges` is 0); `out` must be writable.
 */
enum NdStatus nd_graph_new(size_t n, const size_t *edges, size_t n_edges, struct NdGraph **out);

/**
 * # Safety
 * `g` must come from [`nd_graph_new`] and not have been freed.
 */
void nd_graph_free(struct NdGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle and `n_nodes`, `n_edges` writable.
 */
enum NdStatus nd_graph_size(const struct NdGraph *g, size_t *n_nodes, size_t *n_edges);

/**
 * Runs the design described by `design_json` on the graph with all
 * responses zero, using `seed`, and returns the trace as JSON.
 *
 * # Safety
 * `g` must be a live graph handle, `design_json` a NUL-terminated string
 * and `out_json` writable.
 */
enum NdStatus nd_sample_trace(const struct NdGraph *g,
                              const char *design_json,
                              uint64_t seed,
                              char **out_json);

/**
 * Exact log-probability of a JSON trace on the graph under its design.
 *
 * # Safety
 * `g` must be a live graph handle, `trace_json` a NUL-terminated string and
 * `out` writable.
 */
enum NdStatus nd_trace_log_likelihood(const struct NdGraph *g, const char *trace_json, double *out);

/**
 * Entropy in nats of an Erdős–Rényi graph on `n` nodes.
 *
 * # Safety
 * `out` must be writable.
 */
enum NdStatus nd_entropy_er(size_t n, double alpha, double *out);

/**
 * Parses and validates a TOML experiment configuration. On
 * [`NdStatus::Config`] the message lists every problem, separated by `; `.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` writable.
 */
enum NdStatus nd_config_parse(const char *toml, struct NdConfig **out);

/**
 * # Safety
 * `c` must come from [`nd_config_parse`] and not have been freed.
 */
void nd_config_free(struct NdConfig *c);

/**
 * Overrides the master seed.
 *
 * # Safety
 * `c` must be a live configuration handle.
 */
enum NdStatus nd_config_set_seed(struct NdConfig *c, uint64_t seed);

/**
 * Run id (`kind-` and twelve hex digits of the config hash).
 *
 * # Safety
 * `c` must be a live configuration handle and `out` writable.
 */
enum NdStatus nd_config_run_id(const struct NdConfig *c, char **out);

/**
 * Runs the experiment, writing its artifacts under `out_dir`.
 *
 * # Safety
 * `c` must be a live configuration handle, `out_dir` a NUL-terminated
 * path and `out` writable.
 */
enum NdStatus nd_run_experiment(const struct NdConfig *c,
                                const char *out_dir,
                                struct NdReport **out);

/**
 * # Safety
 * `r` must come from [`nd_run_experiment`] and not have been freed.
 */
void nd_report_free(struct NdReport *r);

/**
 * Number of design rows in the report.
 *
 * # Safety
 * `r` must be a live report handle and `out` writable.
 */
enum NdStatus nd_report_rows(const struct NdReport *r, size_t *out);

/**
 * Mean and standard error of the first criterion of row `i`.
 *
 * # Safety
 * `r` must be a live report handle; `mean` and `se` writable.
 */
enum NdStatus nd_report_score(const struct NdReport *r, size_t i, double *mean, double *se);

/**
 * Whole report as JSON.
 *
 * # Safety
 * `r` must be a live report handle and `out` writable.
 */
enum NdStatus nd_report_json(const struct NdReport *r, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETDESIGN_H */
