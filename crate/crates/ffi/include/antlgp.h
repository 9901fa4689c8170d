#ifndef ANTLGP_H
#define ANTLGP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum AntlgpStatus {
  ANTLGP_STATUS_OK = 0,
  ANTLGP_STATUS_NULL_POINTER = 1,
  ANTLGP_STATUS_INVALID_ARGUMENT = 2,
  ANTLGP_STATUS_CONFIG = 3,
  ANTLGP_STATUS_DATA = 4,
  ANTLGP_STATUS_INVARIANT = 5,
  ANTLGP_STATUS_BUFFER_TOO_SMALL = 6,
  ANTLGP_STATUS_PANIC = 7,
} AntlgpStatus;

// A running colony together with the items it sorts.
typedef struct AntlgpColony AntlgpColony;

// A parsed, compiled LGP program.
typedef struct AntlgpProgram AntlgpProgram;

// Colony construction options. Zero `width`, `height` or `n_ants` selects
// the size-based default.
typedef struct AntlgpColonyOptions {
  size_t width;
  size_t height;
  size_t n_ants;
  uint64_t seed;
  double k1;
  double k2;
  double evaporation;
  double eta;
  double a;
  double beta;
  double delta;
} AntlgpColonyOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message, NUL-terminated, into
// `buf` and returns the full message length excluding the terminator.
// Passing a null `buf` or zero `len` only queries the length.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t antlgp_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *antlgp_version(void);

// Options holding the published parameter values.
struct AntlgpColonyOptions antlgp_colony_options_default(void);

// Creates a colony over `n_items` items with `n_features` features each,
// stored row-major in `features`. `labels` may be null; a negative label
// means unknown. `options` may be null for defaults.
//
// # Safety
// `features` must hold `n_items * n_features` doubles, `labels` (when not
// null) `n_items` integers, and `out` must be writable.
enum AntlgpStatus antlgp_colony_new(const double *features,
                                    size_t n_items,
                                    size_t n_features,
                                    const int32_t *labels,
                                    const struct AntlgpColonyOptions *options,
                                    struct AntlgpColony **out);

// Advances the colony by `sweeps` sweeps.
//
// # Safety
// `colony` must be a live handle.
enum AntlgpStatus antlgp_colony_step(struct AntlgpColony *colony, uint64_t sweeps);

// Makes every laden agent put its item down on the nearest free cell.
//
// # Safety
// `colony` must be a live handle.
enum AntlgpStatus antlgp_colony_finish(struct AntlgpColony *colony);

// Sweeps completed so far.
//
// # Safety
// `colony` must be a live handle or null (which yields 0).
uint64_t antlgp_colony_step_count(const struct AntlgpColony *colony);

// Items currently held by agents.
//
// # Safety
// `colony` must be a live handle or null (which yields 0).
size_t antlgp_colony_carried(const struct AntlgpColony *colony);

// Spatial entropy of items on the grid over `block` x `block` tiles.
//
// # Safety
// `colony` must be a live handle and `out` writable.
enum AntlgpStatus antlgp_colony_entropy(const struct AntlgpColony *colony,
                                        size_t block,
                                        double *out);

// Writes one cluster id per item into `labels` (length `len`, at least the
// item count) and the cluster count into `n_clusters`. Fails while any
// item is carried.
//
// # Safety
// `colony` must be a live handle, `labels` must hold `len` writable
// integers and `n_clusters` must be writable.
enum AntlgpStatus antlgp_colony_clusters(const struct AntlgpColony *colony,
                                         size_t link_radius,
                                         uint32_t *labels,
                                         size_t len,
                                         size_t *n_clusters);

// Releases a colony handle. Null is ignored.
//
// # Safety
// `colony` must be null or a handle not yet freed.
void antlgp_colony_free(struct AntlgpColony *colony);

// Parses the textual program format.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum AntlgpStatus antlgp_program_parse(const char *text, struct AntlgpProgram **out);

// Number of inputs the program reads.
//
// # Safety
// `program` must be a live handle or null (which yields 0).
size_t antlgp_program_n_inputs(const struct AntlgpProgram *program);

// Runs the program on one input vector.
//
// # Safety
// `program` must be a live handle, `inputs` must hold `n_inputs` doubles
// and `out` must be writable.
enum AntlgpStatus antlgp_program_execute(struct AntlgpProgram *program,
                                         const double *inputs,
                                         size_t n_inputs,
                                         double *out);

// Releases a program handle. Null is ignored.
//
// # Safety
// `program` must be null or a handle not yet freed.
void antlgp_program_free(struct AntlgpProgram *program);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANTLGP_H */
