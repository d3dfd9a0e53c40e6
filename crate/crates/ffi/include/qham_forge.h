#ifndef QHAM_FORGE_H
#define QHAM_FORGE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
typedef enum QhamStatus {
  QHAM_STATUS_OK = 0,
  QHAM_STATUS_NULL_POINTER = 1,
  QHAM_STATUS_INVALID_UTF8 = 2,
  QHAM_STATUS_UNSUPPORTED_MODEL = 3,
  QHAM_STATUS_PARSE = 4,
  QHAM_STATUS_INVALID_QUIVER = 5,
  QHAM_STATUS_INVALID_MORPHISM = 6,
  QHAM_STATUS_OUT_OF_RANGE = 7,
  QHAM_STATUS_NUMERICAL = 8,
  QHAM_STATUS_PANIC = 9,
} QhamStatus;

/**
 * Opaque group model.
 */
typedef struct QhamModel QhamModel;

/**
 * Opaque cobordism morphism.
 */
typedef struct QhamMorphism QhamMorphism;

/**
 * Opaque quiver.
 */
typedef struct QhamQuiver QhamQuiver;

/**
 * Combinatorial invariants of a valid quiver.
 */
typedef struct QhamQuiverInvariants {
  size_t n_edges;
  size_t n_interior;
  size_t n_incoming;
  size_t n_outgoing;
  int64_t genus;
  /**
   * dim of the moduli space divided by dim G.
   */
  int64_t dim_units;
} QhamQuiverInvariants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qham_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qham_string_free(char *s);

/**
 * Builds a group model from an id such as `su2`, `torus:3` or `prod:su2,so3`.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be writable.
 */
enum QhamStatus qham_model_new(const char *id, struct QhamModel **out);

/**
 * # Safety
 * `m` must come from [`qham_model_new`] and not have been freed. NULL is ignored.
 */
void qham_model_free(struct QhamModel *m);

/**
 * # Safety
 * `m` must be a live model; `out` must be writable.
 */
enum QhamStatus qham_model_dim(const struct QhamModel *m, size_t *out);

/**
 * Structure constant f_ij^k in the model's orthonormal basis.
 *
 * # Safety
 * `m` must be a live model; `out` must be writable.
 */
enum QhamStatus qham_model_structure_constant(const struct QhamModel *m,
                                              size_t i,
                                              size_t j,
                                              size_t k,
                                              double *out);

/**
 * Frobenius norm of the residual of the Cartan trivector identity.
 *
 * # Safety
 * `m` must be a live model; `out` must be writable.
 */
enum QhamStatus qham_psi_residual(const struct QhamModel *m, double *out);

/**
 * Parses a quiver from JSON and checks its structure.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum QhamStatus qham_quiver_from_json(const char *json, struct QhamQuiver **out);

/**
 * # Safety
 * `q` must come from this library and not have been freed. NULL is ignored.
 */
void qham_quiver_free(struct QhamQuiver *q);

/**
 * Validates the quiver and reports its invariants.
 *
 * # Safety
 * `q` must be a live quiver; `out` must be writable.
 */
enum QhamStatus qham_quiver_invariants(const struct QhamQuiver *q,
                                       struct QhamQuiverInvariants *out);

/**
 * Contracts interior edges until none is contractible. `steps` may be NULL.
 *
 * # Safety
 * `q` must be a live quiver; `out` must be writable.
 */
enum QhamStatus qham_quiver_normalize(const struct QhamQuiver *q,
                                      struct QhamQuiver **out,
                                      size_t *steps);

/**
 * # Safety
 * `q` must be a live quiver; `out` must be writable.
 */
enum QhamStatus qham_quiver_to_json(const struct QhamQuiver *q, char **out);

/**
 * Parses a cobordism expression such as `copants ; pants`.
 *
 * # Safety
 * `expr` must be a NUL-terminated string; `out` must be writable.
 */
enum QhamStatus qham_cob_parse(const char *expr, struct QhamMorphism **out);

/**
 * # Safety
 * `m` must come from [`qham_cob_parse`] and not have been freed. NULL is ignored.
 */
void qham_cob_free(struct QhamMorphism *m);

/**
 * Number of source circles, target circles and connected components.
 *
 * # Safety
 * `m` must be a live morphism; the out pointers must be writable.
 */
enum QhamStatus qham_cob_shape(const struct QhamMorphism *m,
                               size_t *source,
                               size_t *target,
                               size_t *components);

/**
 * Image of the morphism under the quasi-Hamiltonian functor, as JSON.
 *
 * # Safety
 * `m` and `model` must be live handles; `out` must be writable.
 */
enum QhamStatus qham_cob_functor_json(const struct QhamMorphism *m,
                                      const struct QhamModel *model,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHAM_FORGE_H */
