/*
 * isoyamabe C API.
 *
 * Profiles are opaque handles. Every call returns an iy_status; on failure the
 * message is available from iy_last_error() on the calling thread until the
 * next call on that thread. Reports come back as JSON strings owned by the
 * caller and released with iy_string_free(). Option strings are JSON objects;
 * NULL or "{}" selects the defaults. Handles are immutable after creation and
 * may be shared between threads.
 */
#ifndef ISOYAMABE_H
#define ISOYAMABE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define IY_API __declspec(dllexport)
#else
#define IY_API __attribute__((visibility("default")))
#endif

typedef struct iy_profile iy_profile;

typedef enum {
  IY_OK = 0,
  IY_ERR_INVALID_ARGUMENT = 1, /* malformed input: bad JSON, unknown name, bad option */
  IY_ERR_DOMAIN = 2,           /* well-formed input outside the operation's precondition */
  IY_ERR_CONVERGENCE = 3,      /* an iterative method gave up */
  IY_ERR_INTERNAL = 4
} iy_status;

IY_API const char* iy_version(void);
IY_API const char* iy_last_error(void);
IY_API const char* iy_status_name(iy_status s);
IY_API void iy_string_free(char* s);

/* "hemisphere:N", "band:N:c1:c2", "cylinder", "product:n_factor:s_h:t:<base>" */
IY_API iy_status iy_profile_from_name(const char* spec, iy_profile** out);
IY_API iy_status iy_profile_from_json(const char* json, iy_profile** out);
IY_API iy_status iy_profile_product(const iy_profile* base, int n_factor, double s_h, double t, double factor_volume,
                                    iy_profile** out);
IY_API void iy_profile_destroy(iy_profile* p);
IY_API iy_status iy_profile_to_json(const iy_profile* p, char** out);
IY_API iy_status iy_profile_hash(const iy_profile* p, char** out);

/* {"usable": bool, "violations": [...], "notes": [...]}; IY_OK even when not usable. */
IY_API iy_status iy_validate(const iy_profile* p, char** out);
IY_API iy_status iy_mean_curvature(const iy_profile* p, double t, double* out);
IY_API iy_status iy_geodesic_distance(const iy_profile* p, double t1, double t2, double* out);

/* options: {"cells": 1000, "count": 4} */
IY_API iy_status iy_spectrum(const iy_profile* p, const char* options, char** out);
/* options: {"cells": 512} */
IY_API iy_status iy_probe(const iy_profile* p, const char* options, char** out);
/* options: {"cells", "s", "mode": "interior"|"boundary", "seed", "tol_interior", "tol_boundary",
 *           "max_iter", "shoot": bool, "corollary": bool} */
IY_API iy_status iy_yamabe(const iy_profile* p, const char* options, char** out);
/* options: {"cells", "a", "b", "p", "q", "seed", "tol_interior", "tol_boundary", "max_iter",
 *           "path": [[a, b], ...]} */
IY_API iy_status iy_hanli(const iy_profile* p, const char* options, char** out);
/* options: {"cells", "c", "tol"} */
IY_API iy_status iy_hanli_target(const iy_profile* p, const char* options, char** out);
/* base profile with constant scalar curvature and minimal boundary;
 * options: {"factor_dim", "factor_scalar", "factor_volume", "s", "modes", "r_max", "steps", "cells"} */
IY_API iy_status iy_bifurcate(const iy_profile* base, const char* options, char** out);

#ifdef __cplusplus
}
#endif

#endif
