/* Exercises the C API from plain C: handles, status codes, string ownership. */
#include <stdio.h>
#include <string.h>

#include "isoyamabe/isoyamabe.h"

static int failures = 0;

#define CHECK(cond)                                            \
  do {                                                         \
    if (!(cond)) {                                             \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                              \
    }                                                          \
  } while (0)

int main(void) {
  iy_profile* p = NULL;
  char* out = NULL;
  double h = 0.0;

  CHECK(iy_profile_from_name("no-such-profile", &p) == IY_ERR_INVALID_ARGUMENT);
  CHECK(p == NULL);
  CHECK(strlen(iy_last_error()) > 0);

  CHECK(iy_profile_from_name("hemisphere:3", &p) == IY_OK);
  CHECK(iy_mean_curvature(p, 0.5, &h) == IY_OK);
  CHECK(h > 0.0);
  CHECK(iy_spectrum(p, "{\"cells\": 200, \"count\": 2}", &out) == IY_OK);
  CHECK(out != NULL && strstr(out, "eigenvalues") != NULL);
  iy_string_free(out);
  out = NULL;

  CHECK(iy_spectrum(p, "{\"cels\": 200}", &out) == IY_ERR_INVALID_ARGUMENT);
  CHECK(iy_spectrum(p, "not json", &out) == IY_ERR_INVALID_ARGUMENT);
  CHECK(iy_yamabe(p, "{\"corollary\": true}", &out) == IY_ERR_DOMAIN);
  CHECK(out == NULL);
  CHECK(iy_spectrum(NULL, NULL, &out) == IY_ERR_INVALID_ARGUMENT);

  CHECK(iy_profile_to_json(p, &out) == IY_OK);
  iy_profile* q = NULL;
  CHECK(iy_profile_from_json(out, &q) == IY_OK);
  iy_string_free(out);
  char *h1 = NULL, *h2 = NULL;
  CHECK(iy_profile_hash(p, &h1) == IY_OK && iy_profile_hash(q, &h2) == IY_OK);
  CHECK(h1 && h2 && strcmp(h1, h2) == 0);
  iy_string_free(h1);
  iy_string_free(h2);
  iy_profile_destroy(q);
  iy_profile_destroy(p);
  iy_profile_destroy(NULL);

  CHECK(strcmp(iy_status_name(IY_ERR_CONVERGENCE), "convergence failure") == 0);
  if (failures) return 1;
  printf("capi smoke ok (%s)\n", iy_version());
  return 0;
}
