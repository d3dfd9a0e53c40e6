#include <stdio.h>
#include <string.h>

#include "qham_forge.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    QhamStatus s_ = (call);                                                \
    if (s_ != QHAM_STATUS_OK) {                                            \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, qham_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  QhamModel *m = NULL;
  size_t dim = 0;
  double r = 1.0;
  CHECK(qham_model_new("su2", &m));
  CHECK(qham_model_dim(m, &dim));
  CHECK(qham_psi_residual(m, &r));
  printf("dim %zu psi %.3g\n", dim, r);

  const char *json =
      "{\"vertices\":[\"in\",\"v\",\"out\"],\"edges\":["
      "{\"id\":\"a\",\"src\":\"in\",\"dst\":\"v\"},"
      "{\"id\":\"l\",\"src\":\"v\",\"dst\":\"v\"},"
      "{\"id\":\"b\",\"src\":\"v\",\"dst\":\"out\"}]}";
  QhamQuiver *q = NULL;
  QhamQuiverInvariants inv;
  CHECK(qham_quiver_from_json(json, &q));
  CHECK(qham_quiver_invariants(q, &inv));
  printf("genus %lld dim_units %lld\n", (long long)inv.genus, (long long)inv.dim_units);

  QhamMorphism *c = NULL;
  if (qham_cob_parse("pants ; pants", &c) != QHAM_STATUS_PARSE) return 1;
  if (strstr(qham_last_error(), "column") == NULL) return 1;

  qham_quiver_free(q);
  qham_model_free(m);
  return 0;
}
