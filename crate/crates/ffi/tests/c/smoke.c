#include <math.h>
#include <stdio.h>
#include <string.h>

#include "oscitime.h"

#define CHECK(x)                                                          \
  do {                                                                    \
    OtStatus s_ = (x);                                                    \
    if (s_ != OT_STATUS_OK) {                                             \
      fprintf(stderr, "%s -> %d: %s\n", #x, (int)s_, ot_last_error());    \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(void) {
  OtOperator *tg = NULL;
  OtVector *phi = NULL;
  OtCcrResult r;
  double norm = 0.0;

  CHECK(ot_operator_galapon(64, &tg));
  CHECK(ot_vector_domain_sample(OT_DOMAIN_KIND_SUM_ZERO, 0.0, 0.0, 0, 7, 64, &phi));
  CHECK(ot_ccr_check(tg, phi, 0.0, -1.0, 1e-13 * 64, &r));
  if (r.verdict != OT_VERDICT_PASS) return 2;
  CHECK(ot_operator_norm(tg, &norm));
  if (!(norm <= M_PI + 1e-9)) return 3;

  OtVector *bad = NULL;
  if (ot_vector_super_coherent(1.5, 0.0, 0, 16, &bad) != OT_STATUS_DOMAIN) return 4;
  if (ot_last_error() == NULL || strstr(ot_last_error(), "beta") == NULL) return 5;

  ot_vector_free(phi);
  ot_operator_free(tg);
  printf("ok %s %.6f\n", ot_version(), norm);
  return 0;
}
