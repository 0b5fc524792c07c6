#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "cvrobust.h"

#define CHECK(call)                                                  \
  do {                                                               \
    CvrStatus s_ = (call);                                           \
    if (s_ != CVR_STATUS_OK) {                                       \
      char msg_[256];                                                \
      cvr_last_error(msg_, sizeof msg_);                             \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, msg_);       \
      return 1;                                                      \
    }                                                                \
  } while (0)

int main(void) {
  double exact = 0.0;
  CHECK(cvr_closed_form("fock:1", CVR_FREE_SET_CLASSICAL, &exact));

  CvrState *state = NULL;
  CHECK(cvr_state_new("fock:1", 20, 0.0, &state));
  CvrOptions options = cvr_options_default();
  options.grid_radius = 5.0;
  CvrReport *report = NULL;
  CHECK(cvr_sandwich(state, CVR_FREE_SET_CLASSICAL, &options, &report));
  double lower = 0.0, upper = 0.0;
  CHECK(cvr_report_bounds(report, &lower, &upper));
  printf("%.12f %.12f %.12f\n", exact, lower, upper);
  cvr_report_free(report);
  cvr_state_free(state);

  if (cvr_state_new("nope:1", 20, 0.0, &state) != CVR_STATUS_INVALID_ARGUMENT) return 2;
  return fabs(exact - exp(1.0)) < 1e-12 && lower <= upper && fabs(lower - exact) < 1e-2 ? 0 : 3;
}
