#include <stdio.h>
#include <string.h>
#include "pomdp.h"

static const char *TIGER =
    "discount: 0.95\nvalues: reward\nstates: left right\nactions: listen open-left open-right\n"
    "observations: growl-left growl-right\n"
    "T: listen\nidentity\nT: open-left\nuniform\nT: open-right\nuniform\n"
    "O: listen\n0.85 0.15\n0.15 0.85\nO: open-left\nuniform\nO: open-right\nuniform\n"
    "R: listen : * : * : * -1\nR: open-left : left : * : * -100\nR: open-left : right : * : * 10\n"
    "R: open-right : left : * : * 10\nR: open-right : right : * : * -100\n";

int main(void) {
    PomdpModel *model = NULL;
    if (pomdp_model_parse(TIGER, &model) != POMDP_STATUS_OK) {
        fprintf(stderr, "parse: %s\n", pomdp_last_error_message());
        return 1;
    }
    size_t ns, na, no;
    pomdp_model_dimensions(model, &ns, &na, &no);
    PomdpSessionConfig cfg = {POMDP_SOLVER_POUCT, 500, 10, 0, 7};
    PomdpSession *session = NULL;
    if (pomdp_session_new(model, &cfg, &session) != POMDP_STATUS_OK) return 2;
    double total = 0.0;
    for (int t = 0; t < 5; t++) {
        size_t a, o;
        double r;
        if (pomdp_session_plan(session, &a) != POMDP_STATUS_OK) return 3;
        if (pomdp_session_step(session, a, &o, &r) != POMDP_STATUS_OK) return 4;
        if (pomdp_session_update(session, a, o) != POMDP_STATUS_OK) return 5;
        total += r;
    }
    double belief[2];
    if (pomdp_session_belief(session, belief, 2) != POMDP_STATUS_OK) return 6;
    printf("%zu %zu %zu %zu %.6f\n", ns, na, no, pomdp_session_history_len(session), belief[0] + belief[1]);
    PomdpModel *bad = NULL;
    if (pomdp_model_parse("discount: 2\n", &bad) == POMDP_STATUS_OK) return 7;
    if (strlen(pomdp_last_error_message()) == 0) return 8;
    pomdp_session_free(session);
    pomdp_model_free(model);
    return 0;
}
