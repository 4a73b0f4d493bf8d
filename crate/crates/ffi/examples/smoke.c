/* Minimal C client: runs the reference scenario and prints the last row. */
#include <stdio.h>
#include "tankmpc.h"

int main(int argc, char **argv) {
    TankMpcScenario *s = NULL;
    TankMpcLog *log = NULL;
    TankMpcLogRow row;

    if (tankmpc_scenario_new_reference(&s) != TANK_MPC_STATUS_OK) {
        fprintf(stderr, "%s\n", tankmpc_last_error_message());
        return 1;
    }
    if (tankmpc_simulate(s, &log) != TANK_MPC_STATUS_OK) {
        fprintf(stderr, "%s\n", tankmpc_last_error_message());
        tankmpc_scenario_free(s);
        return 1;
    }
    size_t n = tankmpc_log_len(log);
    tankmpc_log_row(log, n - 1, &row);
    printf("rows=%zu t=%g h1=%g h2=%g\n", n, row.t, row.h1, row.h2);
    if (argc > 1 && tankmpc_log_write_csv(log, argv[1]) != TANK_MPC_STATUS_OK) {
        fprintf(stderr, "%s\n", tankmpc_last_error_message());
    }
    tankmpc_log_free(log);
    tankmpc_scenario_free(s);
    return 0;
}
