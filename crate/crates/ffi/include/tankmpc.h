/* Generated by cbindgen from crates/ffi. Do not edit. */

#ifndef TANKMPC_H
#define TANKMPC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible call.
 */
typedef enum TankMpcStatus {
  TANK_MPC_STATUS_OK = 0,
  TANK_MPC_STATUS_NULL_POINTER = 1,
  TANK_MPC_STATUS_INVALID_ARGUMENT = 2,
  TANK_MPC_STATUS_CONFIG_ERROR = 3,
  TANK_MPC_STATUS_DOMAIN_ERROR = 4,
  TANK_MPC_STATUS_SINGULAR_ERROR = 5,
  TANK_MPC_STATUS_RUNTIME_ERROR = 6,
  TANK_MPC_STATUS_IO_ERROR = 7,
  TANK_MPC_STATUS_PANIC = 8,
} TankMpcStatus;

/*
 A designed controller together with its receding-horizon memory.
 */
typedef struct TankMpcController TankMpcController;

/*
 Result of a closed-loop run.
 */
typedef struct TankMpcLog TankMpcLog;

/*
 Scenario description: plant, operating point, horizons, run profile.
 */
typedef struct TankMpcScenario TankMpcScenario;

/*
 One sample of a closed-loop run; levels and controls are deviations from
 the operating point, `fi*_abs` are absolute inflows.
 */
typedef struct TankMpcLogRow {
  double t;
  double r1;
  double r2;
  double h1;
  double h2;
  double u1;
  double u2;
  double u3;
  double fi1_abs;
  double fi2_abs;
} TankMpcLogRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *tankmpc_version(void);

/*
 Message for the last failed call on this thread; empty after a success.
 The pointer stays valid until the next library call on this thread.
 */
const char *tankmpc_last_error_message(void);

/*
 Creates the reference scenario (np = 10, nc = 3, ts = 0.05 s, rw = 1).

 # Safety
 `out` must be a valid pointer to writable storage for one pointer.
 */
enum TankMpcStatus tankmpc_scenario_new_reference(struct TankMpcScenario **out);

/*
 Parses a scenario from configuration text (the `key = value` format).

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum TankMpcStatus tankmpc_scenario_from_config(const char *text, struct TankMpcScenario **out);

/*
 Replaces the horizons and move weight of a scenario.

 # Safety
 `scenario` must come from a `tankmpc_scenario_*` constructor.
 */
enum TankMpcStatus tankmpc_scenario_set_mpc(struct TankMpcScenario *scenario,
                                            uintptr_t np,
                                            uintptr_t nc,
                                            double rw);

/*
 Sets the simulated duration in seconds.

 # Safety
 `scenario` must come from a `tankmpc_scenario_*` constructor.
 */
enum TankMpcStatus tankmpc_scenario_set_duration(struct TankMpcScenario *scenario, double t_end);

/*
 # Safety
 `scenario` must be NULL or come from a `tankmpc_scenario_*` constructor
 and not have been freed.
 */
void tankmpc_scenario_free(struct TankMpcScenario *scenario);

/*
 Steady inflows `[fi1_bar, fi2_bar]` holding the operating levels.

 # Safety
 `scenario` must be valid; `out` must point to 2 writable doubles.
 */
enum TankMpcStatus tankmpc_steady_inflows(const struct TankMpcScenario *scenario, double *out);

/*
 Continuous linearization at the scenario's operating point: `a_out` and
 `b_out` each receive a row-major 2x2 matrix.

 # Safety
 `scenario` must be valid; `a_out` and `b_out` must point to 4 writable doubles each.
 */
enum TankMpcStatus tankmpc_linearize(const struct TankMpcScenario *scenario,
                                     double *a_out,
                                     double *b_out);

/*
 Designs the controller for a scenario and starts it at zero deviation.

 # Safety
 `scenario` must be valid; `out` must be writable.
 */
enum TankMpcStatus tankmpc_controller_new(const struct TankMpcScenario *scenario,
                                          struct TankMpcController **out);

/*
 Restarts the controller memory from a measurement, with zero control.

 # Safety
 `controller` must be valid; `measurement` must point to 2 doubles.
 */
enum TankMpcStatus tankmpc_controller_reset(struct TankMpcController *controller,
                                            const double *measurement);

/*
 One receding-horizon step. `measurement` and `setpoint` are level
 deviations (m); `u_out` receives the inflow deviations to apply (m^3/s).

 # Safety
 `controller` must be valid; the three arrays must hold 2 doubles each.
 */
enum TankMpcStatus tankmpc_controller_step(struct TankMpcController *controller,
                                           const double *measurement,
                                           const double *setpoint,
                                           double *u_out);

/*
 # Safety
 `controller` must be NULL or a live handle from [`tankmpc_controller_new`].
 */
void tankmpc_controller_free(struct TankMpcController *controller);

/*
 Runs the scenario in closed loop against the nonlinear plant.

 # Safety
 `scenario` must be valid; `out` must be writable.
 */
enum TankMpcStatus tankmpc_simulate(const struct TankMpcScenario *scenario,
                                    struct TankMpcLog **out);

/*
 Number of rows in a log; 0 for NULL.

 # Safety
 `log` must be NULL or a live handle.
 */
uintptr_t tankmpc_log_len(const struct TankMpcLog *log);

/*
 Copies row `index` into `out`.

 # Safety
 `log` must be a live handle; `out` must be writable.
 */
enum TankMpcStatus tankmpc_log_row(const struct TankMpcLog *log,
                                   uintptr_t index,
                                   struct TankMpcLogRow *out);

/*
 Writes the log as CSV (same layout as `tankmpc simulate`).

 # Safety
 `log` must be a live handle; `path` a NUL-terminated UTF-8 string.
 */
enum TankMpcStatus tankmpc_log_write_csv(const struct TankMpcLog *log, const char *path);

/*
 # Safety
 `log` must be NULL or a live handle from [`tankmpc_simulate`].
 */
void tankmpc_log_free(struct TankMpcLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TANKMPC_H */
