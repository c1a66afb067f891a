/* C interface to the decentralized Volt/VAr control simulator.
 *
 * All objects are opaque handles created by vvc_*_load / vvc_*_solve calls and
 * released with the matching vvc_*_free. Functions return VVC_OK on success;
 * on failure vvc_last_error() holds a thread-local description of the most
 * recent failure. Accessors taking indices return 0.0 / -1 when out of range.
 */
#ifndef VOLTVAR_H
#define VOLTVAR_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vvc_status {
    VVC_OK = 0,
    VVC_ERR_IO = 1,
    VVC_ERR_PARSE = 2,
    VVC_ERR_INVALID_ARGUMENT = 3,
    VVC_ERR_NO_CONVERGENCE = 4,
    VVC_ERR_SINGULAR = 5,
    VVC_ERR_DIVERGED = 6,
    VVC_ERR_INTERNAL = 7
} vvc_status;

typedef struct vvc_network vvc_network;
typedef struct vvc_scenario vvc_scenario;
typedef struct vvc_baseline vvc_baseline;
typedef struct vvc_run vvc_run;

const char* vvc_status_name(vvc_status status);
const char* vvc_last_error(void);

/* ---- network ---------------------------------------------------------- */

vvc_status vvc_network_load_file(const char* path, vvc_network** out);
vvc_status vvc_network_load_string(const char* json_text, vvc_network** out);
void vvc_network_free(vvc_network* net);

int vvc_network_bus_count(const vvc_network* net);
int vvc_network_device_count(const vvc_network* net);
int vvc_network_slack_bus(const vvc_network* net);
int vvc_network_device_bus(const vvc_network* net, int device_index);

/* ---- scenario --------------------------------------------------------- */

vvc_status vvc_scenario_load_file(const char* path, vvc_scenario** out);
vvc_status vvc_scenario_default(vvc_scenario** out);
void vvc_scenario_free(vvc_scenario* scenario);

vvc_status vvc_scenario_set_max_iterations(vvc_scenario* scenario, int max_iter);
vvc_status vvc_scenario_set_consensus_rounds(vvc_scenario* scenario, int rounds);

/* ---- baseline power flow ---------------------------------------------- */

vvc_status vvc_baseline_solve(const vvc_network* net, const vvc_scenario* scenario,
                              vvc_baseline** out);
void vvc_baseline_free(vvc_baseline* baseline);

int vvc_baseline_iterations(const vvc_baseline* baseline);
double vvc_baseline_voltage(const vvc_baseline* baseline, int bus);
double vvc_baseline_angle(const vvc_baseline* baseline, int bus);
double vvc_baseline_min_voltage(const vvc_baseline* baseline);
vvc_status vvc_baseline_write_csv(const vvc_baseline* baseline, const vvc_network* net,
                                  const char* path);

/* ---- controller run ---------------------------------------------------- */

vvc_status vvc_run_simulate(const vvc_network* net, const vvc_scenario* scenario, vvc_run** out);
void vvc_run_free(vvc_run* run);

int vvc_run_converged(const vvc_run* run);
int vvc_run_iterations(const vvc_run* run);
double vvc_run_final_objective(const vvc_run* run);
double vvc_run_baseline_voltage(const vvc_run* run, int bus);
double vvc_run_predicted_voltage(const vvc_run* run, int bus);
double vvc_run_validated_voltage(const vvc_run* run, int bus);
double vvc_run_validation_rmse(const vvc_run* run);
int vvc_run_device_bus(const vvc_run* run, int device_index);
double vvc_run_setpoint_p_kw(const vvc_run* run, int device_index);
double vvc_run_setpoint_q_kvar(const vvc_run* run, int device_index);
double vvc_run_dispatch_factor(const vvc_run* run, int device_index);

/* Write trace.csv, setpoints.csv, predicted_voltages.csv, validation.csv and
 * summary.json into out_dir; with dump_jacobian nonzero also jacobian.csv,
 * jacobian_inverse.csv and control_map.csv. */
vvc_status vvc_run_write_outputs(const vvc_run* run, const char* out_dir, int dump_jacobian);

/* Recompute validation.csv from previously written setpoint / prediction
 * files (the `validate` subcommand). */
vvc_status vvc_validate_files(const vvc_network* net, const vvc_scenario* scenario,
                              const char* setpoints_csv, const char* predicted_csv,
                              const char* out_csv);

/* ---- property checks --------------------------------------------------- */

typedef struct vvc_check_options {
    int prox_draws;      /* 0 keeps the default (1000) */
    int perturb;         /* nonzero: inject the fault below */
    int perturb_row;
    int perturb_col;
    double perturb_delta;
} vvc_check_options;

/* Runs the property suite, printing one line per property to stdout.
 * failures_out (optional) receives the number of failed properties. */
vvc_status vvc_check_run(const vvc_network* net, const vvc_scenario* scenario,
                         const vvc_check_options* options, int* failures_out);

#ifdef __cplusplus
}
#endif

#endif /* VOLTVAR_H */
