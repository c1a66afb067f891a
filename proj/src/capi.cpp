#include "voltvar/voltvar.h"

#include <filesystem>
#include <memory>
#include <string>

#include "voltvar/checks.hpp"
#include "voltvar/error.hpp"
#include "voltvar/harness.hpp"
#include "voltvar/io.hpp"

using namespace voltvar;

struct vvc_network {
    GridNetwork net;
};
struct vvc_scenario {
    ScenarioConfig config;
};
struct vvc_baseline {
    PowerFlowSolution solution;
};
struct vvc_run {
    std::unique_ptr<Simulation> sim;
    RunResult result;
    ValidationReport validation;
};

namespace {

thread_local std::string g_last_error;

vvc_status status_of(const Error& e) {
    switch (e.code()) {
        case ErrorCode::io: return VVC_ERR_IO;
        case ErrorCode::parse: return VVC_ERR_PARSE;
        case ErrorCode::invalid_argument: return VVC_ERR_INVALID_ARGUMENT;
        case ErrorCode::no_convergence: return VVC_ERR_NO_CONVERGENCE;
        case ErrorCode::singular: return VVC_ERR_SINGULAR;
        case ErrorCode::diverged: return VVC_ERR_DIVERGED;
        case ErrorCode::protocol:
        case ErrorCode::internal: return VVC_ERR_INTERNAL;
    }
    return VVC_ERR_INTERNAL;
}

template <typename Fn>
vvc_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return VVC_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return VVC_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return VVC_ERR_INTERNAL;
    }
}

vvc_status invalid(const char* message) {
    g_last_error = message;
    return VVC_ERR_INVALID_ARGUMENT;
}

} // namespace

extern "C" {

const char* vvc_status_name(vvc_status status) {
    switch (status) {
        case VVC_OK: return "ok";
        case VVC_ERR_IO: return "io-error";
        case VVC_ERR_PARSE: return "parse-error";
        case VVC_ERR_INVALID_ARGUMENT: return "invalid-argument";
        case VVC_ERR_NO_CONVERGENCE: return "no-convergence";
        case VVC_ERR_SINGULAR: return "singular-matrix";
        case VVC_ERR_DIVERGED: return "diverged";
        case VVC_ERR_INTERNAL: return "internal-error";
    }
    return "unknown";
}

const char* vvc_last_error(void) { return g_last_error.c_str(); }

vvc_status vvc_network_load_file(const char* path, vvc_network** out) {
    if (!path || !out) return invalid("vvc_network_load_file: null argument");
    return guarded([&] { *out = new vvc_network{load_network_file(path)}; });
}

vvc_status vvc_network_load_string(const char* json_text, vvc_network** out) {
    if (!json_text || !out) return invalid("vvc_network_load_string: null argument");
    return guarded([&] { *out = new vvc_network{load_network_json(json_text)}; });
}

void vvc_network_free(vvc_network* net) { delete net; }

int vvc_network_bus_count(const vvc_network* net) { return net ? net->net.bus_count() : 0; }

int vvc_network_device_count(const vvc_network* net) {
    return net ? static_cast<int>(net->net.devices().size()) : 0;
}

int vvc_network_slack_bus(const vvc_network* net) { return net ? net->net.slack_id() : -1; }

int vvc_network_device_bus(const vvc_network* net, int device_index) {
    if (!net || device_index < 0 ||
        device_index >= static_cast<int>(net->net.devices().size()))
        return -1;
    return net->net.devices()[device_index].bus;
}

vvc_status vvc_scenario_load_file(const char* path, vvc_scenario** out) {
    if (!path || !out) return invalid("vvc_scenario_load_file: null argument");
    return guarded([&] { *out = new vvc_scenario{load_scenario_file(path)}; });
}

vvc_status vvc_scenario_default(vvc_scenario** out) {
    if (!out) return invalid("vvc_scenario_default: null argument");
    return guarded([&] { *out = new vvc_scenario{}; });
}

void vvc_scenario_free(vvc_scenario* scenario) { delete scenario; }

vvc_status vvc_scenario_set_max_iterations(vvc_scenario* scenario, int max_iter) {
    if (!scenario || max_iter <= 0)
        return invalid("vvc_scenario_set_max_iterations: need a scenario and max_iter > 0");
    scenario->config.max_iter = max_iter;
    return VVC_OK;
}

vvc_status vvc_scenario_set_consensus_rounds(vvc_scenario* scenario, int rounds) {
    if (!scenario || rounds < 0)
        return invalid("vvc_scenario_set_consensus_rounds: need a scenario and rounds >= 0");
    scenario->config.consensus_rounds = rounds;
    return VVC_OK;
}

vvc_status vvc_baseline_solve(const vvc_network* net, const vvc_scenario* scenario,
                              vvc_baseline** out) {
    if (!net || !scenario || !out) return invalid("vvc_baseline_solve: null argument");
    return guarded([&] { *out = new vvc_baseline{baseline_run(net->net, scenario->config)}; });
}

void vvc_baseline_free(vvc_baseline* baseline) { delete baseline; }

int vvc_baseline_iterations(const vvc_baseline* baseline) {
    return baseline ? baseline->solution.iterations : 0;
}

double vvc_baseline_voltage(const vvc_baseline* baseline, int bus) {
    if (!baseline || bus < 0 || bus >= baseline->solution.v.size()) return 0.0;
    return baseline->solution.v[bus];
}

double vvc_baseline_angle(const vvc_baseline* baseline, int bus) {
    if (!baseline || bus < 0 || bus >= baseline->solution.theta.size()) return 0.0;
    return baseline->solution.theta[bus];
}

double vvc_baseline_min_voltage(const vvc_baseline* baseline) {
    if (!baseline || baseline->solution.v.size() == 0) return 0.0;
    return baseline->solution.v.minCoeff();
}

vvc_status vvc_baseline_write_csv(const vvc_baseline* baseline, const vvc_network* net,
                                  const char* path) {
    if (!baseline || !net || !path) return invalid("vvc_baseline_write_csv: null argument");
    return guarded([&] { write_baseline_csv(path, net->net, baseline->solution); });
}

vvc_status vvc_run_simulate(const vvc_network* net, const vvc_scenario* scenario, vvc_run** out) {
    if (!net || !scenario || !out) return invalid("vvc_run_simulate: null argument");
    return guarded([&] {
        auto run = std::make_unique<vvc_run>();
        run->sim = std::make_unique<Simulation>(net->net, scenario->config);
        run->result = run->sim->run();
        run->validation = run->sim->validate();
        *out = run.release();
    });
}

void vvc_run_free(vvc_run* run) { delete run; }

int vvc_run_converged(const vvc_run* run) { return run && run->result.converged ? 1 : 0; }

int vvc_run_iterations(const vvc_run* run) { return run ? run->result.iterations : 0; }

double vvc_run_final_objective(const vvc_run* run) {
    return run ? run->result.final_objective : 0.0;
}

double vvc_run_baseline_voltage(const vvc_run* run, int bus) {
    if (!run || bus < 0 || bus >= run->sim->baseline().v.size()) return 0.0;
    return run->sim->baseline().v[bus];
}

double vvc_run_predicted_voltage(const vvc_run* run, int bus) {
    if (!run || bus < 0 || bus >= run->sim->network().bus_count()) return 0.0;
    return run->sim->predicted_voltages()[bus];
}

double vvc_run_validated_voltage(const vvc_run* run, int bus) {
    if (!run || bus < 0 || bus >= static_cast<int>(run->validation.rows.size())) return 0.0;
    return run->validation.rows[bus].validated_v;
}

double vvc_run_validation_rmse(const vvc_run* run) { return run ? run->validation.rmse : 0.0; }

int vvc_run_device_bus(const vvc_run* run, int device_index) {
    if (!run || device_index < 0 ||
        device_index >= static_cast<int>(run->sim->network().devices().size()))
        return -1;
    return run->sim->network().devices()[device_index].bus;
}

double vvc_run_setpoint_p_kw(const vvc_run* run, int device_index) {
    const int bus = vvc_run_device_bus(run, device_index);
    if (bus < 0) return 0.0;
    return run->sim->agents()[bus].p_ctrl * run->sim->network().base().mva * 1000.0;
}

double vvc_run_setpoint_q_kvar(const vvc_run* run, int device_index) {
    const int bus = vvc_run_device_bus(run, device_index);
    if (bus < 0) return 0.0;
    return run->sim->agents()[bus].q_ctrl * run->sim->network().base().mva * 1000.0;
}

double vvc_run_dispatch_factor(const vvc_run* run, int device_index) {
    const int bus = vvc_run_device_bus(run, device_index);
    if (bus < 0) return 0.0;
    return run->sim->agents()[bus].z;
}

vvc_status vvc_run_write_outputs(const vvc_run* run, const char* out_dir, int dump_jacobian) {
    if (!run || !out_dir) return invalid("vvc_run_write_outputs: null argument");
    return guarded([&] {
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        const Simulation& sim = *run->sim;
        const double base_mva = sim.network().base().mva;
        std::vector<int> device_buses;
        for (const auto& dev : sim.network().devices()) device_buses.push_back(dev.bus);
        write_trace_csv((dir / "trace.csv").string(), sim.trace(), device_buses, base_mva);
        write_setpoints_csv((dir / "setpoints.csv").string(), sim, base_mva);
        write_predicted_csv((dir / "predicted_voltages.csv").string(), sim);
        write_validation_csv((dir / "validation.csv").string(), run->validation);
        write_baseline_csv((dir / "baseline_voltages.csv").string(), sim.network(),
                           sim.baseline());
        write_summary_json((dir / "summary.json").string(), sim, run->result, run->validation);
        if (dump_jacobian) {
            const LinearModel& model = sim.model();
            const int n = sim.network().bus_count();
            Eigen::MatrixXd jac(2 * n, 2 * n), inv(2 * n, 2 * n);
            jac << model.jacobian.dp_dtheta, model.jacobian.dp_dv, model.jacobian.dq_dtheta,
                model.jacobian.dq_dv;
            inv << model.inverse.dtheta_dp, model.inverse.dtheta_dq, model.inverse.dv_dp,
                model.inverse.dv_dq;
            write_jacobian_csv((dir / "jacobian.csv").string(), jac);
            write_jacobian_csv((dir / "jacobian_inverse.csv").string(), inv);
            write_jacobian_csv((dir / "control_map.csv").string(), model.control_map.response);
        }
    });
}

vvc_status vvc_validate_files(const vvc_network* net, const vvc_scenario* scenario,
                              const char* setpoints_csv, const char* predicted_csv,
                              const char* out_csv) {
    if (!net || !scenario || !setpoints_csv || !predicted_csv || !out_csv)
        return invalid("vvc_validate_files: null argument");
    return guarded([&] {
        const GridNetwork loaded = apply_scenario_loads(net->net, scenario->config);
        const double s_base_kva = loaded.base().mva * 1000.0;
        Eigen::VectorXd p_spec = -loaded.p_load_vector();
        Eigen::VectorXd q_spec = -loaded.q_load_vector();
        for (const auto& row : read_setpoints_csv(setpoints_csv)) {
            if (!loaded.is_controllable(row.bus))
                throw Error(ErrorCode::parse, std::string(setpoints_csv) +
                                                  ": setpoint for non-device bus " +
                                                  std::to_string(row.bus));
            p_spec[row.bus] += row.p_kw / s_base_kva * row.z;
            q_spec[row.bus] += row.q_kvar / s_base_kva * row.z;
        }
        const Eigen::VectorXd predicted =
            read_predicted_csv(predicted_csv, loaded.bus_count());
        const PowerFlowSolution acpf = solve_acpf(loaded, p_spec, q_spec);
        if (!acpf.converged)
            throw Error(ErrorCode::no_convergence,
                        "validation power flow did not converge");
        ValidationReport report;
        double sq = 0.0;
        for (int i = 0; i < loaded.bus_count(); ++i) {
            ValidationRow row;
            row.bus = i;
            row.predicted_v = predicted[i];
            row.validated_v = acpf.v[i];
            row.signed_error = predicted[i] - acpf.v[i];
            row.relative_error_pct = row.signed_error / acpf.v[i] * 100.0;
            sq += row.signed_error * row.signed_error;
            report.rows.push_back(row);
        }
        report.rmse = std::sqrt(sq / loaded.bus_count());
        write_validation_csv(out_csv, report);
    });
}

vvc_status vvc_check_run(const vvc_network* net, const vvc_scenario* scenario,
                         const vvc_check_options* options, int* failures_out) {
    if (!net || !scenario) return invalid("vvc_check_run: null argument");
    return guarded([&] {
        CheckOptions opts;
        if (options) {
            if (options->prox_draws > 0) opts.prox_draws = options->prox_draws;
            if (options->perturb)
                opts.perturb = JacobianPerturbation{options->perturb_row, options->perturb_col,
                                                    options->perturb_delta};
        }
        const auto results = run_property_checks(net->net, scenario->config, opts);
        int failures = 0;
        for (const auto& r : results) {
            std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                        r.detail.c_str());
            if (!r.pass) ++failures;
        }
        std::fflush(stdout);
        if (failures_out) *failures_out = failures;
    });
}

} // extern "C"
