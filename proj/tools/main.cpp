// Command-line driver for the Volt/VAr control simulator. Talks to the core
// exclusively through the shared-library C interface.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "voltvar/voltvar.h"

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("VOLTVAR_LOG");
    if (!env) return LogLevel::info;
    const std::string value(env);
    if (value == "quiet") return LogLevel::quiet;
    if (value == "debug") return LogLevel::debug;
    return LogLevel::info;
}

void info(const std::string& message) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "%s\n", message.c_str());
}

struct NetworkHandle {
    vvc_network* ptr = nullptr;
    ~NetworkHandle() { vvc_network_free(ptr); }
};
struct ScenarioHandle {
    vvc_scenario* ptr = nullptr;
    ~ScenarioHandle() { vvc_scenario_free(ptr); }
};
struct BaselineHandle {
    vvc_baseline* ptr = nullptr;
    ~BaselineHandle() { vvc_baseline_free(ptr); }
};
struct RunHandle {
    vvc_run* ptr = nullptr;
    ~RunHandle() { vvc_run_free(ptr); }
};

[[noreturn]] void fail(const std::string& op, vvc_status status) {
    std::fprintf(stderr, "error: %s failed (%s): %s\n", op.c_str(), vvc_status_name(status),
                 vvc_last_error());
    std::exit(1);
}

void require(vvc_status status, const std::string& op) {
    if (status != VVC_OK) fail(op, status);
}

struct CommonArgs {
    std::string network;
    std::string scenario;
    std::string out = "out";
    int max_iter = 0;
    int consensus_rounds = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_out = true) {
    cmd->add_option("--network", args.network, "network JSON file")->required();
    cmd->add_option("--scenario", args.scenario, "scenario JSON file");
    if (with_out) cmd->add_option("--out", args.out, "output directory");
    cmd->add_option("--max-iter", args.max_iter, "override the iteration cap");
    cmd->add_option("--consensus-rounds", args.consensus_rounds,
                    "override consensus rounds per iteration");
}

void load_inputs(const CommonArgs& args, NetworkHandle& net, ScenarioHandle& scenario) {
    require(vvc_network_load_file(args.network.c_str(), &net.ptr), "loading " + args.network);
    if (args.scenario.empty())
        require(vvc_scenario_default(&scenario.ptr), "building default scenario");
    else
        require(vvc_scenario_load_file(args.scenario.c_str(), &scenario.ptr),
                "loading " + args.scenario);
    if (args.max_iter > 0)
        require(vvc_scenario_set_max_iterations(scenario.ptr, args.max_iter), "--max-iter");
    if (args.consensus_rounds >= 0)
        require(vvc_scenario_set_consensus_rounds(scenario.ptr, args.consensus_rounds),
                "--consensus-rounds");
    info("loaded network '" + args.network + "' (" +
         std::to_string(vvc_network_bus_count(net.ptr)) + " buses, " +
         std::to_string(vvc_network_device_count(net.ptr)) + " devices)");
}

int cmd_baseline(const CommonArgs& args) {
    NetworkHandle net;
    ScenarioHandle scenario;
    load_inputs(args, net, scenario);
    BaselineHandle baseline;
    require(vvc_baseline_solve(net.ptr, scenario.ptr, &baseline.ptr), "baseline power flow");
    const std::string csv = args.out + "/baseline_voltages.csv";
    require(vvc_baseline_write_csv(baseline.ptr, net.ptr, csv.c_str()), "writing " + csv);
    info("baseline solved in " + std::to_string(vvc_baseline_iterations(baseline.ptr)) +
         " iterations, min voltage " + std::to_string(vvc_baseline_min_voltage(baseline.ptr)) +
         " p.u.");
    info("wrote " + csv);
    return 0;
}

int cmd_run(const CommonArgs& args, bool dump_jacobian) {
    NetworkHandle net;
    ScenarioHandle scenario;
    load_inputs(args, net, scenario);
    RunHandle run;
    require(vvc_run_simulate(net.ptr, scenario.ptr, &run.ptr), "simulation");
    info(std::string(vvc_run_converged(run.ptr) ? "converged" : "hit the iteration cap") +
         " after " + std::to_string(vvc_run_iterations(run.ptr)) + " iterations; validation RMSE " +
         std::to_string(vvc_run_validation_rmse(run.ptr)) + " p.u.");
    require(vvc_run_write_outputs(run.ptr, args.out.c_str(), dump_jacobian ? 1 : 0),
            "writing outputs to " + args.out);
    info("wrote trace.csv, setpoints.csv, predicted_voltages.csv, validation.csv, "
         "baseline_voltages.csv, summary.json under " +
         args.out);
    return vvc_run_converged(run.ptr) ? 0 : 2;
}

int cmd_validate(const CommonArgs& args, const std::string& from) {
    NetworkHandle net;
    ScenarioHandle scenario;
    load_inputs(args, net, scenario);
    const std::string setpoints = from + "/setpoints.csv";
    const std::string predicted = from + "/predicted_voltages.csv";
    const std::string out_csv = args.out + "/validation.csv";
    require(vvc_validate_files(net.ptr, scenario.ptr, setpoints.c_str(), predicted.c_str(),
                               out_csv.c_str()),
            "validation");
    info("wrote " + out_csv);
    return 0;
}

int cmd_check(const CommonArgs& args, int prox_draws, const std::string& perturb) {
    NetworkHandle net;
    ScenarioHandle scenario;
    load_inputs(args, net, scenario);
    vvc_check_options opts{};
    opts.prox_draws = prox_draws;
    if (!perturb.empty()) {
        opts.perturb = 1;
        if (std::sscanf(perturb.c_str(), "%d,%d,%lf", &opts.perturb_row, &opts.perturb_col,
                        &opts.perturb_delta) != 3) {
            std::fprintf(stderr, "error: --perturb-jacobian expects row,col,delta\n");
            return 1;
        }
    }
    int failures = 0;
    require(vvc_check_run(net.ptr, scenario.ptr, &opts, &failures), "property checks");
    return failures == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized Volt/VAr control simulator"};
    app.require_subcommand(1);

    CommonArgs baseline_args;
    auto* baseline = app.add_subcommand("baseline", "solve the uncontrolled AC power flow");
    add_common(baseline, baseline_args);

    CommonArgs run_args;
    bool dump_jacobian = false;
    auto* run = app.add_subcommand("run", "run the decentralized controller and validate");
    add_common(run, run_args);
    run->add_flag("--dump-jacobian", dump_jacobian,
                  "also write jacobian.csv, jacobian_inverse.csv, control_map.csv");

    CommonArgs validate_args;
    std::string validate_from = "out";
    auto* validate =
        app.add_subcommand("validate", "recompute validation.csv from a previous run directory");
    add_common(validate, validate_args);
    validate->add_option("--from", validate_from, "directory holding setpoints.csv and "
                                                  "predicted_voltages.csv");

    CommonArgs check_args;
    int prox_draws = 0;
    std::string perturb;
    auto* check = app.add_subcommand("check", "run the numerical property suite");
    add_common(check, check_args, false);
    check->add_option("--prox-draws", prox_draws, "samples for the prox oracle comparison");
    check->add_option("--perturb-jacobian", perturb,
                      "fault-injection hook: row,col,delta added to dP/dtheta");

    CLI11_PARSE(app, argc, argv);

    if (baseline->parsed()) return cmd_baseline(baseline_args);
    if (run->parsed()) return cmd_run(run_args, dump_jacobian);
    if (validate->parsed()) return cmd_validate(validate_args, validate_from);
    if (check->parsed()) return cmd_check(check_args, prox_draws, perturb);
    return 1;
}
