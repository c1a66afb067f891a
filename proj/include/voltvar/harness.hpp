#pragma once

#include <optional>
#include <string>
#include <vector>

#include "voltvar/agent.hpp"
#include "voltvar/consensus.hpp"
#include "voltvar/grid.hpp"
#include "voltvar/linearization.hpp"
#include "voltvar/power_flow.hpp"

namespace voltvar {

struct LoadOverride {
    int bus = -1;
    std::optional<double> p = {};       // absolute p.u. replacement
    std::optional<double> q = {};
    double p_scale = 1.0;
    double q_scale = 1.0;
};

struct ScenarioConfig {
    double alpha = 1.0; // voltage-deviation weight
    double beta = 0.01; // activation cost
    double rho = 0.1;   // apparent-power penalty weight
    double eta1 = 5e-3; // state step
    double eta2 = 5e-3; // control step
    double gamma = 5e-5; // dual step
    std::optional<double> alpha_con = {}; // default: half the stability bound
    Limits limits;
    double eps_iterate = 5e-4;
    // Power-balance gate for termination. The iterate-change floor of the
    // dispatch bleed (eta2 * beta = 5e-5) sits below eps_iterate from the
    // second iteration on, so iterate change alone cannot certify anything;
    // a run only counts as converged once the worst linearized power-balance
    // violation is also below this level.
    double eps_residual = 0.1;
    int max_iter = 10000;
    int consensus_rounds = 5;
    double load_scale_p = 1.0;
    double load_scale_q = 1.0;
    std::vector<LoadOverride> load_overrides;
    std::string description;
};

struct TraceRow {
    int iteration = 0;       // 1-based
    double objective = 0.0;  // centralized objective at the post-update iterate
    double max_residual = 0.0;
    double iterate_change = 0.0; // infinity norm over the stacked iterate
    double stationarity_gap = 0.0;
    double v_min_pred = 0.0;
    double v_max_pred = 0.0;
    double disagreement = 0.0;
    double est_gap = 0.0; // max |consensus voltage estimate - primal dv|
    std::vector<double> p_ctrl; // p.u., device order
    std::vector<double> q_ctrl;
    std::vector<double> z;
};

struct RunResult {
    bool converged = false;
    int iterations = 0;
    double final_objective = 0.0;
};

struct ValidationRow {
    int bus = 0;
    double predicted_v = 0.0;
    double validated_v = 0.0;
    double signed_error = 0.0;       // predicted - validated
    double relative_error_pct = 0.0; // signed / validated * 100
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    double rmse = 0.0;
    PowerFlowSolution acpf;
};

/// AC power flow with scenario loads applied and every device off.
PowerFlowSolution baseline_run(const GridNetwork& net, const ScenarioConfig& config);

/// Scenario loads: network demand with global scaling and per-bus overrides.
GridNetwork apply_scenario_loads(const GridNetwork& net, const ScenarioConfig& config);

/// Synchronous multi-agent simulation. One outer iteration runs four stages -
/// state updates, control updates, dual ascent, consensus inner rounds - each
/// stage reading the previous stage's published snapshot, so agents within a
/// stage are order-independent. Single-threaded and deterministic.
class Simulation {
public:
    /// Applies scenario loads, solves the baseline power flow, and linearizes
    /// around it. Throws on baseline non-convergence.
    Simulation(const GridNetwork& net, const ScenarioConfig& config);

    /// One outer iteration; appends a trace row. Throws ErrorCode::diverged on
    /// non-finite variables or runaway residuals, naming bus and stage.
    void run_outer_iteration();

    /// Iterates until the stacked iterate change drops to eps_iterate or the
    /// iteration cap is hit.
    RunResult run();

    /// Re-solve the full AC power flow with the final effective injections and
    /// compare against the predicted voltages.
    ValidationReport validate() const;

    const GridNetwork& network() const { return net_; }
    const ScenarioConfig& config() const { return config_; }
    const PowerFlowSolution& baseline() const { return baseline_; }
    const LinearModel& model() const { return model_; }
    const std::vector<AgentState>& agents() const { return agents_; }
    const Eigen::MatrixXd& estimates() const { return estimates_; }
    const std::vector<TraceRow>& trace() const { return trace_; }
    double alpha_con() const { return alpha_con_; }

    /// Predicted magnitude v0 + dv per bus.
    Eigen::VectorXd predicted_voltages() const;
    /// Effective device injections (p z, q z), one column per device.
    Eigen::MatrixXd effective_injections() const;
    double objective() const;

private:
    Eigen::VectorXd stacked_iterate() const;
    void check_finite(const char* stage) const;

    GridNetwork net_;
    ScenarioConfig config_;
    PowerFlowSolution baseline_;
    LinearModel model_;
    std::vector<AgentState> agents_;
    Eigen::MatrixXd estimates_; // 2 n_c x n
    std::vector<ConsensusDevice> consensus_devices_;
    double alpha_con_ = 0.0;
    std::vector<TraceRow> trace_;
    int iteration_ = 0;
};

} // namespace voltvar
