#include "voltvar/harness.hpp"

#include <cmath>
#include <limits>

#include "voltvar/error.hpp"

namespace voltvar {

namespace {

constexpr double kResidualGuard = 1e3; // far outside any sane trajectory

Eigen::VectorXd scenario_loads(const Eigen::VectorXd& base, double scale,
                               const std::vector<LoadOverride>& overrides, bool active_channel) {
    Eigen::VectorXd out = base * scale;
    for (const auto& ov : overrides) {
        if (ov.bus < 0 || ov.bus >= out.size())
            throw Error(ErrorCode::invalid_argument,
                        "load override references unknown bus " + std::to_string(ov.bus));
        if (active_channel) {
            if (ov.p.has_value()) out[ov.bus] = *ov.p;
            out[ov.bus] *= ov.p_scale;
        } else {
            if (ov.q.has_value()) out[ov.bus] = *ov.q;
            out[ov.bus] *= ov.q_scale;
        }
    }
    return out;
}

} // namespace

GridNetwork apply_scenario_loads(const GridNetwork& net, const ScenarioConfig& config) {
    return net.with_loads(
        scenario_loads(net.p_load_vector(), config.load_scale_p, config.load_overrides, true),
        scenario_loads(net.q_load_vector(), config.load_scale_q, config.load_overrides, false));
}

PowerFlowSolution baseline_run(const GridNetwork& net, const ScenarioConfig& config) {
    const GridNetwork loaded = apply_scenario_loads(net, config);
    PowerFlowSolution sol =
        solve_acpf(loaded, -loaded.p_load_vector(), -loaded.q_load_vector());
    if (!sol.converged)
        throw Error(ErrorCode::no_convergence,
                    "baseline power flow did not converge (max mismatch " +
                        std::to_string(sol.max_mismatch) + " after " +
                        std::to_string(sol.iterations) + " iterations)");
    return sol;
}

Simulation::Simulation(const GridNetwork& net, const ScenarioConfig& config)
    : net_(apply_scenario_loads(net, config)), config_(config) {
    baseline_ = solve_acpf(net_, -net_.p_load_vector(), -net_.q_load_vector());
    if (!baseline_.converged)
        throw Error(ErrorCode::no_convergence,
                    "baseline power flow did not converge (max mismatch " +
                        std::to_string(baseline_.max_mismatch) + ")");
    model_ = linearize(net_, baseline_);

    agents_.assign(net_.bus_count(), AgentState{});
    // Devices start fully dispatched at an even four-quadrant capability
    // split; the updates dial the mix and the dispatch factor from there.
    for (const auto& dev : net_.devices()) {
        agents_[dev.bus].p_ctrl = dev.s_max / std::sqrt(2.0);
        agents_[dev.bus].q_ctrl = dev.s_max / std::sqrt(2.0);
    }
    const int nc = static_cast<int>(net_.devices().size());
    estimates_ = Eigen::MatrixXd::Zero(2 * nc, net_.bus_count());
    for (int d = 0; d < nc; ++d)
        consensus_devices_.push_back({net_.devices()[d].bus, d});

    const double bound = consensus_step_bound(net_.laplacian());
    alpha_con_ = config_.alpha_con.value_or(0.5 * bound);
    if (alpha_con_ <= 0.0 || alpha_con_ >= bound)
        throw Error(ErrorCode::invalid_argument,
                    "consensus step size " + std::to_string(alpha_con_) +
                        " outside the stability interval (0, " + std::to_string(bound) + ")");
}

Eigen::VectorXd Simulation::stacked_iterate() const {
    const int n = net_.bus_count();
    const int nc = static_cast<int>(net_.devices().size());
    Eigen::VectorXd x(4 * n + 3 * nc);
    for (int i = 0; i < n; ++i) {
        x[i] = agents_[i].dv;
        x[n + i] = agents_[i].dtheta;
        x[2 * n + i] = agents_[i].dual_p;
        x[3 * n + i] = agents_[i].dual_q;
    }
    for (int d = 0; d < nc; ++d) {
        const AgentState& a = agents_[net_.devices()[d].bus];
        x[4 * n + 3 * d] = a.p_ctrl;
        x[4 * n + 3 * d + 1] = a.q_ctrl;
        x[4 * n + 3 * d + 2] = a.z;
    }
    return x;
}

void Simulation::check_finite(const char* stage) const {
    for (int i = 0; i < net_.bus_count(); ++i) {
        const AgentState& a = agents_[i];
        const bool ok = std::isfinite(a.dv) && std::isfinite(a.dtheta) &&
                        std::isfinite(a.dual_p) && std::isfinite(a.dual_q) &&
                        std::isfinite(a.p_ctrl) && std::isfinite(a.q_ctrl) && std::isfinite(a.z);
        if (!ok)
            throw Error(ErrorCode::diverged, std::string("non-finite variable at bus ") +
                                                 std::to_string(i) + " after stage " + stage +
                                                 " of iteration " +
                                                 std::to_string(iteration_ + 1));
    }
    if (!estimates_.allFinite())
        throw Error(ErrorCode::diverged,
                    std::string("non-finite consensus estimate after stage ") + stage +
                        " of iteration " + std::to_string(iteration_ + 1));
}

void Simulation::run_outer_iteration() {
    const int n = net_.bus_count();
    const int nc = static_cast<int>(net_.devices().size());
    const int slack = net_.slack_id();
    const Eigen::VectorXd before = stacked_iterate();

    // Stage 1: state variables. Gradients are computed from the published
    // iteration-k duals for every bus before any state is touched.
    std::vector<StateGradient> grads(n);
    std::vector<DualShare> duals;
    duals.reserve(n);
    for (int i = 0; i < n; ++i) duals.push_back({i, agents_[i].dual_p, agents_[i].dual_q});
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        grads[i] = state_gradients(i, duals, model_.jac_neighborhoods[i], model_.jacobian,
                                   config_.alpha, agents_[i].dv);
    }
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        update_state(agents_[i], grads[i], config_.eta1, config_.limits, model_.v0[i]);
    }
    check_finite("states");

    // Stage 2: control variables, dispatch factor first, then setpoints
    // against the already-updated factor. Purely local per device.
    for (const auto& dev : net_.devices()) {
        AgentState& a = agents_[dev.bus];
        a.z = update_dispatch(a, config_.eta2, config_.beta, config_.rho, dev.s_max);
        const DeviceBox box{dev.p_min, dev.p_max, dev.q_min, dev.q_max, dev.s_max};
        const Eigen::Vector2d pq = update_setpoints(a, config_.eta2, config_.rho, box);
        a.p_ctrl = pq[0];
        a.q_ctrl = pq[1];
    }
    check_finite("controls");

    // Stage 3: dual ascent on the residuals of the freshly published primals.
    std::vector<StateShare> states;
    states.reserve(n);
    for (int i = 0; i < n; ++i) states.push_back({i, agents_[i].dtheta, agents_[i].dv});
    std::vector<PowerResidual> residuals(n);
    double max_residual = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        residuals[i] = dual_residuals(i, agents_[i], net_.is_controllable(i), states,
                                      model_.jac_neighborhoods[i], model_.jacobian,
                                      net_.buses()[i].p_load, net_.buses()[i].q_load,
                                      model_.p0[i], model_.q0[i]);
        max_residual =
            std::max({max_residual, std::abs(residuals[i].p), std::abs(residuals[i].q)});
    }
    for (int i = 0; i < n; ++i) {
        if (i == slack) continue;
        update_duals(agents_[i], residuals[i], config_.gamma);
    }
    check_finite("duals");
    if (max_residual > kResidualGuard)
        throw Error(ErrorCode::diverged, "power-balance residual " +
                                             std::to_string(max_residual) +
                                             " exceeded the divergence guard at iteration " +
                                             std::to_string(iteration_ + 1));

    // Stage 4: consensus inner loop on the new effective injections.
    Eigen::MatrixXd u_hat(2, nc);
    for (int d = 0; d < nc; ++d) {
        const AgentState& a = agents_[net_.devices()[d].bus];
        u_hat.col(d) = effective_injection(a.p_ctrl, a.q_ctrl, a.z);
    }
    std::vector<std::vector<int>> nbrs;
    nbrs.reserve(n);
    for (int i = 0; i < n; ++i) nbrs.push_back(net_.neighbors(i));
    for (int round = 0; round < config_.consensus_rounds; ++round)
        estimates_ = ci_step(estimates_, nbrs, alpha_con_, consensus_devices_, u_hat);
    check_finite("consensus");

    ++iteration_;

    const Eigen::VectorXd after = stacked_iterate();
    const Eigen::VectorXd delta = (after - before).cwiseAbs();
    double gap = 0.0;
    for (int i = 0; i < 2 * n; ++i) gap = std::max(gap, delta[i] / config_.eta1);
    for (int i = 2 * n; i < 4 * n; ++i) gap = std::max(gap, delta[i] / config_.gamma);
    for (int i = 4 * n; i < delta.size(); ++i) gap = std::max(gap, delta[i] / config_.eta2);

    TraceRow row;
    row.iteration = iteration_;
    row.objective = objective();
    row.max_residual = max_residual;
    row.iterate_change = delta.size() ? delta.maxCoeff() : 0.0;
    row.stationarity_gap = gap + max_residual;
    const Eigen::VectorXd v_pred = predicted_voltages();
    row.v_min_pred = v_pred.minCoeff();
    row.v_max_pred = v_pred.maxCoeff();
    row.disagreement = disagreement(estimates_);
    double est_gap = 0.0;
    for (int i = 0; i < n; ++i) {
        const VoltageRow vr = voltage_row(model_.control_map, i);
        const double est = vr.sensitivity.dot(estimates_.col(i)) + vr.offset;
        est_gap = std::max(est_gap, std::abs(est - agents_[i].dv));
    }
    row.est_gap = est_gap;
    for (int d = 0; d < nc; ++d) {
        const AgentState& a = agents_[net_.devices()[d].bus];
        row.p_ctrl.push_back(a.p_ctrl);
        row.q_ctrl.push_back(a.q_ctrl);
        row.z.push_back(a.z);
    }
    trace_.push_back(std::move(row));
}

RunResult Simulation::run() {
    RunResult result;
    while (iteration_ < config_.max_iter) {
        run_outer_iteration();
        if (trace_.back().iterate_change <= config_.eps_iterate &&
            trace_.back().max_residual <= config_.eps_residual) {
            result.converged = true;
            break;
        }
    }
    result.iterations = iteration_;
    result.final_objective = objective();
    return result;
}

double Simulation::objective() const {
    double total = 0.0;
    for (int i = 0; i < net_.bus_count(); ++i) {
        const int d = net_.device_index(i);
        total += local_objective(agents_[i], d >= 0, config_.alpha, config_.beta, config_.rho,
                                 d >= 0 ? net_.devices()[d].s_max : 0.0);
    }
    return total;
}

Eigen::VectorXd Simulation::predicted_voltages() const {
    Eigen::VectorXd v(net_.bus_count());
    for (int i = 0; i < net_.bus_count(); ++i) v[i] = model_.v0[i] + agents_[i].dv;
    return v;
}

Eigen::MatrixXd Simulation::effective_injections() const {
    const int nc = static_cast<int>(net_.devices().size());
    Eigen::MatrixXd u(2, nc);
    for (int d = 0; d < nc; ++d) {
        const AgentState& a = agents_[net_.devices()[d].bus];
        u.col(d) = effective_injection(a.p_ctrl, a.q_ctrl, a.z);
    }
    return u;
}

ValidationReport Simulation::validate() const {
    Eigen::VectorXd p_spec = -net_.p_load_vector();
    Eigen::VectorXd q_spec = -net_.q_load_vector();
    const Eigen::MatrixXd u = effective_injections();
    for (size_t d = 0; d < net_.devices().size(); ++d) {
        p_spec[net_.devices()[d].bus] += u(0, d);
        q_spec[net_.devices()[d].bus] += u(1, d);
    }
    PowerFlowSolution acpf = solve_acpf(net_, p_spec, q_spec, baseline_);
    if (!acpf.converged)
        throw Error(ErrorCode::no_convergence,
                    "validation power flow did not converge (max mismatch " +
                        std::to_string(acpf.max_mismatch) + ")");

    ValidationReport report;
    const Eigen::VectorXd predicted = predicted_voltages();
    double sq_sum = 0.0;
    for (int i = 0; i < net_.bus_count(); ++i) {
        ValidationRow row;
        row.bus = i;
        row.predicted_v = predicted[i];
        row.validated_v = acpf.v[i];
        row.signed_error = predicted[i] - acpf.v[i];
        row.relative_error_pct = row.signed_error / acpf.v[i] * 100.0;
        sq_sum += row.signed_error * row.signed_error;
        report.rows.push_back(row);
    }
    report.rmse = std::sqrt(sq_sum / net_.bus_count());
    report.acpf = std::move(acpf);
    return report;
}

} // namespace voltvar
