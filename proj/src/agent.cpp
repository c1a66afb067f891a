#include "voltvar/agent.hpp"

#include <algorithm>
#include <cmath>

#include "voltvar/error.hpp"

namespace voltvar {

namespace {

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

} // namespace

double apparent_power_penalty(double p, double q, double z, double s_max) {
    const double zp = z * p, zq = z * q, zs = z * s_max;
    return std::max(0.0, zp * zp + zq * zq - zs * zs);
}

double penalty_subgrad_z(double p, double q, double z, double s_max) {
    const double g = p * p + q * q - s_max * s_max;
    return g > 0.0 ? 2.0 * z * g : 0.0;
}

Eigen::Vector2d penalty_prox(const Eigen::Vector2d& v, double z, double eta_rho, double s_max) {
    const double norm = v.norm();
    if (norm == 0.0) return v;
    const double shrink = 1.0 / (1.0 + 2.0 * eta_rho * z * z);
    const double kappa = std::min(1.0, std::max(s_max / norm, shrink));
    return kappa * v;
}

StateGradient state_gradients(int bus, std::span<const DualShare> neighbor_duals,
                              const std::vector<int>& jac_nbrs, const JacobianBlocks& jacobian,
                              double alpha, double dv) {
    StateGradient grad;
    grad.v = 2.0 * alpha * dv;
    for (int j : jac_nbrs) {
        const DualShare* share = nullptr;
        for (const auto& s : neighbor_duals)
            if (s.bus == j) {
                share = &s;
                break;
            }
        if (!share)
            throw Error(ErrorCode::protocol, "state_gradients: bus " + std::to_string(bus) +
                                                 " is missing the dual share of neighbor " +
                                                 std::to_string(j));
        grad.v -= share->dual_p * jacobian.dp_dv(j, bus) + share->dual_q * jacobian.dq_dv(j, bus);
        grad.theta -=
            share->dual_p * jacobian.dp_dtheta(j, bus) + share->dual_q * jacobian.dq_dtheta(j, bus);
    }
    return grad;
}

void update_state(AgentState& state, const StateGradient& grad, double eta1, const Limits& limits,
                  double v_nominal) {
    state.dv = clip(state.dv - eta1 * grad.v, limits.v_min - v_nominal, limits.v_max - v_nominal);
    state.dtheta = clip(state.dtheta - eta1 * grad.theta, -limits.angle_max, limits.angle_max);
}

double update_dispatch(const AgentState& state, double eta2, double beta, double rho,
                       double s_max) {
    const double slope = beta + state.dual_p * state.p_ctrl + state.dual_q * state.q_ctrl +
                         rho * penalty_subgrad_z(state.p_ctrl, state.q_ctrl, state.z, s_max);
    return clip(state.z - eta2 * slope, 0.0, 1.0);
}

Eigen::Vector2d update_setpoints(const AgentState& state, double eta2, double rho,
                                 const DeviceBox& box) {
    Eigen::Vector2d v(state.p_ctrl - eta2 * state.dual_p * state.z,
                      state.q_ctrl - eta2 * state.dual_q * state.z);
    v = penalty_prox(v, state.z, eta2 * rho, box.s_max);
    return {clip(v[0], box.p_min, box.p_max), clip(v[1], box.q_min, box.q_max)};
}

PowerResidual dual_residuals(int bus, const AgentState& state, bool controllable,
                             std::span<const StateShare> neighbor_states,
                             const std::vector<int>& jac_nbrs, const JacobianBlocks& jacobian,
                             double p_load, double q_load, double p0, double q0) {
    PowerResidual r;
    r.p = (controllable ? state.p_ctrl * state.z : 0.0) - p_load - p0;
    r.q = (controllable ? state.q_ctrl * state.z : 0.0) - q_load - q0;
    for (int j : jac_nbrs) {
        const StateShare* share = nullptr;
        for (const auto& s : neighbor_states)
            if (s.bus == j) {
                share = &s;
                break;
            }
        if (!share)
            throw Error(ErrorCode::protocol, "dual_residuals: bus " + std::to_string(bus) +
                                                 " is missing the state share of neighbor " +
                                                 std::to_string(j));
        r.p -= jacobian.dp_dtheta(bus, j) * share->dtheta + jacobian.dp_dv(bus, j) * share->dv;
        r.q -= jacobian.dq_dtheta(bus, j) * share->dtheta + jacobian.dq_dv(bus, j) * share->dv;
    }
    return r;
}

void update_duals(AgentState& state, const PowerResidual& residual, double gamma) {
    state.dual_p += gamma * residual.p;
    state.dual_q += gamma * residual.q;
}

double local_objective(const AgentState& state, bool controllable, double alpha, double beta,
                       double rho, double s_max) {
    double obj = alpha * state.dv * state.dv;
    if (controllable)
        obj += beta * state.z +
               rho * apparent_power_penalty(state.p_ctrl, state.q_ctrl, state.z, s_max);
    return obj;
}

} // namespace voltvar
