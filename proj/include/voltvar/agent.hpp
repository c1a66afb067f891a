#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "voltvar/linearization.hpp"

namespace voltvar {

struct Limits {
    double v_min = 0.95;                      // p.u.
    double v_max = 1.05;                      // p.u.
    double angle_max = 0.5235987755982988;    // rad (pi/6)
};

/// Per-bus optimization variables. The control triple is meaningful only for
/// buses hosting a device. Dispatch starts fully on (z = 1) so the setpoint
/// gradient path is live from the first iteration; the activation cost then
/// bleeds z downward until the dual terms balance it.
struct AgentState {
    double dv = 0.0;     // p.u. voltage deviation
    double dtheta = 0.0; // rad angle deviation
    double dual_p = 0.0;
    double dual_q = 0.0;
    double p_ctrl = 0.0; // p.u. setpoint
    double q_ctrl = 0.0;
    double z = 1.0;      // dispatch factor in [0,1]
};

/// Messages exchanged with Jacobian neighbors.
struct DualShare {
    int bus;
    double dual_p;
    double dual_q;
};
struct StateShare {
    int bus;
    double dtheta;
    double dv;
};

struct StateGradient {
    double v = 0.0;
    double theta = 0.0;
};
struct PowerResidual {
    double p = 0.0;
    double q = 0.0;
};

/// Soft apparent-power penalty: max{0, (zp)^2 + (zq)^2 - (s_max z)^2}.
double apparent_power_penalty(double p, double q, double z, double s_max);

/// Subgradient of the penalty in z: 2 z g when g = p^2 + q^2 - s_max^2 > 0.
double penalty_subgrad_z(double p, double q, double z, double s_max);

/// Proximal map of eta_rho * penalty(. , . , z) at v: radial scaling w = kappa v
/// with kappa = min{1, max{s_max/|v|, 1/(1 + 2 eta_rho z^2)}}.
Eigen::Vector2d penalty_prox(const Eigen::Vector2d& v, double z, double eta_rho, double s_max);

/// Lagrangian gradient in (dv_i, dtheta_i). Every Jacobian neighbor's duals
/// must be present in `neighbor_duals` (self included); a missing share is a
/// protocol error. Note the transposed (j,i) Jacobian indexing: constraint j
/// couples to variable i.
StateGradient state_gradients(int bus, std::span<const DualShare> neighbor_duals,
                              const std::vector<int>& jac_nbrs, const JacobianBlocks& jacobian,
                              double alpha, double dv);

/// Projected gradient step on (dv, dtheta). Not applicable to the slack bus.
void update_state(AgentState& state, const StateGradient& grad, double eta1, const Limits& limits,
                  double v_nominal);

/// Projected gradient step on the dispatch factor.
double update_dispatch(const AgentState& state, double eta2, double beta, double rho, double s_max);

struct DeviceBox {
    double p_min, p_max, q_min, q_max, s_max;
};

/// Setpoint update for one device: smooth gradient step using the already
/// updated dispatch factor, proximal shrink for the apparent-power penalty,
/// then coordinate-wise clip to the hardware box.
Eigen::Vector2d update_setpoints(const AgentState& state, double eta2, double rho,
                                 const DeviceBox& box);

/// Power-balance residuals of the linearized model at the current iterate;
/// `neighbor_states` must cover the full Jacobian neighborhood (self included).
PowerResidual dual_residuals(int bus, const AgentState& state, bool controllable,
                             std::span<const StateShare> neighbor_states,
                             const std::vector<int>& jac_nbrs, const JacobianBlocks& jacobian,
                             double p_load, double q_load, double p0, double q0);

/// Gradient ascent on the multipliers. Not applicable to the slack bus.
void update_duals(AgentState& state, const PowerResidual& residual, double gamma);

/// alpha dv^2 plus, for controllable buses, beta z + rho penalty.
double local_objective(const AgentState& state, bool controllable, double alpha, double beta,
                       double rho, double s_max);

} // namespace voltvar
