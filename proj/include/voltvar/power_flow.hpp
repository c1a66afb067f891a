#pragma once

#include <optional>

#include <Eigen/Dense>

#include "voltvar/grid.hpp"

namespace voltvar {

struct PowerFlowOptions {
    double tolerance = 1e-8; // p.u. infinity-norm mismatch
    int max_iterations = 30;
};

struct PowerFlowSolution {
    Eigen::VectorXd v;     // p.u. magnitude per bus
    Eigen::VectorXd theta; // rad per bus
    Eigen::VectorXd p_inj; // realized p.u. injections (slack included)
    Eigen::VectorXd q_inj;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;
};

/// Partial derivatives of the nodal injection map at an operating point.
/// dp_dv / dq_dv are plain d/dV (not V-scaled), so [dP;dQ] = J [dtheta;dV].
struct JacobianBlocks {
    Eigen::MatrixXd dp_dtheta; // H
    Eigen::MatrixXd dp_dv;     // N
    Eigen::MatrixXd dq_dtheta; // K
    Eigen::MatrixXd dq_dv;     // L
};

struct InjectionPair {
    Eigen::VectorXd p;
    Eigen::VectorXd q;
};

/// Polar-form nodal injections:
///   P_i = V_i sum_j V_j (G_ij cos th_ij + B_ij sin th_ij)
///   Q_i = V_i sum_j V_j (G_ij sin th_ij - B_ij cos th_ij)
InjectionPair power_injections(const Eigen::MatrixXcd& admittance, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& theta);

/// Full Newton-Raphson AC power flow. p_spec/q_spec are per-bus injection
/// targets (slack entries ignored; the slack bus absorbs the residual).
/// Deterministic: identical inputs give bit-identical iterates.
PowerFlowSolution solve_acpf(const GridNetwork& net, const Eigen::VectorXd& p_spec,
                             const Eigen::VectorXd& q_spec,
                             const std::optional<PowerFlowSolution>& start = std::nullopt,
                             const PowerFlowOptions& options = {});

/// Jacobian blocks of power_injections at the solution's operating point.
JacobianBlocks compute_jacobian_blocks(const GridNetwork& net, const PowerFlowSolution& solution);

} // namespace voltvar
