#pragma once

#include <vector>

#include <Eigen/Dense>

#include "voltvar/power_flow.hpp"

namespace voltvar {

/// Zero-padded inverse of the reduced power-flow Jacobian, split into the four
/// response blocks. Rows/columns at the slack bus are identically zero.
struct InverseJacobian {
    Eigen::MatrixXd dtheta_dp; // angle response to active injections
    Eigen::MatrixXd dtheta_dq;
    Eigen::MatrixXd dv_dp; // voltage response to active injections
    Eigen::MatrixXd dv_dq;
    double rcond = 0.0; // reciprocal condition estimate of the reduced matrix
};

/// Sensitivity map from controllable-device injections to the stacked state
/// deviation [dtheta; dv], plus the constant offset from non-controlled
/// injection deviations.
struct ControlMap {
    Eigen::MatrixXd response; // 2n x 2n_c, column pair (P, Q) per device
    Eigen::VectorXd offset;   // length 2n
    std::vector<int> ctrl_order; // device buses in column order
    std::vector<int> block_index; // per bus: device block p(i) (0-based) or -1
};

/// Remove the slack row/column pair, invert with dense partial-pivot LU, and
/// re-pad with zeros. Throws ErrorCode::singular when the reciprocal condition
/// estimate falls below 1e-12, reporting the estimate.
InverseJacobian reduce_pad_invert(const JacobianBlocks& jacobian, int slack_id);

/// Columns of the padded inverse at the controllable buses, ordered
/// (P_c1, Q_c1, P_c2, ...), theta rows stacked above V rows.
ControlMap build_control_map(const InverseJacobian& inv, const std::vector<ControllableDevice>& devices,
                             int slack_id);

/// offset = pad(Jred^-1) [dp_fixed; dq_fixed]; zero when non-controlled
/// injections sit at their linearization-point values.
Eigen::VectorXd compute_offset(const InverseJacobian& inv, const Eigen::VectorXd& dp_fixed,
                               const Eigen::VectorXd& dq_fixed);

struct VoltageRow {
    Eigen::RowVectorXd sensitivity; // length 2 n_c
    double offset = 0.0;
};

/// Row of the voltage block of the control map for one bus, with its offset.
VoltageRow voltage_row(const ControlMap& map, int bus);

/// Buses j with any structural coupling to i in the forward Jacobian:
/// {j : J block (i,j) or (j,i) nonzero}. Always contains i.
std::vector<int> jac_neighborhood(const JacobianBlocks& jacobian, int bus);

/// Everything derived from one linearization point, built once per scenario
/// and read-only afterwards.
struct LinearModel {
    Eigen::VectorXd v0;     // linearization-point magnitudes
    Eigen::VectorXd theta0; // linearization-point angles
    Eigen::VectorXd p0;     // linearization-point injections
    Eigen::VectorXd q0;
    JacobianBlocks jacobian;
    InverseJacobian inverse;
    ControlMap control_map;
    std::vector<std::vector<int>> jac_neighborhoods; // per bus
};

/// Linearize around a converged power-flow solution.
LinearModel linearize(const GridNetwork& net, const PowerFlowSolution& solution);

} // namespace voltvar
