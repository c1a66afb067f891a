#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace voltvar {

/// Placement of one device's 2-vector inside the stacked control estimate:
/// rows 2*block and 2*block+1 of each per-bus estimate column.
struct ConsensusDevice {
    int bus;
    int block;
};

/// (p z, q z): the injection a device actually realizes.
Eigen::Vector2d effective_injection(double p_ctrl, double q_ctrl, double z);

/// One synchronous consensus+innovation round. `estimates` holds one column
/// per bus (dimension 2 n_c); `u_hat` holds one column per device, ordered by
/// block. Non-controllable buses relay by diffusion only. Both terms read the
/// pre-round snapshot.
Eigen::MatrixXd ci_step(const Eigen::MatrixXd& estimates,
                        const std::vector<std::vector<int>>& neighbors, double alpha_con,
                        std::span<const ConsensusDevice> devices, const Eigen::MatrixXd& u_hat);

/// Stability bound 2 / lambda_max(L) for the diffusion step size.
double consensus_step_bound(const Eigen::MatrixXd& laplacian);

/// Max over bus pairs of the infinity-norm estimate difference.
double disagreement(const Eigen::MatrixXd& estimates);

} // namespace voltvar
