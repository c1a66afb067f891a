#include "voltvar/linearization.hpp"

#include <algorithm>

#include <Eigen/LU>

#include "voltvar/error.hpp"

namespace voltvar {

InverseJacobian reduce_pad_invert(const JacobianBlocks& jacobian, int slack_id) {
    const int n = static_cast<int>(jacobian.dp_dtheta.rows());
    std::vector<int> idx;
    idx.reserve(n - 1);
    for (int i = 0; i < n; ++i)
        if (i != slack_id) idx.push_back(i);
    const int m = static_cast<int>(idx.size());

    Eigen::MatrixXd reduced(2 * m, 2 * m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            reduced(r, c) = jacobian.dp_dtheta(idx[r], idx[c]);
            reduced(r, m + c) = jacobian.dp_dv(idx[r], idx[c]);
            reduced(m + r, c) = jacobian.dq_dtheta(idx[r], idx[c]);
            reduced(m + r, m + c) = jacobian.dq_dv(idx[r], idx[c]);
        }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(reduced);
    Eigen::MatrixXd inv = lu.inverse();
    const double norm_a = reduced.cwiseAbs().colwise().sum().maxCoeff();
    const double norm_inv = inv.cwiseAbs().colwise().sum().maxCoeff();
    const double rcond = (norm_a > 0.0 && norm_inv > 0.0) ? 1.0 / (norm_a * norm_inv) : 0.0;
    if (!inv.allFinite() || rcond < 1e-12)
        throw Error(ErrorCode::singular,
                    "reduced Jacobian is numerically singular (reciprocal condition estimate " +
                        std::to_string(rcond) + ")");

    InverseJacobian out;
    out.rcond = rcond;
    out.dtheta_dp = Eigen::MatrixXd::Zero(n, n);
    out.dtheta_dq = Eigen::MatrixXd::Zero(n, n);
    out.dv_dp = Eigen::MatrixXd::Zero(n, n);
    out.dv_dq = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            out.dtheta_dp(idx[r], idx[c]) = inv(r, c);
            out.dtheta_dq(idx[r], idx[c]) = inv(r, m + c);
            out.dv_dp(idx[r], idx[c]) = inv(m + r, c);
            out.dv_dq(idx[r], idx[c]) = inv(m + r, m + c);
        }
    return out;
}

ControlMap build_control_map(const InverseJacobian& inv,
                             const std::vector<ControllableDevice>& devices, int slack_id) {
    if (devices.empty())
        throw Error(ErrorCode::invalid_argument, "control map requires at least one device");
    const int n = static_cast<int>(inv.dtheta_dp.rows());
    const int nc = static_cast<int>(devices.size());

    ControlMap map;
    map.response = Eigen::MatrixXd::Zero(2 * n, 2 * nc);
    map.offset = Eigen::VectorXd::Zero(2 * n);
    map.block_index.assign(n, -1);
    for (int d = 0; d < nc; ++d) {
        const int bus = devices[d].bus;
        if (bus == slack_id)
            throw Error(ErrorCode::invalid_argument, "controllable device at the slack bus");
        map.ctrl_order.push_back(bus);
        map.block_index[bus] = d;
        map.response.block(0, 2 * d, n, 1) = inv.dtheta_dp.col(bus);
        map.response.block(0, 2 * d + 1, n, 1) = inv.dtheta_dq.col(bus);
        map.response.block(n, 2 * d, n, 1) = inv.dv_dp.col(bus);
        map.response.block(n, 2 * d + 1, n, 1) = inv.dv_dq.col(bus);
    }
    return map;
}

Eigen::VectorXd compute_offset(const InverseJacobian& inv, const Eigen::VectorXd& dp_fixed,
                               const Eigen::VectorXd& dq_fixed) {
    const int n = static_cast<int>(inv.dtheta_dp.rows());
    if (dp_fixed.size() != n || dq_fixed.size() != n)
        throw Error(ErrorCode::invalid_argument, "compute_offset: deviation size mismatch");
    Eigen::VectorXd offset(2 * n);
    offset.head(n) = inv.dtheta_dp * dp_fixed + inv.dtheta_dq * dq_fixed;
    offset.tail(n) = inv.dv_dp * dp_fixed + inv.dv_dq * dq_fixed;
    return offset;
}

VoltageRow voltage_row(const ControlMap& map, int bus) {
    const int n = static_cast<int>(map.offset.size()) / 2;
    if (bus < 0 || bus >= n)
        throw Error(ErrorCode::invalid_argument, "voltage_row: unknown bus " + std::to_string(bus));
    return {map.response.row(n + bus), map.offset[n + bus]};
}

std::vector<int> jac_neighborhood(const JacobianBlocks& jacobian, int bus) {
    const int n = static_cast<int>(jacobian.dp_dtheta.rows());
    if (bus < 0 || bus >= n)
        throw Error(ErrorCode::invalid_argument,
                    "jac_neighborhood: unknown bus " + std::to_string(bus));
    std::vector<int> nbrs;
    for (int j = 0; j < n; ++j) {
        const bool coupled = j == bus || jacobian.dp_dtheta(bus, j) != 0.0 ||
                             jacobian.dp_dv(bus, j) != 0.0 || jacobian.dq_dtheta(bus, j) != 0.0 ||
                             jacobian.dq_dv(bus, j) != 0.0 || jacobian.dp_dtheta(j, bus) != 0.0 ||
                             jacobian.dp_dv(j, bus) != 0.0 || jacobian.dq_dtheta(j, bus) != 0.0 ||
                             jacobian.dq_dv(j, bus) != 0.0;
        if (coupled) nbrs.push_back(j);
    }
    return nbrs;
}

LinearModel linearize(const GridNetwork& net, const PowerFlowSolution& solution) {
    if (!solution.converged)
        throw Error(ErrorCode::no_convergence, "cannot linearize around an unconverged solution");
    LinearModel model;
    model.v0 = solution.v;
    model.theta0 = solution.theta;
    model.p0 = solution.p_inj;
    model.q0 = solution.q_inj;
    model.jacobian = compute_jacobian_blocks(net, solution);
    model.inverse = reduce_pad_invert(model.jacobian, net.slack_id());
    model.control_map = build_control_map(model.inverse, net.devices(), net.slack_id());
    model.jac_neighborhoods.reserve(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i)
        model.jac_neighborhoods.push_back(jac_neighborhood(model.jacobian, i));
    return model;
}

} // namespace voltvar
