#include "voltvar/power_flow.hpp"

#include <cmath>

#include <Eigen/LU>

#include "voltvar/error.hpp"

namespace voltvar {

InjectionPair power_injections(const Eigen::MatrixXcd& admittance, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& theta) {
    const int n = static_cast<int>(v.size());
    if (admittance.rows() != n || admittance.cols() != n || theta.size() != n)
        throw Error(ErrorCode::invalid_argument, "power_injections: dimension mismatch");
    InjectionPair out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (int i = 0; i < n; ++i) {
        double p = 0.0, q = 0.0;
        for (int j = 0; j < n; ++j) {
            const double g = admittance(i, j).real();
            const double b = admittance(i, j).imag();
            if (g == 0.0 && b == 0.0) continue;
            const double th = theta[i] - theta[j];
            const double c = std::cos(th), s = std::sin(th);
            p += v[j] * (g * c + b * s);
            q += v[j] * (g * s - b * c);
        }
        out.p[i] = v[i] * p;
        out.q[i] = v[i] * q;
    }
    return out;
}

JacobianBlocks compute_jacobian_blocks(const GridNetwork& net, const PowerFlowSolution& solution) {
    const int n = net.bus_count();
    const Eigen::MatrixXcd& y = net.admittance();
    const Eigen::VectorXd& v = solution.v;
    const Eigen::VectorXd& th = solution.theta;
    const InjectionPair inj = power_injections(y, v, th);

    JacobianBlocks jac{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                       Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double g = y(i, j).real();
            const double b = y(i, j).imag();
            if (i == j) {
                jac.dp_dtheta(i, i) = -inj.q[i] - b * v[i] * v[i];
                jac.dp_dv(i, i) = inj.p[i] / v[i] + g * v[i];
                jac.dq_dtheta(i, i) = inj.p[i] - g * v[i] * v[i];
                jac.dq_dv(i, i) = inj.q[i] / v[i] - b * v[i];
            } else {
                if (g == 0.0 && b == 0.0) continue;
                const double thij = th[i] - th[j];
                const double c = std::cos(thij), s = std::sin(thij);
                jac.dp_dtheta(i, j) = v[i] * v[j] * (g * s - b * c);
                jac.dp_dv(i, j) = v[i] * (g * c + b * s);
                jac.dq_dtheta(i, j) = -v[i] * v[j] * (g * c + b * s);
                jac.dq_dv(i, j) = v[i] * (g * s - b * c);
            }
        }
    }
    return jac;
}

PowerFlowSolution solve_acpf(const GridNetwork& net, const Eigen::VectorXd& p_spec,
                             const Eigen::VectorXd& q_spec,
                             const std::optional<PowerFlowSolution>& start,
                             const PowerFlowOptions& options) {
    const int n = net.bus_count();
    if (p_spec.size() != n || q_spec.size() != n)
        throw Error(ErrorCode::invalid_argument, "solve_acpf: spec vector size mismatch");
    const int slack = net.slack_id();

    PowerFlowSolution sol;
    if (start.has_value()) {
        sol.v = start->v;
        sol.theta = start->theta;
    } else {
        sol.v.resize(n);
        sol.theta = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) sol.v[i] = net.buses()[i].v_nominal;
    }
    sol.v[slack] = net.buses()[slack].v_nominal;
    sol.theta[slack] = net.buses()[slack].theta_nominal;

    // non-slack index map
    std::vector<int> idx;
    idx.reserve(n - 1);
    for (int i = 0; i < n; ++i)
        if (i != slack) idx.push_back(i);
    const int m = static_cast<int>(idx.size());

    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const InjectionPair inj = power_injections(net.admittance(), sol.v, sol.theta);
        Eigen::VectorXd mismatch(2 * m);
        for (int k = 0; k < m; ++k) {
            mismatch[k] = p_spec[idx[k]] - inj.p[idx[k]];
            mismatch[m + k] = q_spec[idx[k]] - inj.q[idx[k]];
        }
        sol.max_mismatch = mismatch.size() ? mismatch.cwiseAbs().maxCoeff() : 0.0;
        sol.iterations = iter;
        if (sol.max_mismatch <= options.tolerance) {
            sol.converged = true;
            sol.p_inj = inj.p;
            sol.q_inj = inj.q;
            return sol;
        }
        if (iter == options.max_iterations) break;

        const JacobianBlocks jac = compute_jacobian_blocks(net, sol);
        Eigen::MatrixXd reduced(2 * m, 2 * m);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                reduced(r, c) = jac.dp_dtheta(idx[r], idx[c]);
                reduced(r, m + c) = jac.dp_dv(idx[r], idx[c]);
                reduced(m + r, c) = jac.dq_dtheta(idx[r], idx[c]);
                reduced(m + r, m + c) = jac.dq_dv(idx[r], idx[c]);
            }
        const Eigen::VectorXd step = reduced.partialPivLu().solve(mismatch);
        if (!step.allFinite())
            throw Error(ErrorCode::singular, "solve_acpf: singular Jacobian during iteration " +
                                                 std::to_string(iter));
        for (int k = 0; k < m; ++k) {
            sol.theta[idx[k]] += step[k];
            sol.v[idx[k]] += step[m + k];
        }
    }

    sol.converged = false;
    const InjectionPair inj = power_injections(net.admittance(), sol.v, sol.theta);
    sol.p_inj = inj.p;
    sol.q_inj = inj.q;
    return sol;
}

} // namespace voltvar
