#include "voltvar/consensus.hpp"

#include <Eigen/Eigenvalues>

#include "voltvar/error.hpp"

namespace voltvar {

Eigen::Vector2d effective_injection(double p_ctrl, double q_ctrl, double z) {
    return {p_ctrl * z, q_ctrl * z};
}

Eigen::MatrixXd ci_step(const Eigen::MatrixXd& estimates,
                        const std::vector<std::vector<int>>& neighbors, double alpha_con,
                        std::span<const ConsensusDevice> devices, const Eigen::MatrixXd& u_hat) {
    const int n = static_cast<int>(estimates.cols());
    if (static_cast<int>(neighbors.size()) != n)
        throw Error(ErrorCode::protocol, "ci_step: neighbor list size does not match bus count");

    Eigen::MatrixXd next = estimates;
    for (int i = 0; i < n; ++i)
        for (int j : neighbors[i]) {
            if (j < 0 || j >= n)
                throw Error(ErrorCode::protocol, "ci_step: neighbor index out of range");
            next.col(i) -= alpha_con * (estimates.col(i) - estimates.col(j));
        }
    for (const auto& dev : devices) {
        const int row = 2 * dev.block;
        if (dev.bus < 0 || dev.bus >= n || row + 1 >= estimates.rows() ||
            dev.block >= u_hat.cols())
            throw Error(ErrorCode::protocol, "ci_step: device placement out of range");
        next(row, dev.bus) += u_hat(0, dev.block) - estimates(row, dev.bus);
        next(row + 1, dev.bus) += u_hat(1, dev.block) - estimates(row + 1, dev.bus);
    }
    return next;
}

double consensus_step_bound(const Eigen::MatrixXd& laplacian) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian, Eigen::EigenvaluesOnly);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    if (lambda_max <= 0.0)
        throw Error(ErrorCode::invalid_argument,
                    "consensus_step_bound: Laplacian has no positive eigenvalue");
    return 2.0 / lambda_max;
}

double disagreement(const Eigen::MatrixXd& estimates) {
    if (estimates.cols() == 0) return 0.0;
    const Eigen::VectorXd spread =
        estimates.rowwise().maxCoeff() - estimates.rowwise().minCoeff();
    return spread.size() ? spread.maxCoeff() : 0.0;
}

} // namespace voltvar
