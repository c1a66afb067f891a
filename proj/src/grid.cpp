#include "voltvar/grid.hpp"

#include <algorithm>
#include <queue>

#include "voltvar/error.hpp"

namespace voltvar {

Eigen::MatrixXcd build_admittance(const std::vector<Line>& lines, int n_buses) {
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n_buses, n_buses);
    for (const auto& line : lines) {
        if (line.from < 0 || line.from >= n_buses || line.to < 0 || line.to >= n_buses)
            throw Error(ErrorCode::invalid_argument,
                        "line '" + line.name + "' references a bus outside 0.." +
                            std::to_string(n_buses - 1));
        if (line.from == line.to)
            throw Error(ErrorCode::invalid_argument, "line '" + line.name + "' is a self-loop");
        if (line.r == 0.0 && line.x == 0.0)
            throw Error(ErrorCode::invalid_argument,
                        "line '" + line.name + "' has zero series impedance");
        const std::complex<double> series = 1.0 / std::complex<double>(line.r, line.x);
        const std::complex<double> shunt_half(0.0, line.b_shunt / 2.0);
        y(line.from, line.to) -= series;
        y(line.to, line.from) -= series;
        y(line.from, line.from) += series + shunt_half;
        y(line.to, line.to) += series + shunt_half;
    }
    return y;
}

Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency) {
    Eigen::VectorXd degree = adjacency.rowwise().sum();
    Eigen::MatrixXd lap = -adjacency;
    lap.diagonal() += degree;
    return lap;
}

GridNetwork::GridNetwork(std::vector<Bus> buses, std::vector<Line> lines,
                         std::vector<ControllableDevice> devices, std::string name,
                         PerUnitBase base)
    : name_(std::move(name)), buses_(std::move(buses)), lines_(std::move(lines)),
      devices_(std::move(devices)), base_(base) {
    validate_and_build();
}

void GridNetwork::validate_and_build() {
    const int n = static_cast<int>(buses_.size());
    if (n == 0) throw Error(ErrorCode::invalid_argument, "network has no buses");

    int slack_count = 0;
    for (int i = 0; i < n; ++i) {
        if (buses_[i].id != i)
            throw Error(ErrorCode::invalid_argument,
                        "bus ids must be 0..n-1 in order; found id " +
                            std::to_string(buses_[i].id) + " at position " + std::to_string(i));
        if (buses_[i].kind == BusKind::slack) {
            slack_id_ = i;
            ++slack_count;
        }
        if (buses_[i].p_load < 0.0 || buses_[i].q_load < 0.0)
            throw Error(ErrorCode::invalid_argument,
                        "bus " + std::to_string(i) + " has negative demand");
    }
    if (slack_count != 1)
        throw Error(ErrorCode::invalid_argument,
                    "network must have exactly one slack bus, found " +
                        std::to_string(slack_count));

    admittance_ = build_admittance(lines_, n);

    adjacency_ = Eigen::MatrixXd::Zero(n, n);
    for (const auto& line : lines_) {
        adjacency_(line.from, line.to) = 1.0;
        adjacency_(line.to, line.from) = 1.0;
    }
    laplacian_ = graph_laplacian(adjacency_);

    neighbor_lists_.assign(n, {});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adjacency_(i, j) != 0.0) neighbor_lists_[i].push_back(j);

    device_index_.assign(n, -1);
    for (size_t d = 0; d < devices_.size(); ++d) {
        auto& dev = devices_[d];
        if (dev.bus < 0 || dev.bus >= n)
            throw Error(ErrorCode::invalid_argument,
                        "device references unknown bus " + std::to_string(dev.bus));
        if (dev.bus == slack_id_)
            throw Error(ErrorCode::invalid_argument, "device placed at the slack bus");
        if (dev.s_max <= 0.0)
            throw Error(ErrorCode::invalid_argument,
                        "device at bus " + std::to_string(dev.bus) + " has non-positive s_max");
        if (device_index_[dev.bus] >= 0)
            throw Error(ErrorCode::invalid_argument,
                        "duplicate device at bus " + std::to_string(dev.bus));
        device_index_[dev.bus] = static_cast<int>(d);
    }

    // connectivity (BFS over the line graph)
    std::vector<char> seen(n, 0);
    std::queue<int> frontier;
    frontier.push(slack_id_);
    seen[slack_id_] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        int i = frontier.front();
        frontier.pop();
        for (int j : neighbor_lists_[i])
            if (!seen[j]) {
                seen[j] = 1;
                ++reached;
                frontier.push(j);
            }
    }
    if (reached != n)
        throw Error(ErrorCode::invalid_argument,
                    "network graph is not connected (" + std::to_string(reached) + " of " +
                        std::to_string(n) + " buses reachable from the slack)");
}

const std::vector<int>& GridNetwork::neighbors(int bus) const {
    if (bus < 0 || bus >= bus_count())
        throw Error(ErrorCode::invalid_argument, "unknown bus id " + std::to_string(bus));
    return neighbor_lists_[bus];
}

int GridNetwork::device_index(int bus) const {
    if (bus < 0 || bus >= bus_count()) return -1;
    return device_index_[bus];
}

GridNetwork GridNetwork::with_loads(const Eigen::VectorXd& p_load,
                                    const Eigen::VectorXd& q_load) const {
    if (p_load.size() != bus_count() || q_load.size() != bus_count())
        throw Error(ErrorCode::invalid_argument, "load vector size does not match bus count");
    std::vector<Bus> buses = buses_;
    for (int i = 0; i < bus_count(); ++i) {
        buses[i].p_load = p_load[i];
        buses[i].q_load = q_load[i];
    }
    return GridNetwork(std::move(buses), lines_, devices_, name_, base_);
}

Eigen::VectorXd GridNetwork::p_load_vector() const {
    Eigen::VectorXd p(bus_count());
    for (int i = 0; i < bus_count(); ++i) p[i] = buses_[i].p_load;
    return p;
}

Eigen::VectorXd GridNetwork::q_load_vector() const {
    Eigen::VectorXd q(bus_count());
    for (int i = 0; i < bus_count(); ++i) q[i] = buses_[i].q_load;
    return q;
}

} // namespace voltvar
