#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace voltvar {

enum class BusKind { slack, load };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::load;
    double v_nominal = 1.0;     // p.u., slack setpoint / flat-start magnitude
    double theta_nominal = 0.0; // rad
    double p_load = 0.0;        // p.u. demand (positive = consumption)
    double q_load = 0.0;        // p.u. demand
};

struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0;       // p.u. series resistance
    double x = 0.0;       // p.u. series reactance
    double b_shunt = 0.0; // p.u. total shunt susceptance (split half per end)
    std::string name;
};

struct ControllableDevice {
    int bus = 0;
    double s_max = 0.0; // p.u. apparent-power capability
    double p_min = 0.0, p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;

    /// Symmetric four-quadrant box spanning +-s_max on both axes.
    static ControllableDevice symmetric(int bus, double s_max) {
        return {bus, s_max, -s_max, s_max, -s_max, s_max};
    }
};

/// Nodal admittance matrix from the line list. Y_ij = -1/(r+jx) for connected
/// pairs; diagonals accumulate incident series admittances plus half the shunt
/// susceptance of each incident line. Throws on zero-impedance lines.
Eigen::MatrixXcd build_admittance(const std::vector<Line>& lines, int n_buses);

/// L = D - A for a symmetric 0/1 adjacency with zero diagonal.
Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& adjacency);

/// System base used to convert file quantities (kW/kVAr/ohm) to per-unit.
struct PerUnitBase {
    double mva = 1.0;
    double kv = 0.4;
};

/// Electrical network plus the graph structure derived from it. Immutable
/// after construction; safe to share read-only across concurrent agents.
class GridNetwork {
public:
    GridNetwork(std::vector<Bus> buses, std::vector<Line> lines,
                std::vector<ControllableDevice> devices, std::string name = {},
                PerUnitBase base = {});

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int slack_id() const { return slack_id_; }
    const std::string& name() const { return name_; }
    const PerUnitBase& base() const { return base_; }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }
    const std::vector<ControllableDevice>& devices() const { return devices_; }

    const Eigen::MatrixXcd& admittance() const { return admittance_; }
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }
    const Eigen::MatrixXd& laplacian() const { return laplacian_; }

    /// Buses electrically (and hence communication-)adjacent to `bus`.
    const std::vector<int>& neighbors(int bus) const;

    bool is_controllable(int bus) const { return device_index(bus) >= 0; }
    /// Index of the device at `bus` in devices(), or -1.
    int device_index(int bus) const;

    /// Copy with per-bus demand replaced (used for scenario overrides).
    GridNetwork with_loads(const Eigen::VectorXd& p_load, const Eigen::VectorXd& q_load) const;

    Eigen::VectorXd p_load_vector() const;
    Eigen::VectorXd q_load_vector() const;

private:
    void validate_and_build();

    std::string name_;
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<ControllableDevice> devices_;
    PerUnitBase base_;
    int slack_id_ = 0;
    Eigen::MatrixXcd admittance_;
    Eigen::MatrixXd adjacency_;
    Eigen::MatrixXd laplacian_;
    std::vector<std::vector<int>> neighbor_lists_;
    std::vector<int> device_index_; // per bus, -1 when none
};

} // namespace voltvar
