#pragma once

#include <string>
#include <vector>

#include "voltvar/grid.hpp"
#include "voltvar/harness.hpp"
#include "voltvar/io.hpp"

namespace testutil {

inline std::string data_path(const std::string& file) {
    return std::string(VOLTVAR_DATA_DIR) + "/" + file;
}

/// Slack at bus 0, one PQ bus with the given demand (p.u.).
inline voltvar::GridNetwork two_bus_network(double r = 0.01, double x = 0.1, double p_load = 0.5,
                                            double q_load = 0.3, bool with_device = false) {
    using namespace voltvar;
    std::vector<Bus> buses(2);
    buses[0] = Bus{0, BusKind::slack, 1.0, 0.0, 0.0, 0.0};
    buses[1] = Bus{1, BusKind::load, 1.0, 0.0, p_load, q_load};
    std::vector<Line> lines{{0, 1, r, x, 0.0, "line-0-1"}};
    std::vector<ControllableDevice> devices;
    if (with_device) devices.push_back(ControllableDevice::symmetric(1, 1.0));
    return GridNetwork(std::move(buses), std::move(lines), std::move(devices), "two-bus");
}

/// 3-bus triangle, identical line impedances.
inline voltvar::GridNetwork triangle_network(double r = 0.01, double x = 0.1) {
    using namespace voltvar;
    std::vector<Bus> buses(3);
    buses[0] = Bus{0, BusKind::slack, 1.0, 0.0, 0.0, 0.0};
    buses[1] = Bus{1, BusKind::load, 1.0, 0.0, 0.1, 0.05};
    buses[2] = Bus{2, BusKind::load, 1.0, 0.0, 0.2, 0.1};
    std::vector<Line> lines{{0, 1, r, x, 0.0, "a"}, {1, 2, r, x, 0.0, "b"}, {0, 2, r, x, 0.0, "c"}};
    return GridNetwork(std::move(buses), std::move(lines), {}, "triangle");
}

inline const voltvar::GridNetwork& shipped_network() {
    static voltvar::GridNetwork net = voltvar::load_network_file(data_path("cigre_lv_44bus.json"));
    return net;
}

inline const voltvar::ScenarioConfig& stressed_scenario() {
    static voltvar::ScenarioConfig cfg =
        voltvar::load_scenario_file(data_path("scenario_stressed.json"));
    return cfg;
}

} // namespace testutil
