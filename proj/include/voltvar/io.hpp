#pragma once

#include <string>
#include <vector>

#include "voltvar/harness.hpp"

namespace voltvar {

GridNetwork load_network_file(const std::string& path);
GridNetwork load_network_json(const std::string& text);

ScenarioConfig load_scenario_file(const std::string& path);
ScenarioConfig load_scenario_json(const std::string& text);

/// Fixed-width significant-digit formatting used for every floating-point
/// value written to CSV/JSON reports (%.6g).
std::string format_number(double value);

void write_baseline_csv(const std::string& path, const GridNetwork& net,
                        const PowerFlowSolution& solution);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace,
                     const std::vector<int>& device_buses, double base_mva);
void write_setpoints_csv(const std::string& path, const Simulation& sim, double base_mva);
void write_predicted_csv(const std::string& path, const Simulation& sim);
void write_validation_csv(const std::string& path, const ValidationReport& report);
void write_jacobian_csv(const std::string& path, const Eigen::MatrixXd& m);
void write_summary_json(const std::string& path, const Simulation& sim, const RunResult& result,
                        const ValidationReport& report);

/// Re-read a setpoints CSV (bus, p_kw, q_kvar, z rows).
struct SetpointRow {
    int bus;
    double p_kw;
    double q_kvar;
    double z;
};
std::vector<SetpointRow> read_setpoints_csv(const std::string& path);

/// Re-read a predicted-voltages CSV, returning v_pred per bus.
Eigen::VectorXd read_predicted_csv(const std::string& path, int n_buses);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace voltvar
