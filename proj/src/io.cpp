#include "voltvar/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "voltvar/error.hpp"

namespace voltvar {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::parse, what + ": not valid JSON");
    return j;
}

double require_number(const json& obj, const char* field, const std::string& context) {
    if (!obj.contains(field))
        throw Error(ErrorCode::parse, context + ": missing field '" + field + "'");
    if (!obj[field].is_number())
        throw Error(ErrorCode::parse, context + ": field '" + field + "' must be a number");
    return obj[field].get<double>();
}

double optional_number(const json& obj, const char* field, double fallback,
                       const std::string& context) {
    if (!obj.contains(field)) return fallback;
    if (!obj[field].is_number())
        throw Error(ErrorCode::parse, context + ": field '" + field + "' must be a number");
    return obj[field].get<double>();
}

double round_sig(double value) {
    // round-trip through the report format so JSON summaries match the CSVs
    return std::strtod(format_number(value).c_str(), nullptr);
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw Error(ErrorCode::io, "write to '" + path + "' failed");
}

GridNetwork load_network_file(const std::string& path) {
    try {
        return load_network_json(read_text_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::io) throw;
        throw Error(e.code(), path + ": " + e.what());
    }
}

GridNetwork load_network_json(const std::string& text) {
    const json j = parse_json(text, "network file");

    PerUnitBase base;
    base.mva = optional_number(j, "base_mva", 1.0, "network file");
    base.kv = optional_number(j, "base_kv", 0.4, "network file");
    if (base.mva <= 0.0 || base.kv <= 0.0)
        throw Error(ErrorCode::parse, "network file: base_mva and base_kv must be positive");
    const double z_base = base.kv * base.kv / base.mva;
    const double s_base_kva = base.mva * 1000.0;

    if (!j.contains("slack_id") || !j["slack_id"].is_number_integer())
        throw Error(ErrorCode::parse, "network file: missing integer field 'slack_id'");
    const int slack_id = j["slack_id"].get<int>();

    if (!j.contains("buses") || !j["buses"].is_array())
        throw Error(ErrorCode::parse, "network file: missing array field 'buses'");
    std::vector<Bus> buses;
    for (const auto& jb : j["buses"]) {
        const std::string ctx = "bus entry " + std::to_string(buses.size());
        Bus b;
        if (!jb.contains("id") || !jb["id"].is_number_integer())
            throw Error(ErrorCode::parse, ctx + ": missing integer field 'id'");
        b.id = jb["id"].get<int>();
        b.kind = b.id == slack_id ? BusKind::slack : BusKind::load;
        if (jb.contains("kind")) {
            const std::string kind = jb["kind"].get<std::string>();
            if (kind == "slack")
                b.kind = BusKind::slack;
            else if (kind == "load")
                b.kind = BusKind::load;
            else
                throw Error(ErrorCode::parse, ctx + ": unknown kind '" + kind + "'");
        }
        b.v_nominal = optional_number(jb, "v_nominal_pu", 1.0, ctx);
        b.theta_nominal = optional_number(jb, "theta_nominal_rad", 0.0, ctx);
        b.p_load = optional_number(jb, "p_load_kw", 0.0, ctx) / s_base_kva;
        b.q_load = optional_number(jb, "q_load_kvar", 0.0, ctx) / s_base_kva;
        buses.push_back(b);
    }

    if (!j.contains("lines") || !j["lines"].is_array())
        throw Error(ErrorCode::parse, "network file: missing array field 'lines'");
    std::vector<Line> lines;
    for (const auto& jl : j["lines"]) {
        const std::string ctx = "line entry " + std::to_string(lines.size());
        Line l;
        if (!jl.contains("from") || !jl.contains("to"))
            throw Error(ErrorCode::parse, ctx + ": missing field 'from' or 'to'");
        l.from = jl["from"].get<int>();
        l.to = jl["to"].get<int>();
        l.r = require_number(jl, "r_ohm", ctx) / z_base;
        l.x = require_number(jl, "x_ohm", ctx) / z_base;
        l.b_shunt = optional_number(jl, "b_shunt_s", 0.0, ctx) * z_base;
        if (jl.contains("name")) l.name = jl["name"].get<std::string>();
        lines.push_back(l);
    }

    std::vector<ControllableDevice> devices;
    if (j.contains("devices")) {
        if (!j["devices"].is_array())
            throw Error(ErrorCode::parse, "network file: 'devices' must be an array");
        for (const auto& jd : j["devices"]) {
            const std::string ctx = "device entry " + std::to_string(devices.size());
            if (!jd.contains("bus") || !jd["bus"].is_number_integer())
                throw Error(ErrorCode::parse, ctx + ": missing integer field 'bus'");
            const double s_max = require_number(jd, "s_max_kva", ctx) / s_base_kva;
            ControllableDevice dev = ControllableDevice::symmetric(jd["bus"].get<int>(), s_max);
            dev.p_min = optional_number(jd, "p_min_kw", dev.p_min * s_base_kva, ctx) / s_base_kva;
            dev.p_max = optional_number(jd, "p_max_kw", dev.p_max * s_base_kva, ctx) / s_base_kva;
            dev.q_min =
                optional_number(jd, "q_min_kvar", dev.q_min * s_base_kva, ctx) / s_base_kva;
            dev.q_max =
                optional_number(jd, "q_max_kvar", dev.q_max * s_base_kva, ctx) / s_base_kva;
            devices.push_back(dev);
        }
    }

    std::string name = j.contains("name") ? j["name"].get<std::string>() : std::string{};
    return GridNetwork(std::move(buses), std::move(lines), std::move(devices), std::move(name),
                       base);
}

ScenarioConfig load_scenario_file(const std::string& path) {
    try {
        return load_scenario_json(read_text_file(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::io) throw;
        throw Error(e.code(), path + ": " + e.what());
    }
}

ScenarioConfig load_scenario_json(const std::string& text) {
    const json j = parse_json(text, "scenario file");
    ScenarioConfig cfg;
    const std::string ctx = "scenario file";
    cfg.alpha = optional_number(j, "alpha", cfg.alpha, ctx);
    cfg.beta = optional_number(j, "beta", cfg.beta, ctx);
    cfg.rho = optional_number(j, "rho", cfg.rho, ctx);
    cfg.eta1 = optional_number(j, "eta1", cfg.eta1, ctx);
    cfg.eta2 = optional_number(j, "eta2", cfg.eta2, ctx);
    cfg.gamma = optional_number(j, "gamma", cfg.gamma, ctx);
    if (j.contains("alpha_con")) cfg.alpha_con = require_number(j, "alpha_con", ctx);
    cfg.limits.v_min = optional_number(j, "v_min_pu", cfg.limits.v_min, ctx);
    cfg.limits.v_max = optional_number(j, "v_max_pu", cfg.limits.v_max, ctx);
    cfg.limits.angle_max = optional_number(j, "angle_max_rad", cfg.limits.angle_max, ctx);
    cfg.eps_iterate = optional_number(j, "eps_iterate", cfg.eps_iterate, ctx);
    cfg.eps_residual = optional_number(j, "eps_residual", cfg.eps_residual, ctx);
    cfg.max_iter = static_cast<int>(optional_number(j, "max_iter", cfg.max_iter, ctx));
    cfg.consensus_rounds =
        static_cast<int>(optional_number(j, "consensus_rounds", cfg.consensus_rounds, ctx));
    cfg.load_scale_p = optional_number(j, "load_scale_p", 1.0, ctx);
    cfg.load_scale_q = optional_number(j, "load_scale_q", 1.0, ctx);
    if (j.contains("description") && j["description"].is_string())
        cfg.description = j["description"].get<std::string>();

    if (cfg.eta1 <= 0 || cfg.eta2 <= 0 || cfg.gamma <= 0)
        throw Error(ErrorCode::parse, ctx + ": step sizes must be positive");
    if (cfg.eps_iterate <= 0 || cfg.eps_residual <= 0)
        throw Error(ErrorCode::parse, ctx + ": tolerances must be positive");
    if (cfg.limits.v_min >= cfg.limits.v_max)
        throw Error(ErrorCode::parse, ctx + ": v_min_pu must be below v_max_pu");

    if (j.contains("load_overrides")) {
        if (!j["load_overrides"].is_array())
            throw Error(ErrorCode::parse, ctx + ": 'load_overrides' must be an array");
        for (const auto& jo : j["load_overrides"]) {
            const std::string octx =
                "load override " + std::to_string(cfg.load_overrides.size());
            LoadOverride ov;
            if (!jo.contains("bus") || !jo["bus"].is_number_integer())
                throw Error(ErrorCode::parse, octx + ": missing integer field 'bus'");
            ov.bus = jo["bus"].get<int>();
            if (jo.contains("p_kw")) ov.p = require_number(jo, "p_kw", octx) / 1000.0;
            if (jo.contains("q_kvar")) ov.q = require_number(jo, "q_kvar", octx) / 1000.0;
            ov.p_scale = optional_number(jo, "p_scale", 1.0, octx);
            ov.q_scale = optional_number(jo, "q_scale", 1.0, octx);
            cfg.load_overrides.push_back(ov);
        }
    }
    return cfg;
}

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void write_baseline_csv(const std::string& path, const GridNetwork& net,
                        const PowerFlowSolution& solution) {
    std::ostringstream out;
    out << "bus,v_pu,theta_rad\n";
    for (int i = 0; i < net.bus_count(); ++i)
        out << i << ',' << format_number(solution.v[i]) << ',' << format_number(solution.theta[i])
            << '\n';
    write_text_file(path, out.str());
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace,
                     const std::vector<int>& device_buses, double base_mva) {
    const double to_kw = base_mva * 1000.0;
    std::ostringstream out;
    out << "iteration,objective,max_residual,iterate_change,stationarity_gap,v_min_pred,"
           "v_max_pred,disagreement,est_gap";
    for (int bus : device_buses) out << ",p_kw_" << bus;
    for (int bus : device_buses) out << ",q_kvar_" << bus;
    for (int bus : device_buses) out << ",z_" << bus;
    out << '\n';
    for (const auto& row : trace) {
        out << row.iteration << ',' << format_number(row.objective) << ','
            << format_number(row.max_residual) << ',' << format_number(row.iterate_change) << ','
            << format_number(row.stationarity_gap) << ',' << format_number(row.v_min_pred) << ','
            << format_number(row.v_max_pred) << ',' << format_number(row.disagreement) << ','
            << format_number(row.est_gap);
        for (double p : row.p_ctrl) out << ',' << format_number(p * to_kw);
        for (double q : row.q_ctrl) out << ',' << format_number(q * to_kw);
        for (double z : row.z) out << ',' << format_number(z);
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_setpoints_csv(const std::string& path, const Simulation& sim, double base_mva) {
    const double to_kw = base_mva * 1000.0;
    std::ostringstream out;
    out << "bus,p_kw,q_kvar,z\n";
    for (const auto& dev : sim.network().devices()) {
        const AgentState& a = sim.agents()[dev.bus];
        out << dev.bus << ',' << format_number(a.p_ctrl * to_kw) << ','
            << format_number(a.q_ctrl * to_kw) << ',' << format_number(a.z) << '\n';
    }
    write_text_file(path, out.str());
}

void write_predicted_csv(const std::string& path, const Simulation& sim) {
    std::ostringstream out;
    out << "bus,v0_pu,dv_pu,v_pred_pu\n";
    const Eigen::VectorXd pred = sim.predicted_voltages();
    for (int i = 0; i < sim.network().bus_count(); ++i)
        out << i << ',' << format_number(sim.model().v0[i]) << ','
            << format_number(sim.agents()[i].dv) << ',' << format_number(pred[i]) << '\n';
    write_text_file(path, out.str());
}

void write_validation_csv(const std::string& path, const ValidationReport& report) {
    std::ostringstream out;
    out << "bus,predicted_v_pu,validated_v_pu,signed_error_pu,relative_error_pct\n";
    for (const auto& row : report.rows)
        out << row.bus << ',' << format_number(row.predicted_v) << ','
            << format_number(row.validated_v) << ',' << format_number(row.signed_error) << ','
            << format_number(row.relative_error_pct) << '\n';
    out << "rmse," << format_number(report.rmse) << ",,,\n";
    write_text_file(path, out.str());
}

void write_jacobian_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_number(m(r, c));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_summary_json(const std::string& path, const Simulation& sim, const RunResult& result,
                        const ValidationReport& report) {
    const double to_kw = sim.network().base().mva * 1000.0;
    json j;
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["final_objective"] = round_sig(result.final_objective);
    j["baseline_min_v_pu"] = round_sig(sim.baseline().v.minCoeff());
    j["predicted_min_v_pu"] = round_sig(sim.predicted_voltages().minCoeff());
    j["validated_min_v_pu"] = round_sig(report.acpf.v.minCoeff());
    j["validation_rmse_pu"] = round_sig(report.rmse);
    json devices = json::array();
    for (const auto& dev : sim.network().devices()) {
        const AgentState& a = sim.agents()[dev.bus];
        devices.push_back({{"bus", dev.bus},
                           {"p_kw", round_sig(a.p_ctrl * to_kw)},
                           {"q_kvar", round_sig(a.q_ctrl * to_kw)},
                           {"z", round_sig(a.z)}});
    }
    j["devices"] = devices;
    write_text_file(path, j.dump(1) + "\n");
}

std::vector<SetpointRow> read_setpoints_csv(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("bus,", 0) != 0)
        throw Error(ErrorCode::parse, path + ": missing setpoints CSV header");
    std::vector<SetpointRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        SetpointRow row{};
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &row.bus, &row.p_kw, &row.q_kvar,
                        &row.z) != 4)
            throw Error(ErrorCode::parse, path + ": malformed setpoints row '" + line + "'");
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd read_predicted_csv(const std::string& path, int n_buses) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("bus,", 0) != 0)
        throw Error(ErrorCode::parse, path + ": missing predicted-voltages CSV header");
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n_buses, -1.0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int bus = 0;
        double v0 = 0, dv = 0, pred = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &bus, &v0, &dv, &pred) != 4)
            throw Error(ErrorCode::parse, path + ": malformed prediction row '" + line + "'");
        if (bus < 0 || bus >= n_buses)
            throw Error(ErrorCode::parse, path + ": prediction row for unknown bus " +
                                              std::to_string(bus));
        v[bus] = pred;
    }
    if ((v.array() < 0.0).any())
        throw Error(ErrorCode::parse, path + ": prediction rows missing for some buses");
    return v;
}

} // namespace voltvar
