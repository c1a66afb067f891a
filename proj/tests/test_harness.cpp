#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "voltvar/error.hpp"
#include "voltvar/harness.hpp"

using namespace voltvar;
using testutil::shipped_network;
using testutil::stressed_scenario;

TEST_SUITE_BEGIN("harness");

namespace {

ScenarioConfig zero_load_scenario() {
    ScenarioConfig cfg = stressed_scenario();
    cfg.load_overrides.clear();
    cfg.load_scale_p = 0.0;
    cfg.load_scale_q = 0.0;
    return cfg;
}

/// Shared full stressed-scenario run (the expensive fixture).
const Simulation& stressed_run() {
    static Simulation sim = [] {
        Simulation s(shipped_network(), stressed_scenario());
        s.run();
        return s;
    }();
    return sim;
}

} // namespace

TEST_CASE("scenario loads: overrides and scaling") {
    const GridNetwork loaded = apply_scenario_loads(shipped_network(), stressed_scenario());
    CHECK(loaded.buses()[18].q_load ==
          doctest::Approx(2.0 * shipped_network().buses()[18].q_load));
    CHECK(loaded.buses()[18].p_load == doctest::Approx(shipped_network().buses()[18].p_load));

    ScenarioConfig halved = zero_load_scenario();
    halved.load_scale_p = 0.5;
    halved.load_scale_q = 0.5;
    const GridNetwork half = apply_scenario_loads(shipped_network(), halved);
    CHECK(half.buses()[2].p_load == doctest::Approx(0.5 * shipped_network().buses()[2].p_load));
}

TEST_CASE("baseline run: stressed scenario sags, light load does not") {
    const PowerFlowSolution stressed = baseline_run(shipped_network(), stressed_scenario());
    CHECK(stressed.v.minCoeff() < 0.95);
    CHECK(stressed.v[shipped_network().slack_id()] == doctest::Approx(1.0));

    ScenarioConfig halved = zero_load_scenario();
    halved.load_scale_p = 0.5;
    halved.load_scale_q = 0.5;
    const PowerFlowSolution light = baseline_run(shipped_network(), halved);
    CHECK(light.v.minCoeff() > 0.95);

    const PowerFlowSolution again = baseline_run(shipped_network(), stressed_scenario());
    CHECK(std::memcmp(stressed.v.data(), again.v.data(), sizeof(double) * stressed.v.size()) ==
          0);
}

TEST_CASE("zero-load scenario converges immediately with idle controls") {
    Simulation sim(shipped_network(), zero_load_scenario());
    const RunResult result = sim.run();
    CHECK(result.converged);
    CHECK(result.iterations == 1);
    for (const auto& dev : sim.network().devices()) {
        const AgentState& a = sim.agents()[dev.bus];
        CHECK(a.p_ctrl == 0.0);
        CHECK(a.q_ctrl == 0.0);
        CHECK(a.z < 1.0); // activation cost bleeds the dispatch factor
        CHECK(a.z > 0.99);
    }
    CHECK(sim.trace().back().iterate_change <= 5e-4);
}

TEST_CASE("two iterations equal two single-iteration calls") {
    Simulation a(shipped_network(), stressed_scenario());
    Simulation b(shipped_network(), stressed_scenario());
    a.run_outer_iteration();
    a.run_outer_iteration();
    b.run_outer_iteration();
    b.run_outer_iteration();
    for (int i = 0; i < shipped_network().bus_count(); ++i) {
        CHECK(a.agents()[i].dv == b.agents()[i].dv);
        CHECK(a.agents()[i].dual_p == b.agents()[i].dual_p);
    }
    CHECK((a.estimates() - b.estimates()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trace objective matches a direct evaluation of the cost") {
    Simulation sim(shipped_network(), stressed_scenario());
    for (int k = 0; k < 5; ++k) sim.run_outer_iteration();
    const ScenarioConfig& cfg = sim.config();
    double expected = 0.0;
    for (int i = 0; i < sim.network().bus_count(); ++i) {
        const AgentState& a = sim.agents()[i];
        expected += cfg.alpha * a.dv * a.dv;
        const int d = sim.network().device_index(i);
        if (d >= 0) {
            const double s_max = sim.network().devices()[d].s_max;
            const double zp = a.z * a.p_ctrl, zq = a.z * a.q_ctrl, zs = a.z * s_max;
            expected += cfg.beta * a.z + cfg.rho * std::max(0.0, zp * zp + zq * zq - zs * zs);
        }
    }
    CHECK(sim.trace().back().objective == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("stressed scenario: convergence, limits, and residual decay") {
    const Simulation& sim = stressed_run();
    const std::vector<TraceRow>& trace = sim.trace();
    REQUIRE(trace.back().iterate_change <= sim.config().eps_iterate);
    CHECK(static_cast<int>(trace.size()) < sim.config().max_iter);

    SUBCASE("invariants hold at the final iterate") {
        const Limits& lim = sim.config().limits;
        for (int i = 0; i < sim.network().bus_count(); ++i) {
            const AgentState& a = sim.agents()[i];
            const double v = sim.model().v0[i] + a.dv;
            CHECK(v >= lim.v_min - 1e-12);
            CHECK(v <= lim.v_max + 1e-12);
            if (i == sim.network().slack_id()) {
                CHECK(a.dv == 0.0);
                CHECK(a.dtheta == 0.0);
                CHECK(a.dual_p == 0.0);
                CHECK(a.dual_q == 0.0);
            } else {
                CHECK(std::abs(a.dtheta) <= lim.angle_max + 1e-12);
            }
        }
        for (const auto& dev : sim.network().devices()) {
            const AgentState& a = sim.agents()[dev.bus];
            CHECK(a.z >= 0.0);
            CHECK(a.z <= 1.0);
            CHECK(a.p_ctrl >= dev.p_min - 1e-12);
            CHECK(a.p_ctrl <= dev.p_max + 1e-12);
            CHECK(a.q_ctrl >= dev.q_min - 1e-12);
            CHECK(a.q_ctrl <= dev.q_max + 1e-12);
        }
    }

    SUBCASE("residuals shrink by an order of magnitude") {
        REQUIRE(trace.size() >= 2000);
        CHECK(trace[1999].max_residual < 0.1 * trace[9].max_residual);
    }

    SUBCASE("objective trends down") {
        CHECK(trace.back().objective < trace[9].objective);
    }

    SUBCASE("the tolerance is crossed exactly once, at termination") {
        const double eps = sim.config().eps_iterate;
        for (size_t k = 0; k + 1 < trace.size(); ++k) CHECK(trace[k].iterate_change > eps);
        CHECK(trace.back().iterate_change <= eps);
    }

    SUBCASE("consensus estimates settle near the final injections") {
        CHECK(trace.back().disagreement < 1e-2);
    }
}

TEST_CASE("validation: idle controls reproduce the baseline exactly") {
    Simulation sim(shipped_network(), stressed_scenario());
    // no iterations: controls are zero, predicted voltages equal the baseline
    const ValidationReport report = sim.validate();
    CHECK(report.rmse < 1e-9);
    for (const auto& row : report.rows) CHECK(std::abs(row.signed_error) < 1e-8);
    CHECK(report.rows[sim.network().slack_id()].signed_error == 0.0);
}

TEST_CASE("validation after the stressed run") {
    const Simulation& sim = stressed_run();
    const ValidationReport report = sim.validate();
    CHECK(report.acpf.converged);
    CHECK(report.acpf.max_mismatch <= 1e-8);
    CHECK(report.rows[0].signed_error == 0.0); // slack pinned in both models
    CHECK(report.rmse < 0.03);
    // intervention must not worsen the worst bus
    CHECK(report.acpf.v.minCoeff() >= sim.baseline().v.minCoeff());
}

TEST_CASE("divergent configuration aborts with a diagnostic") {
    ScenarioConfig cfg = stressed_scenario();
    cfg.gamma = 50.0; // absurd dual step
    cfg.max_iter = 2000;
    Simulation sim(shipped_network(), cfg);
    CHECK_THROWS_AS(sim.run(), Error);
}

TEST_CASE("consensus round count is configurable and logged") {
    ScenarioConfig cfg = stressed_scenario();
    cfg.max_iter = 50;
    cfg.eps_iterate = 1e-30; // force the cap
    cfg.consensus_rounds = 20;
    Simulation many(shipped_network(), cfg);
    many.run();
    cfg.consensus_rounds = 1;
    Simulation one(shipped_network(), cfg);
    one.run();
    // more inner rounds track the moving injections more tightly
    CHECK(many.trace().back().disagreement <= one.trace().back().disagreement);
}

TEST_SUITE_END();
