#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <complex>

#include "test_helpers.hpp"
#include "voltvar/error.hpp"
#include "voltvar/grid.hpp"

using namespace voltvar;
using testutil::shipped_network;

TEST_SUITE_BEGIN("grid");

TEST_CASE("admittance of a single reactive line") {
    std::vector<Line> lines{{0, 1, 0.0, 0.1, 0.0, "x-only"}};
    const Eigen::MatrixXcd y = build_admittance(lines, 2);
    const std::complex<double> expected(0.0, -10.0);
    CHECK(std::abs(y(0, 0) - expected) < 1e-12);
    CHECK(std::abs(y(1, 1) - expected) < 1e-12);
    CHECK(std::abs(y(0, 1) + expected) < 1e-12);
    CHECK(std::abs(y(1, 0) - y(0, 1)) == 0.0);
}

TEST_CASE("admittance of an empty line set is zero") {
    const Eigen::MatrixXcd y = build_admittance({}, 3);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("admittance of a uniform triangle matches hand assembly") {
    const std::complex<double> series = 1.0 / std::complex<double>(0.01, 0.1);
    const Eigen::MatrixXcd y = testutil::triangle_network().admittance();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const std::complex<double> expected = i == j ? 2.0 * series : -series;
            CHECK(std::abs(y(i, j) - expected) < 1e-12);
        }
}

TEST_CASE("zero-impedance line is rejected") {
    std::vector<Line> lines{{0, 1, 0.0, 0.0, 0.0, "broken"}};
    CHECK_THROWS_WITH_AS(build_admittance(lines, 2),
                         doctest::Contains("zero series impedance"), Error);
}

TEST_CASE("admittance row sums equal shunt injections") {
    SUBCASE("no shunts") {
        const Eigen::MatrixXcd y = shipped_network().admittance();
        const Eigen::VectorXcd row_sums = y.rowwise().sum();
        CHECK(row_sums.cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("with a shunt") {
        std::vector<Line> lines{{0, 1, 0.01, 0.1, 0.04, "shunted"}};
        const Eigen::MatrixXcd y = build_admittance(lines, 2);
        CHECK(std::abs(y.row(0).sum() - std::complex<double>(0.0, 0.02)) < 1e-12);
    }
}

TEST_CASE("laplacian of a 3-node path") {
    Eigen::MatrixXd a(3, 3);
    a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    Eigen::MatrixXd expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK((graph_laplacian(a) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian of K2") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, 1, 0;
    Eigen::MatrixXd expected(2, 2);
    expected << 1, -1, -1, 1;
    CHECK((graph_laplacian(a) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shipped network laplacian: zero row sums, rank n-1, spectral bound") {
    const GridNetwork& net = shipped_network();
    const Eigen::MatrixXd& lap = net.laplacian();
    CHECK(lap.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() == 0.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    const Eigen::VectorXd ev = eig.eigenvalues();
    CHECK(std::abs(ev[0]) < 1e-10);      // consensus eigenvalue
    CHECK(ev[1] > 1e-8);                 // connected: single zero eigenvalue
    const double max_degree = net.adjacency().rowwise().sum().maxCoeff();
    CHECK(ev[ev.size() - 1] <= 2.0 * max_degree + 1e-12);
}

TEST_CASE("neighbors of an isolated pair") {
    const GridNetwork net = testutil::two_bus_network();
    CHECK(net.neighbors(0) == std::vector<int>{1});
    CHECK(net.neighbors(1) == std::vector<int>{0});
}

TEST_CASE("neighbor relation is symmetric on the shipped network") {
    const GridNetwork& net = shipped_network();
    int interior_degree_two = 0;
    for (int i = 0; i < net.bus_count(); ++i) {
        for (int j : net.neighbors(i)) {
            const auto& back = net.neighbors(j);
            CHECK(std::find(back.begin(), back.end(), i) != back.end());
        }
        if (net.neighbors(i).size() == 2) ++interior_degree_two;
    }
    CHECK(interior_degree_two > 0); // radial feeder has chain interior nodes
}

TEST_CASE("unknown bus id is rejected") {
    const GridNetwork net = testutil::two_bus_network();
    CHECK_THROWS_AS(net.neighbors(7), Error);
    CHECK_THROWS_AS(net.neighbors(-1), Error);
}

TEST_CASE("shipped network shape: 44 buses, 43 lines, 7 device buses, radial") {
    const GridNetwork& net = shipped_network();
    CHECK(net.bus_count() == 44);
    CHECK(net.lines().size() == 43);
    CHECK(net.devices().size() == 7);
    CHECK(net.slack_id() == 0);
    const std::vector<int> expected{12, 17, 19, 35, 37, 41, 43};
    for (size_t d = 0; d < expected.size(); ++d) CHECK(net.devices()[d].bus == expected[d]);
    // per-unit conversion of the 55 kVA / 0.7 pf demand at a load bus
    CHECK(net.buses()[2].p_load == doctest::Approx(0.0385).epsilon(1e-12));
    CHECK(net.buses()[2].q_load == doctest::Approx(0.0392778563569857).epsilon(1e-9));
    CHECK(net.buses()[12].p_load > 0.0); // device buses carry demand too
}

TEST_CASE("network validation errors") {
    using V = std::vector<Bus>;
    SUBCASE("two slack buses") {
        V buses{{0, BusKind::slack, 1, 0, 0, 0}, {1, BusKind::slack, 1, 0, 0, 0}};
        CHECK_THROWS_WITH_AS(GridNetwork(buses, {{0, 1, 0.1, 0.1, 0, ""}}, {}),
                             doctest::Contains("exactly one slack"), Error);
    }
    SUBCASE("device at the slack bus") {
        V buses{{0, BusKind::slack, 1, 0, 0, 0}, {1, BusKind::load, 1, 0, 0, 0}};
        CHECK_THROWS_WITH_AS(
            GridNetwork(buses, {{0, 1, 0.1, 0.1, 0, ""}},
                        {ControllableDevice::symmetric(0, 1.0)}),
            doctest::Contains("slack"), Error);
    }
    SUBCASE("disconnected graph") {
        V buses{{0, BusKind::slack, 1, 0, 0, 0},
                {1, BusKind::load, 1, 0, 0, 0},
                {2, BusKind::load, 1, 0, 0, 0}};
        CHECK_THROWS_WITH_AS(GridNetwork(buses, {{0, 1, 0.1, 0.1, 0, ""}}, {}),
                             doctest::Contains("not connected"), Error);
    }
    SUBCASE("negative demand") {
        V buses{{0, BusKind::slack, 1, 0, 0, 0}, {1, BusKind::load, 1, 0, -0.1, 0}};
        CHECK_THROWS_WITH_AS(GridNetwork(buses, {{0, 1, 0.1, 0.1, 0, ""}}, {}),
                             doctest::Contains("negative demand"), Error);
    }
}

TEST_SUITE_END();
