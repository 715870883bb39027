#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sapinn/losses.hpp"
#include "sapinn/oracles.hpp"

#include <cmath>
#include <sstream>

using namespace sapinn;

namespace {

std::vector<double> ones9() { return std::vector<double>(9, 1.0); }

double centre(const GridField& g) {
    const std::size_t mid = g.axes[0].size() / 2;
    return g.at(mid, mid);
}

double max_abs(const GridField& g) { return g.values.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("adv-diff closed form hits its boundary values") {
    for (double eps : {0.02, 0.05, 0.1, 0.3, 1.0}) {
        CHECK(adv_diff_exact(0.0, eps).first == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(adv_diff_exact(1.0, eps).first == doctest::Approx(3.0).epsilon(1e-14));
        CHECK(std::abs(adv_diff_exact(0.0, eps).second) < 1e-12);
        CHECK(std::abs(adv_diff_exact(1.0, eps).second) < 1e-12);
    }
}

TEST_CASE("adv-diff closed form satisfies the equation") {
    // Substitution through the problem's residual with the closed form baked in as the output wrapper.
    const ProblemSpec p = make_adv_diff();
    Network net = Network::init(p.network_spec(1, 2, 0));
    net.set_flat_weights(Eigen::VectorXd::Zero(net.parameter_count()));
    net.set_wrapper(make_wrapper("adv_diff_exact"));
    for (int i = 0; i <= 20; ++i) {
        const std::vector<double> pt{i / 20.0, 0.1};
        CHECK(std::abs(residual_at(net, p, 0, pt).r[0]) < 1e-10);
        CHECK(net.forward(pt)[0] == doctest::Approx(adv_diff_exact(i / 20.0, 0.1).first).epsilon(1e-14));
    }
}

TEST_CASE("adv-diff eps derivative matches central differences") {
    for (double eps : {0.05, 0.1, 0.15}) {
        for (int i = 0; i <= 10; ++i) {
            const double x = i / 10.0;
            const double h = 1e-5;
            const double fd = (adv_diff_exact(x, eps + h).first - adv_diff_exact(x, eps - h).first) / (2 * h);
            const double d = adv_diff_exact(x, eps).second;
            CHECK(std::abs(fd - d) <= 1e-6 * std::max(std::abs(d), 1e-3));
        }
    }
}

TEST_CASE("adv-diff closed form rejects eps below the floor") {
    CHECK_THROWS_AS(adv_diff_exact(0.5, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(adv_diff_exact(1.5, 0.1), std::invalid_argument);
    CHECK(std::isfinite(adv_diff_exact(0.99, 0.02).second));
}

TEST_CASE("poisson9 unit diffusivity centre value") {
    const double u129 = centre(poisson9_fd_solve(ones9(), 129));
    const double u257 = centre(poisson9_fd_solve(ones9(), 257));
    // Series value of the unit-square torsion problem at the centre: 0.07367.
    CHECK(std::abs(u257 - 0.07367) < 5e-4);
    CHECK(std::abs(u129 - 0.07367) < 5e-4);
    CHECK(std::abs(max_abs(poisson9_fd_solve(ones9(), 129)) - max_abs(poisson9_fd_solve(ones9(), 257))) <
          0.005 * max_abs(poisson9_fd_solve(ones9(), 257)));
}

TEST_CASE("poisson9 grid rules") {
    CHECK_THROWS_AS(poisson9_fd_solve(ones9(), 29), std::invalid_argument);
    CHECK_THROWS_AS(poisson9_fd_solve(ones9(), 64), std::invalid_argument);
    CHECK_THROWS_AS(poisson9_fd_solve(std::vector<double>(8, 1.0), 33), std::invalid_argument);
    const GridField g = poisson9_fd_solve(ones9(), 33);
    CHECK_NOTHROW(g.validate());
    CHECK(g.values.size() == 33 * 33);
}

TEST_CASE("poisson9 symmetry under x <-> y") {
    // k pattern symmetric under transposition of the cell layout (row-major from the top-left).
    // Cell (row r, col c) maps to (row 2 - c, col 2 - r) under x <-> y.
    const std::vector<double> k{1.0, 2.0, 0.7, 1.3, 1.1, 2.0, 0.5, 1.3, 1.0};
    for (auto scheme : {InterfaceScheme::strong, InterfaceScheme::harmonic_flux}) {
        const GridField g = poisson9_fd_solve(k, 65, scheme);
        double worst = 0.0;
        for (std::size_t i = 0; i < 65; ++i)
            for (std::size_t j = 0; j < 65; ++j) worst = std::max(worst, std::abs(g.at(i, j) - g.at(j, i)));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("poisson9 scaling: doubling every k halves u") {
    for (auto scheme : {InterfaceScheme::strong, InterfaceScheme::harmonic_flux}) {
        const std::vector<double> k{1.0, 2.0, 0.7, 1.3, 1.1, 2.0, 0.5, 1.3, 1.0};
        std::vector<double> k2 = k;
        for (auto& v : k2) v *= 2.0;
        const GridField a = poisson9_fd_solve(k, 65, scheme), b = poisson9_fd_solve(k2, 65, scheme);
        CHECK((a.values - 2.0 * b.values).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("poisson9 converges at second order") {
    const auto order = [](const std::vector<double>& k, InterfaceScheme scheme) {
        // Interfaces stay at the same offset from the nodes on all three grids.
        const double a = centre(poisson9_fd_solve(k, 97, scheme));
        const double b = centre(poisson9_fd_solve(k, 193, scheme));
        const double c = centre(poisson9_fd_solve(k, 385, scheme));
        return std::log2(std::abs(a - b) / std::abs(b - c));
    };
    const std::vector<double> mixed{1.0, 2.0, 0.7, 1.3, 1.1, 2.0, 0.5, 1.3, 1.0};
    const std::vector<double> layered{0.5, 1.0, 2.0, 0.5, 1.0, 2.0, 0.5, 1.0, 2.0};
    CHECK(order(mixed, InterfaceScheme::strong) > 1.8);
    CHECK(order(layered, InterfaceScheme::strong) > 1.8);
    CHECK(order(ones9(), InterfaceScheme::harmonic_flux) > 1.8);
    CHECK(order(layered, InterfaceScheme::harmonic_flux) > 1.8);
    CHECK(order(mixed, InterfaceScheme::harmonic_flux) > 1.8);
}

TEST_CASE("finite-difference sensitivity") {
    SUBCASE("linear solver gives its slope") {
        const ParamSolver linear = [](std::span<const double> p) {
            GridField g;
            g.axis_names = {"x"};
            g.axes = {{0.0, 1.0}};
            g.values.resize(2);
            g.values << 3.0 * p[0] + 1.0, -2.0 * p[0];
            return g;
        };
        const std::vector<double> p{0.7};
        const auto s = fd_param_sensitivity(linear, p, 0, "a");
        CHECK(s.h == doctest::Approx(0.007));
        CHECK(s.field.values[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(s.field.values[1] == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK_THROWS_AS(fd_param_sensitivity(linear, std::vector<double>{0.0}, 0, "a"), std::invalid_argument);
    }
    SUBCASE("poisson9 centre sensitivity is negative and concentrated in the centre cell") {
        const ParamSolver solve = [](std::span<const double> k) { return poisson9_fd_solve(k, 65); };
        const auto s = fd_param_sensitivity(solve, ones9(), 4, "k5", 0.01);
        const GridField& d = s.field;
        CHECK(d.values.maxCoeff() <= 0.0);
        const double inside = d.at(32, 32);
        CHECK(inside == doctest::Approx(d.values.minCoeff()));
        CHECK(std::abs(d.at(5, 5)) < 0.2 * std::abs(inside));
    }
    SUBCASE("halving h changes the estimate at second order") {
        const ParamSolver solve = [](std::span<const double> k) { return poisson9_fd_solve(k, 33); };
        const auto s1 = fd_param_sensitivity(solve, ones9(), 0, "k1", 0.2);
        const auto s2 = fd_param_sensitivity(solve, ones9(), 0, "k1", 0.1);
        const auto s3 = fd_param_sensitivity(solve, ones9(), 0, "k1", 0.05);
        const double r = (s1.field.values - s2.field.values).norm() / (s2.field.values - s3.field.values).norm();
        CHECK(r == doctest::Approx(4.0).epsilon(0.05));
    }
}

TEST_CASE("sharp-interface front") {
    CHECK(twophase1d_front(0.0, 1.0).x_f == 0.0);
    CHECK(twophase1d_front(0.5, 1.0).x_f == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(twophase1d_front(0.1, 1.0, 0.5).t_fill == doctest::Approx(0.125).epsilon(1e-15));
    const auto f = twophase1d_front(0.2, 1.3);
    CHECK(f.dx_f_dk == doctest::Approx(std::sqrt(0.2 / (2 * 1.3))).epsilon(1e-14));
    CHECK_THROWS_AS(twophase1d_front(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("two-phase finite volume reference") {
    TwoPhaseGrid grid;
    grid.nx = 800;
    grid.times = {0.02, 0.05, 0.125, 0.2, 0.3};
    const TwoPhaseFields f = twophase1d_fd_solve(TwoPhase1dOptions{}, grid);
    const auto& xs = f.c.axes[0];
    for (std::size_t ti = 0; ti < grid.times.size(); ++ti) {
        std::vector<double> col(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) col[i] = f.c.at(i, ti);
        // upwind monotonicity
        for (std::size_t i = 1; i < xs.size(); ++i) CHECK(col[i] <= col[i - 1] + 1e-12);
        const double front = level_crossing(xs, col);
        if (grid.times[ti] == 0.125) CHECK(std::abs(front - 0.5) < 0.01);
        CHECK(std::abs(front - twophase1d_front(grid.times[ti], 1.0).x_f) <
              0.02 * twophase1d_front(grid.times[ti], 1.0).x_f + 0.005);
        // mass balance: filled volume equals the injected volume
        double filled = 0.0;
        for (double v : col) filled += v * (xs[1] - xs[0]);
        CHECK(std::abs(filled - f.injected[ti]) < 0.01 * f.injected[ti]);
    }
    TwoPhaseGrid bad = grid;
    bad.cfl = 1.5;
    CHECK_THROWS_AS(twophase1d_fd_solve(TwoPhase1dOptions{}, bad), std::invalid_argument);
}

TEST_CASE("upwind transport converges at first order") {
    const auto front_err = [](int nx) {
        TwoPhaseGrid g;
        g.nx = nx;
        g.times = {0.125};
        const auto f = twophase1d_fd_solve(TwoPhase1dOptions{}, g);
        std::vector<double> col(f.c.axes[0].size());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = f.c.at(i, 0);
        // L1 distance to the sharp profile
        double e = 0.0;
        const double xf = twophase1d_front(0.125, 1.0).x_f;
        for (std::size_t i = 0; i < col.size(); ++i) e += std::abs(col[i] - (f.c.axes[0][i] < xf ? 1.0 : 0.0));
        return e / nx;
    };
    const double e1 = front_err(200), e2 = front_err(800);
    // first-order upwind smears a contact over O(sqrt(dx)); a factor 4 in nx at least halves it
    CHECK(e2 < 0.6 * e1);
}

TEST_CASE("grid CSV layout") {
    GridField g;
    g.axis_names = {"x", "t"};
    g.axes = {{0.0, 0.5}, {0.1, 0.2}};
    g.values.resize(4);
    g.values << 1, 2, 3, 4;
    std::ostringstream os;
    g.write_csv(os);
    CHECK(os.str() == "x,t,value\n0,0.10000000000000001,1\n0,0.20000000000000001,2\n0.5,0.10000000000000001,3\n"
                      "0.5,0.20000000000000001,4\n");
    CHECK(level_crossing(std::vector<double>{0, 1, 2}, std::vector<double>{1, 1, 0}) == 1.5);
}
