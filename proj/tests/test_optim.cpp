#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sapinn/optim.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

using namespace sapinn;

namespace {

Objective square() {
    return [](const Eigen::VectorXd& x) { return Evaluation{x.squaredNorm(), 2.0 * x, {}}; };
}

Objective rosenbrock() {
    return [](const Eigen::VectorXd& x) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        Evaluation e;
        e.f = a * a + 100.0 * b * b;
        e.g.resize(2);
        e.g << -2.0 * a - 400.0 * x[0] * b, 200.0 * b;
        return e;
    };
}

struct Quadratic {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Objective objective() const {
        return [this](const Eigen::VectorXd& x) {
            return Evaluation{0.5 * x.dot(A * x) - b.dot(x), A * x - b, {}};
        };
    }
};

Quadratic random_quadratic(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = u(rng);
    Quadratic q;
    q.A = M.transpose() * M + Eigen::MatrixXd::Identity(n, n);
    q.b.resize(n);
    for (int i = 0; i < n; ++i) q.b[i] = u(rng);
    return q;
}

// Plain scalar Adam, written independently of the library.
double scalar_adam(double theta, double lr, int steps) {
    double m = 0.0, v = 0.0;
    for (int t = 1; t <= steps; ++t) {
        const double g = 2.0 * theta;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t));
        const double vh = v / (1.0 - std::pow(0.999, t));
        theta -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
    return theta;
}

}  // namespace

TEST_CASE("adam first step is -lr sign(g)") {
    AdamConfig c;
    c.iterations = 1;
    const auto r = adam_minimize(square(), Eigen::VectorXd::Constant(1, 1.0), c);
    CHECK(r.x[0] == doctest::Approx(1.0 - c.lr).epsilon(1e-10));
}

TEST_CASE("adam on theta^2 matches a scalar reference and converges") {
    AdamConfig c;
    c.lr = 1e-2;
    c.iterations = 5000;
    const auto r = adam_minimize(square(), Eigen::VectorXd::Constant(1, 1.0), c);
    CHECK(std::abs(r.x[0]) < 1e-3);
    CHECK(r.x[0] == doctest::Approx(scalar_adam(1.0, 1e-2, 5000)).epsilon(1e-12));
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    AdamConfig c;
    c.iterations = 10;
    const Eigen::VectorXd x0 = Eigen::VectorXd::LinSpaced(4, -1, 1);
    const auto r = adam_minimize([](const Eigen::VectorXd& x) { return Evaluation{1.0, Eigen::VectorXd::Zero(x.size()), {}}; },
                                 x0, c);
    CHECK(r.x == x0);
}

TEST_CASE("adam stops on a non-finite loss") {
    AdamConfig c;
    c.iterations = 10;
    int calls = 0;
    const auto r = adam_minimize(
        [&](const Eigen::VectorXd& x) {
            ++calls;
            return Evaluation{calls >= 3 ? NAN : x.squaredNorm(), 2.0 * x, {}};
        },
        Eigen::VectorXd::Ones(2), c);
    CHECK(r.status == OptimStatus::diverged);
    CHECK(r.iterations == 2);
}

TEST_CASE("config validation") {
    AdamConfig a;
    a.lr = 0.0;
    CHECK_THROWS_AS(a.validate(), std::invalid_argument);
    a = {};
    a.beta2 = 1.0;
    CHECK_THROWS_AS(a.validate(), std::invalid_argument);
    QuasiNewtonConfig q;
    q.gradient_tolerance = 0.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("BFGS with exact line search terminates on a quadratic within n + 2 iterations") {
    const int n = 10;
    for (bool full : {true, false}) {
        CAPTURE(full);
        const Quadratic q = random_quadratic(n, 3);
        QuasiNewtonConfig c;
        c.full = full;
        c.c2 = 1e-10;  // forces the step onto the line minimizer
        c.c1 = 1e-11;
        c.gradient_tolerance = 1e-10;
        c.max_step_halvings = 60;
        const auto r = quasi_newton_minimize(q.objective(), Eigen::VectorXd::Zero(n), c);
        CHECK(r.status == OptimStatus::converged);
        CHECK(r.iterations <= n + 2);
        CHECK((q.A * r.x - q.b).norm() < 1e-10);
    }
}

TEST_CASE("L-BFGS minimizes Rosenbrock from (-1.2, 1)") {
    QuasiNewtonConfig c;
    c.gradient_tolerance = 1e-10;
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto r = quasi_newton_minimize(rosenbrock(), x0, c);
    CHECK(r.f < 1e-8);
    c.full = true;
    CHECK(quasi_newton_minimize(rosenbrock(), x0, c).f < 1e-8);
}

TEST_CASE("quasi-Newton at a stationary point returns immediately") {
    const auto r = quasi_newton_minimize(square(), Eigen::VectorXd::Zero(3), QuasiNewtonConfig{});
    CHECK(r.iterations == 0);
    CHECK(r.status == OptimStatus::converged);
}

TEST_CASE("accepted steps satisfy the strong Wolfe conditions and losses never increase") {
    QuasiNewtonConfig c;
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    std::vector<double> fs;
    const auto r = quasi_newton_minimize(rosenbrock(), x0, c, [&](int, const Eigen::VectorXd&, const Evaluation& e) {
        fs.push_back(e.f);
        return false;
    });
    REQUIRE(!r.steps.empty());
    for (const auto& s : r.steps) {
        CHECK(s.f <= s.f0 + c.c1 * s.alpha * s.slope0);
        CHECK(std::abs(s.slope) <= c.c2 * std::abs(s.slope0));
    }
    for (std::size_t i = 1; i < fs.size(); ++i) CHECK(fs[i] <= fs[i - 1]);
    CHECK(r.f <= rosenbrock()(x0).f);
}

TEST_CASE("line search failure returns the best point so far") {
    // Non-smooth kink at the minimum defeats the curvature condition eventually.
    const Objective kink = [](const Eigen::VectorXd& x) {
        Evaluation e;
        e.f = std::abs(x[0]) + 1e-3 * x[0] * x[0];
        e.g = Eigen::VectorXd::Constant(1, (x[0] >= 0 ? 1.0 : -1.0) + 2e-3 * x[0]);
        return e;
    };
    QuasiNewtonConfig c;
    c.max_iterations = 200;
    const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 3.0);
    const auto r = quasi_newton_minimize(kink, x0, c);
    CHECK(r.f <= kink(x0).f);
    CHECK(r.status != OptimStatus::diverged);
}

TEST_CASE("trace CSV layout") {
    TrainingTrace t;
    t.term_names = {"loss_f", "loss_D"};
    t.records.push_back({1, Phase::adam, 0.5, {0.25, 0.25}, 1.0, 0.01});
    t.records.push_back({2, Phase::quasi_newton, 0.1, {0.05, 0.05}, 0.5, 0.02});
    std::ostringstream os;
    t.write_csv(os);
    CHECK(os.str().rfind("iteration,phase,total,loss_f,loss_D,grad_norm,wall_time\n1,adam,0.5,", 0) == 0);
    CHECK(os.str().find("2,quasi_newton,") != std::string::npos);
}

TEST_CASE("network training is deterministic and iterations increase across phases") {
    const ProblemSpec p = make_adv_diff();
    Network net = Network::init(p.network_spec(2, 8, 4));
    LossFunction loss(p, sample(p, SamplingStrategy::equispaced, {}, 0), LossWeights{}, TrainingMode::sa);
    AdamConfig a;
    a.iterations = 30;
    QuasiNewtonConfig q;
    q.max_iterations = 20;
    const auto a1 = adam_run(net, loss, a);
    const auto q1 = quasi_newton_run(a1.network, loss, q, a1.trace);
    const auto a2 = adam_run(net, loss, a);
    const auto q2 = quasi_newton_run(a2.network, loss, q, a2.trace);
    CHECK(q1.network.flat_weights() == q2.network.flat_weights());
    for (std::size_t i = 1; i < q1.trace.records.size(); ++i) {
        CHECK(q1.trace.records[i].iteration > q1.trace.records[i - 1].iteration);
    }
    CHECK(q1.trace.records.front().phase == Phase::adam);
    CHECK(q1.trace.records.back().phase == Phase::quasi_newton);
    CHECK(q1.trace.records.back().total < q1.trace.records.front().total);
    CHECK(q1.trace.term_names.size() == 8);
}
