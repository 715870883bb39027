#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sapinn/autodiff.hpp"
#include "sapinn/errors.hpp"
#include "sapinn/problems.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace sapinn;
using sapinn::testing::plain_spec;
using sapinn::testing::random_network;
using sapinn::testing::random_point;

TEST_CASE("init is determined by the seed") {
    const NetworkSpec spec = plain_spec(3, 5, 20, 2, 42);
    const Network a = Network::init(spec), b = Network::init(spec);
    CHECK(a.flat_weights() == b.flat_weights());
    NetworkSpec other = spec;
    other.init_seed = 43;
    CHECK(Network::init(other).flat_weights() != a.flat_weights());
}

TEST_CASE("Glorot-uniform bound and zero biases") {
    const Network n = Network::init(plain_spec(3, 5, 20, 2, 7));
    for (const auto& l : n.layers()) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.weights.cols() + l.weights.rows()));
        CHECK(l.weights.cwiseAbs().maxCoeff() <= bound);
        // uniform over [-b, b]: the sample spread should reach most of the interval
        CHECK(l.weights.cwiseAbs().maxCoeff() > 0.8 * bound);
        CHECK(l.bias.isZero(0.0));
    }
    CHECK(n.parameter_count() == (3 * 20 + 20) + 4 * (20 * 20 + 20) + (20 * 2 + 2));
}

TEST_CASE("zero-seeded 5x20 network is finite at the origin") {
    const Network n = Network::init(plain_spec(2, 5, 20, 1, 0));
    CHECK(std::isfinite(n.forward(std::vector<double>{0.0, 0.0})[0]));
}

TEST_CASE("spec validation") {
    NetworkSpec s = plain_spec(2, 0, 20, 1, 0);
    CHECK_THROWS(s.validate());
    s = plain_spec(2, 1, 0, 1, 0);
    CHECK_THROWS(s.validate());
    s = plain_spec(2, 1, 3, 0, 0);
    CHECK_THROWS(s.validate());
    s = plain_spec(2, 1, 3, 1, 0);
    s.activation = "relu";
    CHECK_THROWS(s.validate());
}

TEST_CASE("identity network returns its input") {
    NetworkSpec s = plain_spec(3, 1, 3, 3, 0);
    s.activation = "identity";
    Network n = Network::init(s);
    for (auto& l : n.mutable_layers()) {
        l.weights.setIdentity();
        l.bias.setZero();
    }
    const std::vector<double> p{0.3, -1.2, 5.0};
    CHECK(n.forward(p) == p);
}

TEST_CASE("forward rejects a dimension mismatch") {
    const Network n = Network::init(plain_spec(2, 2, 4, 1, 0));
    CHECK_THROWS_AS(n.forward(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("box wrapper vanishes on the unit-square boundary") {
    const ProblemSpec p = make_poisson9();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> side(0, 3);
    for (int net_seed = 0; net_seed < 5; ++net_seed) {
        Network n = random_network(p.network_spec(5, 20, static_cast<std::uint64_t>(net_seed)), 100 + net_seed);
        n.set_wrapper(make_wrapper("unit_square_box"));
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            std::vector<double> pt = p.input_point(std::vector<double>{u(rng), u(rng)});
            const int s = side(rng);
            pt[static_cast<std::size_t>(s / 2)] = (s % 2 == 0) ? 0.0 : 1.0;
            worst = std::max(worst, std::abs(n.forward(pt)[0]));
        }
        CHECK(worst < 1e-15);
    }
}

TEST_CASE("forward agrees with the order-zero jet") {
    for (int s = 0; s < 10; ++s) {
        const Network n = random_network(plain_spec(3, 4, 10, 2, static_cast<std::uint64_t>(s)), 50 + s);
        const auto pt = random_point(3, 70 + static_cast<std::uint64_t>(s));
        const auto f = n.forward(pt);
        const auto j = eval_jet(n, pt, DerivativeRequest::of_terms(3, {}));
        for (int o = 0; o < 2; ++o) CHECK(std::abs(f[static_cast<std::size_t>(o)] - j.value[static_cast<std::size_t>(o)]) < 1e-12);
    }
}

TEST_CASE("checkpoint round trip") {
    const ProblemSpec p = make_twophase2d();
    Network n = random_network(p.network_spec(3, 8, 11), 9);
    const std::string a = n.save();
    const Network m = Network::load(a);
    CHECK(m.save() == a);
    CHECK(m.flat_weights() == n.flat_weights());
    CHECK(m.spec().init_seed == 11);
    CHECK(m.spec().input_layout.back().scale == n.spec().input_layout.back().scale);
    for (int i = 0; i < 10; ++i) {
        const auto pt = random_point(4, 200 + static_cast<std::uint64_t>(i), 0.0, 1.0);
        CHECK(m.forward(pt) == n.forward(pt));
    }

    Network w = Network::init(make_poisson9().network_spec(2, 4, 0));
    w.set_wrapper(make_wrapper("unit_square_box"));
    const Network w2 = Network::load(w.save());
    REQUIRE(w2.wrapper() != nullptr);
    CHECK(w2.wrapper()->id() == "unit_square_box");
}

TEST_CASE("malformed checkpoints are schema errors") {
    const std::string good = Network::init(plain_spec(2, 2, 3, 1, 0)).save();
    CHECK_THROWS_AS(Network::load(good.substr(0, good.size() / 2)), SchemaError);
    CHECK_THROWS_AS(Network::load(""), SchemaError);
    std::string wrong = good;
    wrong.replace(wrong.find("\"schema\": 1"), 11, "\"schema\": 2");
    CHECK_THROWS_AS(Network::load(wrong), SchemaError);
    CHECK_THROWS_AS(make_wrapper("no_such_wrapper"), SchemaError);
}
