#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sapinn/losses.hpp"
#include "sapinn/problems.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

using namespace sapinn;
using sapinn::testing::random_network;

namespace {

// Field value of `output` differentiated by `partial` at a point given in input coordinates.
using Field = std::function<double(int output, const Partial& partial, std::span<const double> point)>;

// Residual of a condition on a prescribed field, bypassing the network.
std::vector<double> residual_of(const ProblemSpec& p, const std::string& cond, const Field& field,
                                std::vector<double> point) {
    const Condition& c = p.conditions[static_cast<std::size_t>(p.condition_index(cond))];
    std::vector<SensReal> vals;
    for (const auto& u : c.uses) vals.emplace_back(field(u.output, u.partial, point));
    std::vector<SensReal> params;
    for (int i = 0; i < p.params.size(); ++i) {
        const Param& q = p.params[i];
        params.emplace_back(q.input ? point[static_cast<std::size_t>(p.param_slot(i))] : q.nominal);
    }
    JetReader reader(c.uses, vals);
    std::vector<SensReal> r(static_cast<std::size_t>(c.residual_count));
    c.residual(ResidualInputs{reader, params, point}, r);
    std::vector<double> out;
    for (const auto& v : r) out.push_back(v.value());
    return out;
}

Field zero_field() {
    return [](int, const Partial&, std::span<const double>) { return 0.0; };
}

}  // namespace

TEST_CASE("adv-diff residual on simple fields") {
    const ProblemSpec p = make_adv_diff();
    CHECK(p.params[0].name == "eps");
    CHECK(p.params[0].nominal == 0.1);
    CHECK(p.params[0].sensitive);
    for (double x : {0.0, 0.3, 1.0}) CHECK(residual_of(p, "pde", zero_field(), {x, 0.1})[0] == 1.0);
    CHECK(residual_of(p, "left", zero_field(), {0.0, 0.1})[0] == -1.0);
    CHECK(residual_of(p, "right", zero_field(), {1.0, 0.1})[0] == -3.0);
    // u = x^3: eps 6x - 3x^2 + 1
    const Field cubic = [](int, const Partial& d, std::span<const double> pt) {
        const double x = pt[0];
        switch (d.order()) {
            case 0: return x * x * x;
            case 1: return 3 * x * x;
            default: return 6 * x;
        }
    };
    for (double x : {0.1, 0.5, 0.9})
        for (double eps : {0.05, 0.1, 0.15})
            CHECK(std::abs(residual_of(p, "pde", cubic, {x, eps})[0] - (eps * 6 * x - 3 * x * x + 1)) < 1e-12);
}

TEST_CASE("poisson9 cell lookup") {
    CHECK(poisson9_cell(0.1, 0.9) == 0);
    CHECK(poisson9_cell(0.5, 0.5) == 4);
    CHECK(poisson9_cell(0.9, 0.1) == 8);
    CHECK(poisson9_cell(0.9, 0.9) == 2);
    CHECK(poisson9_cell(0.1, 0.1) == 6);
    // total and piecewise constant: every interior point maps to exactly one cell, cells tile in thirds
    std::set<int> seen;
    for (int i = 1; i < 300; ++i)
        for (int j = 1; j < 300; ++j) {
            const double x = i / 300.0, y = j / 300.0;
            const int c = poisson9_cell(x, y);
            REQUIRE(c >= 0);
            REQUIRE(c < 9);
            seen.insert(c);
            CHECK(c % 3 == std::min(2, static_cast<int>(3 * x)));
            CHECK(c / 3 == std::min(2, static_cast<int>(3 * (1 - y))));
        }
    CHECK(seen.size() == 9);
}

TEST_CASE("poisson9 residual on the quadratic bump") {
    const ProblemSpec p = make_poisson9();
    CHECK(p.wrapper == "unit_square_box");
    CHECK(p.params.size() == 9);
    CHECK(p.params.sensitive().size() == 9);
    const Field bump = [](int, const Partial& d, std::span<const double> pt) {
        const double x = pt[0], y = pt[1];
        if (d.order() == 0) return (x - x * x) * (y - y * y);
        if (d == Partial{0, 0}) return -2.0 * (y - y * y);
        if (d == Partial{1, 1}) return -2.0 * (x - x * x);
        return std::nan("");
    };
    const std::vector<double> ks{0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4};
    for (double x : {0.1, 0.5, 0.8})
        for (double y : {0.2, 0.5, 0.95}) {
            std::vector<double> pt{x, y};
            pt.insert(pt.end(), ks.begin(), ks.end());
            const double k = ks[static_cast<std::size_t>(poisson9_cell(x, y))];
            const double expect = k * (-2.0 * (y - y * y) - 2.0 * (x - x * x)) + 1.0;
            CHECK(std::abs(residual_of(p, "pde", bump, pt)[0] - expect) < 1e-12);
        }
    std::vector<double> pt{0.4, 0.4};
    pt.resize(11, 1.0);
    CHECK(residual_of(p, "pde", zero_field(), pt)[0] == 1.0);
    CHECK(make_poisson9(Poisson9Options{.sensitive_count = 2}).params.sensitive().size() == 2);
}

TEST_CASE("twophase1d residuals") {
    for (PressureForm form : {PressureForm::flux, PressureForm::scaled, PressureForm::balanced}) {
        TwoPhase1dOptions o;
        o.pressure_form = form;
        const ProblemSpec p = make_twophase1d(o);
        CHECK(p.output_names == std::vector<std::string>{"p", "c"});
        // Fully filled steady state: p = 1 - x, c = 1.
        const Field filled = [](int out, const Partial& d, std::span<const double> pt) {
            if (out == 0) return d.order() == 0 ? 1.0 - pt[0] : (d == Partial{0} ? -1.0 : 0.0);
            return d.order() == 0 ? 1.0 : 0.0;
        };
        for (double x : {0.1, 0.6}) {
            const auto r = residual_of(p, "pde", filled, {x, 0.2, 1.0});
            CHECK(r[0] == 0.0);
            CHECK(r[1] == 0.0);
        }
        // Polynomial field, hand-expanded: c = 0.3 + 0.2 x + 0.1 t, p = 1 - x + 0.25 x^2.
        const Field poly = [](int out, const Partial& d, std::span<const double> pt) {
            const double x = pt[0], t = pt[1];
            if (out == 0) {
                if (d.order() == 0) return 1 - x + 0.25 * x * x;
                if (d == Partial{0}) return -1 + 0.5 * x;
                if (d == Partial{0, 0}) return 0.5;
                return 0.0;
            }
            if (d.order() == 0) return 0.3 + 0.2 * x + 0.1 * t;
            if (d == Partial{0}) return 0.2;
            if (d == Partial{1}) return 0.1;
            return 0.0;
        };
        for (double x : {0.2, 0.7})
            for (double k : {0.5, 1.0, 1.7}) {
                const double t = 0.3, c = 0.3 + 0.2 * x + 0.1 * t;
                const double mu = c * 1.0 + (1 - c) * 1e-5, mu_x = 0.2 * (1.0 - 1e-5);
                const double px = -1 + 0.5 * x, pxx = 0.5;
                const double v = -k / mu * px;
                const double flux = -k * (pxx / mu - px * mu_x / (mu * mu));
                const double expect1 = form == PressureForm::flux     ? flux
                                       : form == PressureForm::scaled ? flux * mu * mu
                                                                      : flux * mu;
                const auto r = residual_of(p, "pde", poly, {x, t, k});
                CHECK(std::abs(r[0] - (0.1 + v * 0.2)) < 1e-12 * std::max(1.0, std::abs(v)));
                CHECK(std::abs(r[1] - expect1) < 1e-12 * std::max(1.0, std::abs(expect1)));
            }
    }
    const ProblemSpec p = make_twophase1d();
    CHECK(residual_of(p, "initial_c", zero_field(), {0.5, 0.0, 1.0})[0] == 0.0);
    CHECK(residual_of(p, "inlet_c", zero_field(), {0.0, 0.2, 1.0})[0] == -1.0);
    CHECK(residual_of(p, "inlet_p", zero_field(), {0.0, 0.2, 1.0})[0] == -1.0);
    CHECK(residual_of(p, "outlet_p", zero_field(), {1.0, 0.2, 1.0})[0] == 0.0);
    CHECK(p.domain.hi[1] == 0.5);
    // corner gap keeps initial and inlet targets apart
    const Condition& ic = p.conditions[static_cast<std::size_t>(p.condition_index("initial_c"))];
    const Condition& in = p.conditions[static_cast<std::size_t>(p.condition_index("inlet_c"))];
    CHECK(ic.region.lo[0] == 0.01);
    // the sharp front needs 0.01^2 / 2 to cross the initial gap
    CHECK(in.region.lo[1] == 5e-5);
    CHECK(in.region.lo[1] > 0.0);
}

TEST_CASE("viscosity blend clamps the fraction") {
    CHECK(blended_viscosity(SensReal(0.0), 1e-5, 1.0).value() == 1e-5);
    CHECK(blended_viscosity(SensReal(1.0), 1e-5, 1.0).value() == 1.0);
    CHECK(blended_viscosity(SensReal(-0.5), 1e-5, 1.0).value() == 1e-5);
    CHECK(blended_viscosity(SensReal(1.5), 1e-5, 1.0).value() == 1.0);
    CHECK(blended_viscosity(SensReal(0.5), 1e-5, 1.0).value() == doctest::Approx(0.500005));
}

TEST_CASE("soft clamp is smooth, monotone and exact away from the edges") {
    const double w = 0.02;
    const auto mu = [w](double c) { return blended_viscosity(SensReal(c), 1e-5, 1.0, w).value(); };
    CHECK(mu(-w) == 1e-5);
    CHECK(mu(-0.3) == 1e-5);
    CHECK(mu(1.0 + w) == 1.0);
    CHECK(mu(0.5) == doctest::Approx(0.500005));
    CHECK(mu(w) == doctest::Approx(w * 1.0 + (1 - w) * 1e-5).epsilon(1e-14));
    double prev = mu(-0.1);
    for (int i = -100; i <= 1100; ++i) {
        const double m = mu(i / 1000.0);
        CHECK(m >= prev);
        CHECK(m > 0.0);
        prev = m;
    }
    // matching slopes across each breakpoint
    for (double c : {-w, w, 1.0 - w, 1.0 + w}) {
        const double h = 1e-7;
        const double left = (mu(c) - mu(c - h)) / h, right = (mu(c + h) - mu(c)) / h;
        CHECK(std::abs(left - right) < 1e-5);
    }
    // the residual path differentiates the same blend
    TwoPhase1dOptions o;
    o.fraction_smoothing = w;
    o.pressure_form = PressureForm::flux;
    const ProblemSpec p = make_twophase1d(o);
    for (double c0 : {-0.01, 0.005, 0.99, 1.01}) {
        const Field f = [c0](int out, const Partial& d, std::span<const double> pt) {
            if (out == 0) return d.order() == 0 ? 1 - pt[0] : (d == Partial{0} ? -1.0 : 0.0);
            if (d.order() == 0) return c0 + 0.001 * pt[0];
            return d == Partial{0} ? 0.001 : 0.0;
        };
        const double x = 0.4, c = c0 + 0.001 * x, h = 1e-7;
        const double mu_x = (mu(c + 0.001 * h) - mu(c - 0.001 * h)) / (2 * h);
        const double expect = -(0.0 / mu(c) - (-1.0) * mu_x / (mu(c) * mu(c)));
        CHECK(residual_of(p, "pde", f, {x, 0.1, 1.0})[1] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("twophase2d geometry and boundary residuals") {
    const TwoPhase2dOptions o;
    const ProblemSpec p = make_twophase2d(o);
    CHECK(p.params[0].nominal == 100.0);
    CHECK(p.params[0].input_scale == 0.01);
    CHECK(twophase2d_region(0.02, o) == StripRegion::strip);
    CHECK(twophase2d_region(0.5, o) == StripRegion::bulk);
    CHECK(twophase2d_permeability(0.02, 100.0, o) == 100.0);
    CHECK(twophase2d_permeability(0.5, 100.0, o) == 1.0);
    for (int i = 0; i <= 1000; ++i) {
        const double y = i / 1000.0, w = twophase2d_strip_weight(y, o);
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
    }
    // p = x y^2: wall operators see p_x = y^2 and p_y = 2 x y
    const Field f = [](int out, const Partial& d, std::span<const double> pt) {
        const double x = pt[0], y = pt[1];
        if (out != 0) return 0.0;
        if (d.order() == 0) return x * y * y;
        if (d == Partial{0}) return y * y;
        if (d == Partial{1}) return 2 * x * y;
        return 0.0;
    };
    CHECK(residual_of(p, "top_wall", f, {0.3, 1.0, 0.1, 1.0})[0] == doctest::Approx(0.6));
    CHECK(residual_of(p, "bottom_wall", zero_field(), {0.3, 0.0, 0.1, 1.0})[0] == 0.0);
    CHECK(residual_of(p, "left_wall", f, {0.0, 0.6, 0.1, 1.0})[0] == doctest::Approx(0.36));
    CHECK(residual_of(p, "outlet_p", zero_field(), {1.0, 0.6, 0.1, 1.0})[0] == 0.0);
    // inlet: Darcy inflow -(K/(phi mu2)) p_x = v_in, inside the strip K = 100 at nominal
    CHECK(residual_of(p, "inlet_flux", f, {0.0, 0.2, 0.1, 100.0})[0] == doctest::Approx(-0.04 - 1.0));
    const double y_strip = 0.01;
    CHECK(residual_of(p, "inlet_flux", f, {0.0, y_strip, 0.1, 100.0})[0] ==
          doctest::Approx(-100.0 * y_strip * y_strip - 1.0));
    for (const auto& c : p.conditions) {
        if (c.kind == ConditionKind::neumann) {
            for (const auto& u : c.uses) CHECK(u.partial.order() <= 1);
        }
    }
}

TEST_CASE("equispaced sampling of adv-diff") {
    const ProblemSpec p = make_adv_diff();
    const CollocationSet s = sample(p, SamplingStrategy::equispaced, {}, 0);
    CHECK(s.count(p, ConditionKind::interior) == 100);
    CHECK(s.count(p, ConditionKind::dirichlet) == 2);
    const auto& pts = s.blocks[0].points;
    for (int i = 0; i < 100; ++i) {
        CHECK(pts(0, i) == doctest::Approx(i / 99.0).epsilon(1e-15));
        CHECK(pts(1, i) == 0.1);
    }
}

TEST_CASE("Latin hypercube strata") {
    const Eigen::MatrixXd u = latin_hypercube(2, 1000, 5);
    for (int d = 0; d < 2; ++d) {
        std::vector<int> hits(1000, 0);
        for (int i = 0; i < 1000; ++i) {
            REQUIRE(u(d, i) >= 0.0);
            REQUIRE(u(d, i) < 1.0);
            ++hits[static_cast<std::size_t>(u(d, i) * 1000)];
        }
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    CHECK(latin_hypercube(2, 1000, 5) == u);
    CHECK(latin_hypercube(2, 1000, 6) != u);
}

TEST_CASE("sampled points lie in their regions and pin parameters") {
    for (const ProblemSpec& p : {make_adv_diff(), make_poisson9(), make_twophase1d(), make_twophase2d()}) {
        CAPTURE(p.name);
        for (bool parametric : {false, true}) {
            const CollocationSet s = sample(p, SamplingStrategy::latin_hypercube, {}, 3, parametric);
            CHECK(s.parametric == parametric);
            for (const auto& b : s.blocks) {
                const Condition& c = p.conditions[static_cast<std::size_t>(b.condition)];
                CHECK(b.points.rows() == p.input_dim());
                CHECK(b.points.cols() == SampleCounts{}.count_for(c));
                for (Eigen::Index i = 0; i < b.points.cols(); ++i) {
                    const std::vector<double> st(b.points.col(i).data(), b.points.col(i).data() + p.space_time_dim());
                    CHECK(c.region.contains(st));
                    CHECK(p.domain.contains(st));
                    for (int q : p.params.inputs()) {
                        const double v = b.points(p.param_slot(q), i);
                        if (parametric) {
                            CHECK(v >= p.params[q].lo);
                            CHECK(v <= p.params[q].hi);
                        } else {
                            CHECK(v == p.params[q].nominal);
                        }
                    }
                }
            }
            const CollocationSet again = sample(p, SamplingStrategy::latin_hypercube, {}, 3, parametric);
            for (std::size_t b = 0; b < s.blocks.size(); ++b) CHECK(s.blocks[b].points == again.blocks[b].points);
        }
    }
}

TEST_CASE("sample counts by name and kind") {
    const ProblemSpec p = make_twophase1d();
    SampleCounts counts;
    counts.counts = {{"dirichlet", 7}, {"inlet_p", 3}, {"interior", 40}};
    const CollocationSet s = sample(p, SamplingStrategy::latin_hypercube, counts, 1);
    CHECK(s.count(p, ConditionKind::interior) == 40);
    CHECK(s.count(p, ConditionKind::dirichlet) == 7 + 3 + 7);
    CHECK(s.count(p, ConditionKind::initial) == 100);
    CHECK_THROWS_AS(sample(p, SamplingStrategy::adaptive_residual, counts, 1), std::invalid_argument);
}

TEST_CASE("adaptive sampling concentrates on large residuals and grows to the target") {
    const ProblemSpec p = make_twophase1d();
    const Network net = random_network(p.network_spec(2, 10, 1), 4);
    CollocationSet s = sample(p, SamplingStrategy::latin_hypercube, {}, 2);
    CHECK(s.count(p, ConditionKind::interior) == 500);
    const Eigen::MatrixXd before = s.blocks[0].points;
    for (int round = 0; round < 4; ++round) refine_adaptive(p, net, s, 500, 10, 100 + round);
    CHECK(s.count(p, ConditionKind::interior) == 2500);
    const Eigen::MatrixXd& after = s.blocks[0].points;
    CHECK(after.leftCols(500) == before);

    // added points sit above the 80th percentile of an independent uniform sample
    Eigen::VectorXd ref = residual_norms(net, p, 0, sample(p, SamplingStrategy::latin_hypercube,
                                                           SampleCounts{{{"pde", 2000}}}, 99).blocks[0].points);
    std::sort(ref.data(), ref.data() + ref.size());
    const double q80 = ref[1600];
    const Eigen::VectorXd added = residual_norms(net, p, 0, after.rightCols(2000));
    CHECK(added.minCoeff() > q80);
    CHECK(added.mean() > ref.mean());

    const CollocationSet direct = sample(p, SamplingStrategy::adaptive_residual, {}, 2, false, &net);
    CHECK(direct.count(p, ConditionKind::interior) == 500);
}

TEST_CASE("parameter vector rules") {
    ParamVector v;
    v.entries = {{"a", 1.0, true, 0.5, 1.5, true, 1.0}, {"b", 2.0, false, 0.0, 0.0, false, 1.0}};
    CHECK(v.index("b") == 1);
    CHECK_THROWS_AS(v.index("c"), std::out_of_range);
    CHECK_NOTHROW(v.validate(true));
    v.entries[0].nominal = 1.5;
    CHECK_THROWS(v.validate(false));
    v.entries[0].nominal = 1.0;
    v.entries[0].sensitive = false;
    CHECK_THROWS(v.validate(true));
    CHECK_NOTHROW(v.validate(false));
}
