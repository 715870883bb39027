#include "sapinn/problems.hpp"

#include "sapinn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sapinn {

namespace {

Param fixed(std::string name, double value) { return Param{std::move(name), value, false, value, value, false, 1.0}; }

Param of_interest(std::string name, double nominal, double lo, double hi, bool sensitive, double scale = 1.0) {
    return Param{std::move(name), nominal, sensitive, lo, hi, true, scale};
}

Region box(std::vector<double> lo, std::vector<double> hi) { return Region{std::move(lo), std::move(hi)}; }

// Smooth step: 1 below -1, 0 above 1, C2 in between.
double smooth_step(double s) {
    if (s <= -1.0) return 1.0;
    if (s >= 1.0) return 0.0;
    const double u = 0.5 * (s + 1.0);  // 0..1
    return 1.0 - u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

double smooth_step_ds(double s) {
    if (s <= -1.0 || s >= 1.0) return 0.0;
    const double u = 0.5 * (s + 1.0);
    return -0.5 * 30.0 * u * u * (u - 1.0) * (u - 1.0);
}

// Lower end of the soft clamp and its slope in c, for u = (c + w) / (2w) in [0, 1].
// The slope is the cubic smoothstep, so the clamp is C2 and meets s = c at c = w.
std::pair<SensReal, SensReal> soft_ramp(const SensReal& c, double w) {
    const SensReal u = (c + SensReal(w)) * SensReal(0.5 / w);
    const SensReal u2 = u * u;
    const SensReal value = SensReal(2.0 * w) * u2 * u * (SensReal(1.0) - SensReal(0.5) * u);
    const SensReal slope = u2 * (SensReal(3.0) - SensReal(2.0) * u);
    return {value, slope};
}

// Clamped fraction s(c) and ds/dc. w = 0 is the hard clamp to [0, 1].
std::pair<SensReal, SensReal> clamped_fraction(const SensReal& c, double w) {
    const double v = c.value();
    if (w <= 0.0) {
        if (v < 0.0) return {SensReal(0.0), SensReal(0.0)};
        if (v > 1.0) return {SensReal(1.0), SensReal(0.0)};
        return {c, SensReal(1.0)};
    }
    if (v <= -w) return {SensReal(0.0), SensReal(0.0)};
    if (v >= 1.0 + w) return {SensReal(1.0), SensReal(0.0)};
    if (v < w) return soft_ramp(c, w);
    if (v > 1.0 - w) {
        auto [s, ds] = soft_ramp(SensReal(1.0) - c, w);
        return {SensReal(1.0) - s, ds};
    }
    return {c, SensReal(1.0)};
}

SensReal viscosity_gradient(const SensReal& c, const SensReal& c_d, double mu1, double mu2, double w) {
    return clamped_fraction(c, w).second * c_d * (mu2 - mu1);
}

}  // namespace

std::string_view to_string(ConditionKind kind) {
    switch (kind) {
    case ConditionKind::interior:
        return "interior";
    case ConditionKind::initial:
        return "initial";
    case ConditionKind::dirichlet:
        return "dirichlet";
    case ConditionKind::neumann:
        return "neumann";
    case ConditionKind::hard:
        return "hard";
    }
    return "interior";
}

ConditionKind condition_kind_from_string(std::string_view name) {
    for (auto k : {ConditionKind::interior, ConditionKind::initial, ConditionKind::dirichlet, ConditionKind::neumann,
                   ConditionKind::hard}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown condition kind: " + std::string(name));
}

std::string_view to_string(SamplingStrategy s) {
    switch (s) {
    case SamplingStrategy::equispaced:
        return "equispaced";
    case SamplingStrategy::latin_hypercube:
        return "latin_hypercube";
    case SamplingStrategy::adaptive_residual:
        return "adaptive_residual";
    }
    return "equispaced";
}

SamplingStrategy sampling_strategy_from_string(std::string_view name) {
    for (auto s : {SamplingStrategy::equispaced, SamplingStrategy::latin_hypercube, SamplingStrategy::adaptive_residual}) {
        if (to_string(s) == name) return s;
    }
    throw std::invalid_argument("unknown sampling strategy: " + std::string(name));
}

int ParamVector::index(std::string_view name) const {
    for (int i = 0; i < size(); ++i) {
        if (entries[static_cast<std::size_t>(i)].name == name) return i;
    }
    throw std::out_of_range("unknown parameter: " + std::string(name));
}

std::vector<int> ParamVector::inputs() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if ((*this)[i].input) out.push_back(i);
    }
    return out;
}

std::vector<int> ParamVector::sensitive() const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i) {
        if ((*this)[i].input && (*this)[i].sensitive) out.push_back(i);
    }
    return out;
}

void ParamVector::validate(bool sa_mode) const {
    for (const auto& p : entries) {
        if (!p.input) continue;
        if (!(p.lo < p.nominal && p.nominal < p.hi)) {
            throw std::invalid_argument("parameter " + p.name + ": nominal must lie strictly inside its range");
        }
    }
    if (sa_mode && sensitive().empty()) {
        throw std::invalid_argument("sensitivity mode needs at least one sensitivity-flagged parameter");
    }
}

std::vector<int> Region::free_axes() const {
    std::vector<int> out;
    for (int i = 0; i < dims(); ++i) {
        if (hi[static_cast<std::size_t>(i)] > lo[static_cast<std::size_t>(i)]) out.push_back(i);
    }
    return out;
}

bool Region::contains(std::span<const double> coords, double tol) const {
    for (int i = 0; i < dims(); ++i) {
        const double v = coords[static_cast<std::size_t>(i)];
        if (v < lo[static_cast<std::size_t>(i)] - tol || v > hi[static_cast<std::size_t>(i)] + tol) return false;
    }
    return true;
}

const SensReal& JetReader::operator()(int output, const Partial& partial) const {
    for (std::size_t j = 0; j < uses_.size(); ++j) {
        if (uses_[j].output == output && uses_[j].partial == partial) return values_[j];
    }
    throw std::out_of_range("residual reads undeclared jet entry " + partial.to_string() + " of output " +
                            std::to_string(output));
}

int ProblemSpec::input_dim() const { return space_time_dim() + static_cast<int>(params.inputs().size()); }

int ProblemSpec::param_slot(int param_index) const {
    int slot = space_time_dim();
    for (int i = 0; i < params.size(); ++i) {
        if (!params[i].input) continue;
        if (i == param_index) return slot;
        ++slot;
    }
    throw std::invalid_argument("parameter " + params[param_index].name + " is not a network input");
}

std::vector<InputSlot> ProblemSpec::input_layout() const {
    std::vector<InputSlot> layout;
    for (const auto& n : space_names) layout.push_back({n, SlotKind::space, 1.0});
    if (time_dependent) layout.push_back({"t", SlotKind::time, 1.0});
    for (const auto& p : params.entries) {
        if (p.input) layout.push_back({p.name, SlotKind::parameter, p.input_scale});
    }
    return layout;
}

NetworkSpec ProblemSpec::network_spec(int hidden_layers, int hidden_width, std::uint64_t seed) const {
    NetworkSpec spec;
    spec.input_layout = input_layout();
    spec.hidden_layers = hidden_layers;
    spec.hidden_width = hidden_width;
    spec.output_dim = output_dim;
    spec.init_seed = seed;
    return spec;
}

std::vector<double> ProblemSpec::input_point(std::span<const double> space_time) const {
    std::vector<double> p(space_time.begin(), space_time.end());
    p.resize(static_cast<std::size_t>(space_time_dim()), 0.0);
    for (int i : params.inputs()) p.push_back(params[i].nominal);
    return p;
}

int ProblemSpec::condition_index(std::string_view n) const {
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        if (conditions[i].name == n) return static_cast<int>(i);
    }
    throw std::out_of_range("problem " + name + " has no condition " + std::string(n));
}

int poisson9_cell(double x, double y) {
    const int col = std::clamp(static_cast<int>(std::floor(x * 3.0)), 0, 2);
    const int row = std::clamp(static_cast<int>(std::floor((1.0 - y) * 3.0)), 0, 2);
    return row * 3 + col;
}

SensReal blended_viscosity(const SensReal& c, double mu1, double mu2, double smoothing) {
    const SensReal cc = clamped_fraction(c, smoothing).first;
    return cc * mu2 + (SensReal(1.0) - cc) * mu1;
}

StripRegion twophase2d_region(double y, const TwoPhase2dOptions& o) {
    return y < o.strip_height ? StripRegion::strip : StripRegion::bulk;
}

double twophase2d_strip_weight(double y, const TwoPhase2dOptions& o) {
    if (o.strip_transition <= 0.0) return y < o.strip_height ? 1.0 : 0.0;
    return smooth_step((y - o.strip_height) / o.strip_transition);
}

double twophase2d_strip_weight_dy(double y, const TwoPhase2dOptions& o) {
    if (o.strip_transition <= 0.0) return 0.0;
    return smooth_step_ds((y - o.strip_height) / o.strip_transition) / o.strip_transition;
}

double twophase2d_permeability(double y, double k, const TwoPhase2dOptions& o) {
    return o.k_bulk * (1.0 + (k - 1.0) * twophase2d_strip_weight(y, o));
}

ProblemSpec make_adv_diff(const AdvDiffOptions& o) {
    ProblemSpec p;
    p.name = "adv_diff";
    p.space_names = {"x"};
    p.domain = box({0.0}, {1.0});
    p.params.entries = {of_interest("eps", o.eps, o.eps_lo, o.eps_hi, true)};
    p.output_dim = 1;
    p.output_names = {"u"};
    p.default_strategy = SamplingStrategy::equispaced;

    const Partial x{0}, xx{0, 0};
    Condition pde;
    pde.name = "pde";
    pde.kind = ConditionKind::interior;
    pde.region = p.domain;
    pde.uses = {{0, x}, {0, xx}};
    pde.residual = [x, xx](const ResidualInputs& in, std::span<SensReal> r) {
        r[0] = in.params[0] * in.u(0, xx) - in.u(0, x) + SensReal(1.0);
    };
    pde.default_count = 100;
    p.conditions.push_back(pde);

    for (auto [name, where, target] : {std::tuple{"left", 0.0, 1.0}, std::tuple{"right", 1.0, 3.0}}) {
        Condition bc;
        bc.name = name;
        bc.kind = ConditionKind::dirichlet;
        bc.region = box({where}, {where});
        bc.applies_to = 0;
        bc.uses = {{0, Partial{}}};
        bc.residual = [target](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(0) - SensReal(target); };
        bc.default_count = 1;
        p.conditions.push_back(bc);
    }
    p.params.validate(true);
    return p;
}

ProblemSpec make_poisson9(const Poisson9Options& o) {
    ProblemSpec p;
    p.name = "poisson9";
    p.space_names = {"x", "y"};
    p.domain = box({0.0, 0.0}, {1.0, 1.0});
    for (int i = 0; i < 9; ++i) {
        p.params.entries.push_back(
            of_interest("k" + std::to_string(i + 1), o.k_nominal, o.k_lo, o.k_hi, i < o.sensitive_count));
    }
    p.output_dim = 1;
    p.output_names = {"u"};
    p.wrapper = "unit_square_box";
    p.default_strategy = SamplingStrategy::latin_hypercube;

    const Partial xx{0, 0}, yy{1, 1};
    Condition pde;
    pde.name = "pde";
    pde.kind = ConditionKind::interior;
    pde.region = p.domain;
    pde.uses = {{0, xx}, {0, yy}};
    pde.residual = [xx, yy](const ResidualInputs& in, std::span<SensReal> r) {
        const int cell = poisson9_cell(in.point[0], in.point[1]);
        r[0] = in.params[static_cast<std::size_t>(cell)] * (in.u(0, xx) + in.u(0, yy)) + SensReal(1.0);
    };
    pde.default_count = 1000;
    p.conditions.push_back(pde);

    Condition wall;
    wall.name = "walls";
    wall.kind = ConditionKind::hard;
    wall.region = p.domain;
    wall.applies_to = 0;
    p.conditions.push_back(wall);
    p.params.validate(o.sensitive_count > 0);
    return p;
}

ProblemSpec make_twophase1d(const TwoPhase1dOptions& o) {
    ProblemSpec p;
    p.name = "twophase1d";
    p.space_names = {"x"};
    p.time_dependent = true;
    p.domain = box({0.0, 0.0}, {o.length, o.horizon});
    p.params.entries = {of_interest("k", o.k, o.k_lo, o.k_hi, true),
                        fixed("phi", o.phi),
                        fixed("mu1", o.mu1),
                        fixed("mu2", o.mu2),
                        fixed("p_in", o.p_in),
                        fixed("p_out", o.p_out),
                        fixed("l", o.length)};
    p.output_dim = 2;
    p.output_names = {"p", "c"};
    p.default_strategy = SamplingStrategy::adaptive_residual;

    constexpr int P = 0, C = 1;
    const Partial t{1}, x{0}, xx{0, 0};
    Condition pde;
    pde.name = "pde";
    pde.kind = ConditionKind::interior;
    pde.region = p.domain;
    pde.uses = {{P, x}, {P, xx}, {C, Partial{}}, {C, t}, {C, x}};
    pde.residual_count = 2;
    const double mu1 = o.mu1, mu2 = o.mu2, phi = o.phi, w = o.fraction_smoothing;
    const PressureForm form = o.pressure_form;
    pde.residual = [=](const ResidualInputs& in, std::span<SensReal> r) {
        const SensReal& k = in.params[0];
        const SensReal& c = in.u(C);
        const SensReal& c_x = in.u(C, x);
        const SensReal& p_x = in.u(P, x);
        const SensReal& p_xx = in.u(P, xx);
        const SensReal mu = blended_viscosity(c, mu1, mu2, w);
        const SensReal mu_x = viscosity_gradient(c, c_x, mu1, mu2, w);
        const SensReal mobility = k / (mu * phi);
        const SensReal v = -mobility * p_x;
        r[0] = in.u(C, t) + v * c_x;
        if (form == PressureForm::flux) {
            r[1] = -(k / phi) * (p_xx / mu - p_x * mu_x / (mu * mu));
        } else if (form == PressureForm::balanced) {
            r[1] = -(k / phi) * (p_xx - p_x * mu_x / mu);
        } else {
            r[1] = -(k / phi) * (mu * p_xx - p_x * mu_x) / SensReal(mu2 * mu2);
        }
    };
    pde.default_count = 500;
    p.conditions.push_back(pde);

    const auto dirichlet = [&](std::string name, ConditionKind kind, Region region, int output, double target,
                               int count) {
        Condition bc;
        bc.name = std::move(name);
        bc.kind = kind;
        bc.region = std::move(region);
        bc.applies_to = output;
        bc.uses = {{output, Partial{}}};
        bc.residual = [output, target](const ResidualInputs& in, std::span<SensReal> r) {
            r[0] = in.u(output) - SensReal(target);
        };
        bc.default_count = count;
        p.conditions.push_back(bc);
    };
    const double gap = o.corner_gap;
    dirichlet("initial_c", ConditionKind::initial, box({gap, 0.0}, {o.length, 0.0}), C, 0.0, 100);
    dirichlet("inlet_c", ConditionKind::dirichlet, box({0.0, o.inlet_time_gap}, {0.0, o.horizon}), C, 1.0, 100);
    dirichlet("inlet_p", ConditionKind::dirichlet, box({0.0, 0.0}, {0.0, o.horizon}), P, o.p_in, 100);
    dirichlet("outlet_p", ConditionKind::dirichlet, box({o.length, 0.0}, {o.length, o.horizon}), P, o.p_out, 100);
    p.params.validate(true);
    return p;
}

ProblemSpec make_twophase2d(const TwoPhase2dOptions& o) {
    ProblemSpec p;
    p.name = "twophase2d";
    p.space_names = {"x", "y"};
    p.time_dependent = true;
    p.domain = box({0.0, 0.0, 0.0}, {1.0, 1.0, o.horizon});
    p.params.entries = {of_interest("k", o.k, o.k_lo, o.k_hi, true, o.k_input_scale),
                        fixed("k1", o.k_bulk),
                        fixed("phi", o.phi),
                        fixed("mu1", o.mu1),
                        fixed("mu2", o.mu2),
                        fixed("v_in", o.v_in),
                        fixed("p_out", o.p_out)};
    p.output_dim = 2;
    p.output_names = {"p", "c"};
    p.default_strategy = SamplingStrategy::latin_hypercube;

    constexpr int P = 0, C = 1;
    const Partial x{0}, y{1}, t{2}, xx{0, 0}, yy{1, 1};
    const double mu1 = o.mu1, mu2 = o.mu2, phi = o.phi, v_in = o.v_in, w = o.fraction_smoothing;
    const PressureForm form = o.pressure_form;
    const TwoPhase2dOptions opts = o;
    // K(y; k) = k1 (1 + (k - 1) w(y)) and dK/dy.
    const auto permeability = [opts](const SensReal& k, double yv) {
        const double w = twophase2d_strip_weight(yv, opts);
        const double wy = twophase2d_strip_weight_dy(yv, opts);
        const SensReal K = SensReal(opts.k_bulk) * (SensReal(1.0) + (k - SensReal(1.0)) * w);
        const SensReal K_y = SensReal(opts.k_bulk * wy) * (k - SensReal(1.0));
        return std::pair{K, K_y};
    };

    Condition pde;
    pde.name = "pde";
    pde.kind = ConditionKind::interior;
    pde.region = p.domain;
    pde.uses = {{P, x}, {P, y}, {P, xx}, {P, yy}, {C, Partial{}}, {C, t}, {C, x}, {C, y}};
    pde.residual_count = 2;
    pde.residual = [=](const ResidualInputs& in, std::span<SensReal> r) {
        const auto [K, K_y] = permeability(in.params[0], in.point[1]);
        const SensReal& c = in.u(C);
        const SensReal& p_x = in.u(P, x);
        const SensReal& p_y = in.u(P, y);
        const SensReal lap = in.u(P, xx) + in.u(P, yy);
        const SensReal mu = blended_viscosity(c, mu1, mu2, w);
        const SensReal mu_x = viscosity_gradient(c, in.u(C, x), mu1, mu2, w);
        const SensReal mu_y = viscosity_gradient(c, in.u(C, y), mu1, mu2, w);
        const SensReal mobility = K / (mu * phi);
        r[0] = in.u(C, t) - mobility * (p_x * in.u(C, x) + p_y * in.u(C, y));
        const SensReal grad_p_grad_mu = p_x * mu_x + p_y * mu_y;
        if (form == PressureForm::flux) {
            r[1] = -(SensReal(1.0 / phi)) * ((K * lap + K_y * p_y) / mu - K * grad_p_grad_mu / (mu * mu));
        } else if (form == PressureForm::balanced) {
            r[1] = -(SensReal(1.0 / phi)) * (K * lap + K_y * p_y - K * grad_p_grad_mu / mu);
        } else {
            r[1] = -(SensReal(1.0 / phi)) * (mu * (K * lap + K_y * p_y) - K * grad_p_grad_mu) / SensReal(mu2 * mu2);
        }
    };
    pde.default_count = 2000;
    p.conditions.push_back(pde);

    const double gap = o.corner_gap, T = o.horizon, h_in = o.inlet_height;
    const auto add = [&](std::string name, ConditionKind kind, Region region, int output, std::vector<OutputPartial> uses,
                         ResidualFn fn, int count) {
        Condition bc;
        bc.name = std::move(name);
        bc.kind = kind;
        bc.region = std::move(region);
        bc.applies_to = output;
        bc.uses = std::move(uses);
        bc.residual = std::move(fn);
        bc.default_count = count;
        p.conditions.push_back(std::move(bc));
    };
    add("initial_c", ConditionKind::initial, box({gap, 0.0, 0.0}, {1.0, 1.0, 0.0}), C, {{C, Partial{}}},
        [](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(C); }, 300);
    add("inlet_c", ConditionKind::dirichlet, box({0.0, 0.0, o.inlet_time_gap}, {0.0, h_in, T}), C, {{C, Partial{}}},
        [](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(C) - SensReal(1.0); }, 150);
    add("outlet_p", ConditionKind::dirichlet, box({1.0, 0.0, 0.0}, {1.0, 1.0, T}), P, {{P, Partial{}}},
        [p_out = o.p_out](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(P) - SensReal(p_out); },
        150);
    add("inlet_flux", ConditionKind::neumann, box({0.0, 0.0, 0.0}, {0.0, h_in, T}), P, {{P, x}},
        [=](const ResidualInputs& in, std::span<SensReal> r) {
            const auto KK = permeability(in.params[0], in.point[1]);
            r[0] = -(KK.first / SensReal(phi * mu2)) * in.u(P, x) - SensReal(v_in);
        },
        150);
    add("left_wall", ConditionKind::neumann, box({0.0, h_in, 0.0}, {0.0, 1.0, T}), P, {{P, x}},
        [=](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(P, x); }, 100);
    add("bottom_wall", ConditionKind::neumann, box({0.0, 0.0, 0.0}, {1.0, 0.0, T}), P, {{P, y}},
        [=](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(P, y); }, 100);
    add("top_wall", ConditionKind::neumann, box({0.0, 1.0, 0.0}, {1.0, 1.0, T}), P, {{P, y}},
        [=](const ResidualInputs& in, std::span<SensReal> r) { r[0] = in.u(P, y); }, 100);
    p.params.validate(true);
    return p;
}

int CollocationSet::count(const ProblemSpec& problem, ConditionKind kind) const {
    int n = 0;
    for (const auto& b : blocks) {
        if (problem.conditions[static_cast<std::size_t>(b.condition)].kind == kind) n += static_cast<int>(b.points.cols());
    }
    return n;
}

int CollocationSet::total() const {
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.points.cols());
    return n;
}

int SampleCounts::count_for(const Condition& condition) const {
    if (auto it = counts.find(condition.name); it != counts.end()) return it->second;
    if (auto it = counts.find(std::string(to_string(condition.kind))); it != counts.end()) return it->second;
    return condition.default_count;
}

Eigen::MatrixXd latin_hypercube(int dims, int count, std::uint64_t seed) {
    Eigen::MatrixXd u(dims, count);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::vector<int> perm(static_cast<std::size_t>(count));
    for (int d = 0; d < dims; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < count; ++i) {
            u(d, i) = (perm[static_cast<std::size_t>(i)] + jitter(rng)) / static_cast<double>(count);
        }
    }
    return u;
}

namespace {

Eigen::MatrixXd equispaced_unit(int dims, int count) {
    if (dims == 0) return Eigen::MatrixXd(0, count);
    if (dims == 1) {
        Eigen::MatrixXd u(1, count);
        for (int i = 0; i < count; ++i) u(0, i) = count == 1 ? 0.5 : static_cast<double>(i) / (count - 1);
        return u;
    }
    const int m = std::max(2, static_cast<int>(std::lround(std::pow(count, 1.0 / dims))));
    int total = 1;
    for (int d = 0; d < dims; ++d) total *= m;
    Eigen::MatrixXd u(dims, total);
    for (int i = 0; i < total; ++i) {
        int r = i;
        for (int d = 0; d < dims; ++d) {
            u(d, i) = static_cast<double>(r % m) / (m - 1);
            r /= m;
        }
    }
    return u;
}

// Maps unit-cube samples to input coordinates of `condition`.
Eigen::MatrixXd to_inputs(const ProblemSpec& problem, const Condition& condition, const Eigen::MatrixXd& unit,
                          bool parametric) {
    const auto free = condition.region.free_axes();
    const auto inputs = problem.params.inputs();
    Eigen::MatrixXd pts(problem.input_dim(), unit.cols());
    for (Eigen::Index i = 0; i < unit.cols(); ++i) {
        int axis = 0;
        for (int d = 0; d < problem.space_time_dim(); ++d) {
            const double lo = condition.region.lo[static_cast<std::size_t>(d)];
            const double hi = condition.region.hi[static_cast<std::size_t>(d)];
            if (hi > lo) {
                pts(d, i) = lo + (hi - lo) * unit(axis++, i);
            } else {
                pts(d, i) = lo;
            }
        }
        (void)free;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
            const Param& par = problem.params[inputs[j]];
            const int slot = problem.space_time_dim() + static_cast<int>(j);
            pts(slot, i) = parametric ? par.lo + (par.hi - par.lo) * unit(axis++, i) : par.nominal;
        }
    }
    return pts;
}

int sample_dims(const ProblemSpec& problem, const Condition& condition, bool parametric) {
    return static_cast<int>(condition.region.free_axes().size()) +
           (parametric ? static_cast<int>(problem.params.inputs().size()) : 0);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

Eigen::MatrixXd top_residual_points(const ProblemSpec& problem, const Network& network, int condition_index,
                                    const Eigen::MatrixXd& pool, int keep) {
    const Eigen::VectorXd norms = residual_norms(network, problem, condition_index, pool);
    std::vector<int> order(static_cast<std::size_t>(pool.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return norms[a] > norms[b]; });
    keep = std::min<int>(keep, static_cast<int>(pool.cols()));
    Eigen::MatrixXd out(pool.rows(), keep);
    for (int i = 0; i < keep; ++i) out.col(i) = pool.col(order[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

CollocationSet sample(const ProblemSpec& problem, SamplingStrategy strategy, const SampleCounts& counts,
                      std::uint64_t seed, bool parametric, const Network* network, int pool_factor) {
    if (strategy == SamplingStrategy::adaptive_residual && network == nullptr) {
        throw std::invalid_argument("adaptive_residual sampling needs a network to rank residuals");
    }
    if (parametric && problem.params.inputs().empty()) {
        throw std::invalid_argument("parametric sampling needs at least one parameter input");
    }
    CollocationSet set;
    set.parametric = parametric;
    for (std::size_t ci = 0; ci < problem.conditions.size(); ++ci) {
        const Condition& cond = problem.conditions[ci];
        if (cond.kind == ConditionKind::hard) continue;
        const int n = counts.count_for(cond);
        if (n < 0) throw std::invalid_argument("negative point count for condition " + cond.name);
        if (n == 0) continue;
        const int dims = sample_dims(problem, cond, parametric);
        const std::uint64_t s = stream_seed(seed, ci);
        PointBlock block;
        block.condition = static_cast<int>(ci);
        if (strategy == SamplingStrategy::equispaced) {
            block.points = to_inputs(problem, cond, equispaced_unit(dims, n), parametric);
        } else if (strategy == SamplingStrategy::adaptive_residual && cond.kind == ConditionKind::interior) {
            const Eigen::MatrixXd pool = to_inputs(problem, cond, latin_hypercube(dims, n * pool_factor, s), parametric);
            block.points = top_residual_points(problem, *network, static_cast<int>(ci), pool, n);
        } else {
            block.points = to_inputs(problem, cond, latin_hypercube(dims, n, s), parametric);
        }
        set.blocks.push_back(std::move(block));
    }
    return set;
}

void refine_adaptive(const ProblemSpec& problem, const Network& network, CollocationSet& points, int add,
                     int pool_factor, std::uint64_t seed) {
    if (add <= 0) return;
    for (auto& block : points.blocks) {
        const Condition& cond = problem.conditions[static_cast<std::size_t>(block.condition)];
        if (cond.kind != ConditionKind::interior) continue;
        const int dims = sample_dims(problem, cond, points.parametric);
        const std::uint64_t s = stream_seed(seed, 1000 + static_cast<std::uint64_t>(block.condition));
        const Eigen::MatrixXd pool =
            to_inputs(problem, cond, latin_hypercube(dims, add * pool_factor, s), points.parametric);
        const Eigen::MatrixXd best = top_residual_points(problem, network, block.condition, pool, add);
        Eigen::MatrixXd merged(block.points.rows(), block.points.cols() + best.cols());
        merged << block.points, best;
        block.points = std::move(merged);
    }
}

}  // namespace sapinn
