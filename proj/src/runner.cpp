#include "sapinn/runner.hpp"

#include "sapinn/autodiff.hpp"
#include "sapinn/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sapinn {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

[[noreturn]] void schema_fail(const std::string& what) { throw SchemaError("config: " + what); }

// Strict object reader: every key must be consumed by one of the handlers.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) schema_fail(where_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.push_back(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            schema_fail(where_ + "." + key + " has the wrong type");
        }
    }

    const json* sub(const char* key) {
        seen_.push_back(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) schema_fail("unknown key '" + k + "' in " + where_);
        }
    }

private:
    const json& j_;
    std::string where_;
    std::vector<std::string> seen_;
};

template <class F>
auto translate(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        schema_fail(what + ": " + e.what());
    }
}

const std::vector<std::string>& problem_names() {
    static const std::vector<std::string> names{"adv_diff", "poisson9", "twophase1d", "twophase2d"};
    return names;
}

PressureForm pressure_form_from_string(const std::string& s) {
    if (s == "flux") return PressureForm::flux;
    if (s == "scaled") return PressureForm::scaled;
    if (s == "balanced") return PressureForm::balanced;
    schema_fail("unknown pressure_form '" + s + "'");
}

std::string to_string(PressureForm f) {
    switch (f) {
    case PressureForm::flux:
        return "flux";
    case PressureForm::scaled:
        return "scaled";
    case PressureForm::balanced:
        return "balanced";
    }
    return "scaled";
}

std::string to_string(InterfaceScheme s) { return s == InterfaceScheme::strong ? "strong" : "harmonic_flux"; }

InterfaceScheme interface_scheme_from_string(const std::string& s) {
    if (s == "strong") return InterfaceScheme::strong;
    if (s == "harmonic_flux") return InterfaceScheme::harmonic_flux;
    schema_fail("unknown interface_scheme '" + s + "'");
}

// Problem options <-> JSON. Every field is optional on input and explicit on output.
AdvDiffOptions adv_diff_options(const json& j) {
    AdvDiffOptions o;
    ObjectReader r(j, "problem_options");
    r.get("eps", o.eps);
    r.get("eps_lo", o.eps_lo);
    r.get("eps_hi", o.eps_hi);
    r.finish();
    return o;
}

json to_json(const AdvDiffOptions& o) { return {{"eps", o.eps}, {"eps_lo", o.eps_lo}, {"eps_hi", o.eps_hi}}; }

Poisson9Options poisson9_options(const json& j) {
    Poisson9Options o;
    ObjectReader r(j, "problem_options");
    r.get("k_nominal", o.k_nominal);
    r.get("k_lo", o.k_lo);
    r.get("k_hi", o.k_hi);
    r.get("sensitive_count", o.sensitive_count);
    r.finish();
    if (o.sensitive_count < 0 || o.sensitive_count > 9) schema_fail("sensitive_count must lie in [0, 9]");
    return o;
}

json to_json(const Poisson9Options& o) {
    return {{"k_nominal", o.k_nominal}, {"k_lo", o.k_lo}, {"k_hi", o.k_hi}, {"sensitive_count", o.sensitive_count}};
}

TwoPhase1dOptions twophase1d_options(const json& j) {
    TwoPhase1dOptions o;
    ObjectReader r(j, "problem_options");
    r.get("k", o.k);
    r.get("k_lo", o.k_lo);
    r.get("k_hi", o.k_hi);
    r.get("mu1", o.mu1);
    r.get("mu2", o.mu2);
    r.get("p_in", o.p_in);
    r.get("p_out", o.p_out);
    r.get("length", o.length);
    r.get("phi", o.phi);
    r.get("horizon", o.horizon);
    r.get("corner_gap", o.corner_gap);
    r.get("inlet_time_gap", o.inlet_time_gap);
    std::string form = to_string(o.pressure_form);
    r.get("pressure_form", form);
    o.pressure_form = pressure_form_from_string(form);
    r.get("fraction_smoothing", o.fraction_smoothing);
    r.finish();
    return o;
}

json to_json(const TwoPhase1dOptions& o) {
    return {{"k", o.k},
            {"k_lo", o.k_lo},
            {"k_hi", o.k_hi},
            {"mu1", o.mu1},
            {"mu2", o.mu2},
            {"p_in", o.p_in},
            {"p_out", o.p_out},
            {"length", o.length},
            {"phi", o.phi},
            {"horizon", o.horizon},
            {"corner_gap", o.corner_gap},
            {"inlet_time_gap", o.inlet_time_gap},
            {"pressure_form", to_string(o.pressure_form)},
            {"fraction_smoothing", o.fraction_smoothing}};
}

TwoPhase2dOptions twophase2d_options(const json& j) {
    TwoPhase2dOptions o;
    ObjectReader r(j, "problem_options");
    r.get("k", o.k);
    r.get("k_lo", o.k_lo);
    r.get("k_hi", o.k_hi);
    r.get("k_input_scale", o.k_input_scale);
    r.get("k_bulk", o.k_bulk);
    r.get("mu1", o.mu1);
    r.get("mu2", o.mu2);
    r.get("phi", o.phi);
    r.get("v_in", o.v_in);
    r.get("p_out", o.p_out);
    r.get("inlet_height", o.inlet_height);
    r.get("strip_height", o.strip_height);
    r.get("strip_transition", o.strip_transition);
    r.get("horizon", o.horizon);
    r.get("corner_gap", o.corner_gap);
    r.get("inlet_time_gap", o.inlet_time_gap);
    std::string form = to_string(o.pressure_form);
    r.get("pressure_form", form);
    o.pressure_form = pressure_form_from_string(form);
    r.get("fraction_smoothing", o.fraction_smoothing);
    r.finish();
    return o;
}

json to_json(const TwoPhase2dOptions& o) {
    return {{"k", o.k},
            {"k_lo", o.k_lo},
            {"k_hi", o.k_hi},
            {"k_input_scale", o.k_input_scale},
            {"k_bulk", o.k_bulk},
            {"mu1", o.mu1},
            {"mu2", o.mu2},
            {"phi", o.phi},
            {"v_in", o.v_in},
            {"p_out", o.p_out},
            {"inlet_height", o.inlet_height},
            {"strip_height", o.strip_height},
            {"strip_transition", o.strip_transition},
            {"horizon", o.horizon},
            {"corner_gap", o.corner_gap},
            {"inlet_time_gap", o.inlet_time_gap},
            {"pressure_form", to_string(o.pressure_form)},
            {"fraction_smoothing", o.fraction_smoothing}};
}

json resolved_problem_options(const std::string& problem, const json& j) {
    if (problem == "adv_diff") return to_json(adv_diff_options(j));
    if (problem == "poisson9") return to_json(poisson9_options(j));
    if (problem == "twophase1d") return to_json(twophase1d_options(j));
    return to_json(twophase2d_options(j));
}

std::map<ConditionKind, double> kind_weights(const json& j, const std::string& where,
                                             std::map<ConditionKind, double> base) {
    if (!j.is_object()) schema_fail(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        const ConditionKind kind = translate(where, [&] { return condition_kind_from_string(k); });
        if (kind == ConditionKind::hard) schema_fail(where + ": hard conditions carry no weight");
        if (!v.is_number()) schema_fail(where + "." + k + " must be a number");
        base[kind] = v.get<double>();
    }
    return base;
}

json kind_weights_json(const std::map<ConditionKind, double>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[std::string(to_string(k))] = v;
    return j;
}

std::vector<SweepSpec> default_sweeps(const std::string& problem, const json& options) {
    if (problem == "adv_diff") return {SweepSpec{{"eps"}, {0.07}, {0.13}, 25}};
    if (problem == "poisson9") return {SweepSpec{{"k1", "k2"}, {0.7, 0.7}, {1.3, 1.3}, 21}};
    if (problem == "twophase1d") return {SweepSpec{{"k"}, {0.5}, {2.0}, 31}};
    const double k = options.at("k").get<double>();
    return {SweepSpec{{"k"}, {0.8 * k}, {1.2 * k}, 21}};
}

std::vector<int> default_grid(const std::string& problem) {
    if (problem == "adv_diff") return {201};
    if (problem == "poisson9") return {65, 65};
    if (problem == "twophase1d") return {101, 51};
    return {41, 41, 6};
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) {
    const double d = ref.norm();
    return d > 0.0 ? (a - ref).norm() / d : (a - ref).norm();
}

// Input columns for every node of a space-time tensor grid (first axis slowest)
// with parameter inputs at `params` (ParamVector order).
Eigen::MatrixXd grid_inputs(const ProblemSpec& p, const std::vector<std::vector<double>>& axes,
                            const std::vector<double>& params) {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    Eigen::MatrixXd pts(p.input_dim(), static_cast<Eigen::Index>(n));
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t rest = col;
        for (std::size_t d = axes.size(); d-- > 0;) {
            idx[d] = rest % axes[d].size();
            rest /= axes[d].size();
        }
        for (std::size_t d = 0; d < axes.size(); ++d) pts(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(col)) = axes[d][idx[d]];
        for (int q : p.params.inputs()) pts(p.param_slot(q), static_cast<Eigen::Index>(col)) = params[static_cast<std::size_t>(q)];
    }
    return pts;
}

std::vector<double> nominals(const ProblemSpec& p) {
    std::vector<double> v;
    for (const auto& q : p.params.entries) v.push_back(q.nominal);
    return v;
}

// Wrapped outputs (row 0 of the result list) and first derivatives along
// `slots`, each `outputs x n`.
std::vector<Eigen::MatrixXd> field_jets(const Network& net, const Eigen::MatrixXd& pts, const std::vector<int>& slots) {
    std::vector<Partial> terms;
    for (int s : slots) terms.push_back(Partial{s});
    const JetPlan plan(net.spec().input_dim(), terms);
    std::vector<int> comp;
    for (const auto& t : terms) comp.push_back(*plan.find(t));
    const int outs = net.spec().output_dim;
    std::vector<Eigen::MatrixXd> res(slots.size() + 1, Eigen::MatrixXd(outs, pts.cols()));
    constexpr Eigen::Index chunk = 2048;
    for (Eigen::Index start = 0; start < pts.cols(); start += chunk) {
        const Eigen::Index m = std::min(chunk, pts.cols() - start);
        JetSession session(net);
        const JetBatch& b = session.evaluate(plan, pts.middleCols(start, m));
        for (int o = 0; o < outs; ++o) {
            for (Eigen::Index i = 0; i < m; ++i) {
                res[0](o, start + i) = b.value(o, 0, static_cast<int>(i));
                for (std::size_t s = 0; s < slots.size(); ++s) res[s + 1](o, start + i) = b.value(o, comp[s], static_cast<int>(i));
            }
        }
    }
    return res;
}

GridField make_field(const std::vector<std::string>& names, const std::vector<std::vector<double>>& axes,
                     Eigen::VectorXd values) {
    GridField g;
    g.axis_names = names;
    g.axes = axes;
    g.values = std::move(values);
    return g;
}

std::vector<std::string> axis_names(const ProblemSpec& p) {
    std::vector<std::string> n = p.space_names;
    if (p.time_dependent) n.push_back("t");
    return n;
}

class BundleWriter {
public:
    BundleWriter(const std::filesystem::path* dir, std::vector<std::string>* files) : dir_(dir), files_(files) {}

    bool active() const { return dir_ != nullptr; }

    template <class F>
    void write(const std::string& rel, F&& body) {
        if (!dir_) return;
        const std::filesystem::path path = *dir_ / rel;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        body(out);
        if (files_) files_->push_back(rel);
    }

    void field(const std::string& rel, const GridField& g) {
        write(rel, [&](std::ostream& o) { g.write_csv(o); });
    }

private:
    const std::filesystem::path* dir_;
    std::vector<std::string>* files_;
};

// Front of the c output along x at time t, parameter input k (1D two-phase).
double front_1d(const Network& net, double t, double k, const std::vector<double>& xs, bool taylor, double k_nom) {
    Eigen::MatrixXd pts(3, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        pts(0, static_cast<Eigen::Index>(i)) = xs[i];
        pts(1, static_cast<Eigen::Index>(i)) = t;
        pts(2, static_cast<Eigen::Index>(i)) = taylor ? k_nom : k;
    }
    std::vector<double> c(xs.size());
    if (taylor) {
        const auto j = field_jets(net, pts, {2});
        for (std::size_t i = 0; i < xs.size(); ++i) c[i] = j[0](1, static_cast<Eigen::Index>(i)) + (k - k_nom) * j[1](1, static_cast<Eigen::Index>(i));
    } else {
        const auto j = field_jets(net, pts, {});
        for (std::size_t i = 0; i < xs.size(); ++i) c[i] = j[0](1, static_cast<Eigen::Index>(i));
    }
    return level_crossing(xs, c);
}

json evaluate_adv_diff(const ExperimentConfig& cfg, const ProblemSpec& p, const Network& net, BundleWriter& w) {
    const int eps_i = p.params.index("eps");
    const double eps = p.params[eps_i].nominal;
    const auto xs = linspace(0.0, 1.0, cfg.evaluation.grid.at(0));
    const auto jets = field_jets(net, grid_inputs(p, {xs}, nominals(p)), {p.param_slot(eps_i)});
    Eigen::VectorXd u_ex(static_cast<Eigen::Index>(xs.size())), du_ex(u_ex.size());
    for (std::size_t i = 0; i < xs.size(); ++i) std::tie(u_ex[static_cast<Eigen::Index>(i)], du_ex[static_cast<Eigen::Index>(i)]) = adv_diff_exact(xs[i], eps);
    w.field("fields/exact_u.csv", make_field({"x"}, {xs}, u_ex));
    w.field("fields/exact_du_deps.csv", make_field({"x"}, {xs}, du_ex));
    return {{"grid_points", xs.size()},
            {"u_rel_l2", rel_l2(jets[0].row(0).transpose(), u_ex)},
            {"du_deps_rel_l2", rel_l2(jets[1].row(0).transpose(), du_ex)}};
}

json evaluate_poisson9(const ExperimentConfig& cfg, const ProblemSpec& p, const Network& net, BundleWriter& w) {
    const int n = cfg.evaluation.oracle_grid;
    const auto scheme = cfg.evaluation.interface_scheme;
    const std::vector<double> k = [&] {
        std::vector<double> v;
        for (int i = 0; i < 9; ++i) v.push_back(p.params[p.params.index("k" + std::to_string(i + 1))].nominal);
        return v;
    }();
    const GridField u_fd = poisson9_fd_solve(k, n, scheme);
    std::vector<int> slots;
    for (int i = 0; i < 9; ++i) slots.push_back(p.param_slot(p.params.index("k" + std::to_string(i + 1))));
    const auto jets = field_jets(net, grid_inputs(p, u_fd.axes, nominals(p)), slots);
    w.field("fields/oracle_u.csv", u_fd);
    json out;
    out["oracle_grid"] = n;
    out["interface_scheme"] = to_string(scheme);
    out["u_oracle_max"] = u_fd.values.cwiseAbs().maxCoeff();
    out["u_max_abs_error"] = (jets[0].row(0).transpose() - u_fd.values).cwiseAbs().maxCoeff();
    const ParamSolver solver = [n, scheme](std::span<const double> kk) { return poisson9_fd_solve(kk, n, scheme); };
    json sens = json::array();
    for (int i = 0; i < 9; ++i) {
        const std::string name = "k" + std::to_string(i + 1);
        const SensitivityEstimate s = fd_param_sensitivity(solver, k, i, name, 0.01 * std::abs(k[static_cast<std::size_t>(i)]));
        w.field("fields/oracle_du_d" + name + ".csv", s.field);
        const int pi = p.params.index(name);
        sens.push_back({{"param", name},
                        {"sensitive", p.params[pi].sensitive},
                        {"h", s.h},
                        {"rel_l2", rel_l2(jets[static_cast<std::size_t>(i) + 1].row(0).transpose(), s.field.values)}});
    }
    out["du_dk"] = sens;
    return out;
}

json evaluate_twophase1d(const ExperimentConfig& cfg, const ProblemSpec& p, const Network& net, BundleWriter& w) {
    const TwoPhase1dOptions o = twophase1d_options(cfg.problem_options);
    const double T = o.horizon, k_nom = o.k;
    const auto xs = linspace(0.0, o.length, 1001);

    json fronts = json::array();
    for (double k : {0.5, 1.0, 1.5}) {
        const double t_end = std::min(T, 0.5 / k);
        json one{{"k", k}, {"t_end", t_end}};
        for (bool taylor : {false, true}) {
            double se = 0.0;
            int m = 0;
            for (int i = 0;; ++i) {
                const double t = 0.05 + 0.025 * i;
                if (t > t_end + 1e-12) break;
                const double xf = front_1d(net, t, k, xs, taylor, k_nom);
                se += std::pow(xf - twophase1d_front(t, k, 0.5, o).x_f, 2);
                ++m;
            }
            one[taylor ? "rms_taylor" : "rms"] = m ? std::sqrt(se / m) : 0.0;
        }
        fronts.push_back(one);
    }

    json fill = json::array();
    double worst = 0.0;
    const auto ts = linspace(0.0, T, 201);
    for (double k : linspace(0.7, 1.3, 13)) {
        double t_fill = T;
        double prev_t = 0.0, prev_x = 0.0;
        for (double t : ts) {
            const double xf = front_1d(net, t, k, xs, false, k_nom);
            if (xf >= 0.5) {
                t_fill = t == 0.0 ? 0.0 : prev_t + (t - prev_t) * (0.5 - prev_x) / (xf - prev_x);
                break;
            }
            prev_t = t;
            prev_x = xf;
        }
        const double exact = twophase1d_front(0.0, k, 0.5, o).t_fill;
        const double err = std::abs(t_fill - exact) / exact;
        worst = std::max(worst, err);
        fill.push_back({{"k", k}, {"t_fill", t_fill}, {"exact", exact}, {"rel_error", err}});
    }

    // Field-level check against the finite-volume reference at nominal k.
    TwoPhaseGrid g;
    g.nx = cfg.evaluation.fd_cells;
    g.times = cfg.evaluation.times.empty() ? linspace(0.0, T, cfg.evaluation.grid.at(1)) : cfg.evaluation.times;
    const TwoPhaseFields fd = twophase1d_fd_solve(o, g);
    w.field("fields/oracle_c.csv", fd.c);
    w.field("fields/oracle_p.csv", fd.p);
    const auto jets = field_jets(net, grid_inputs(p, fd.c.axes, nominals(p)), {});
    return {{"front", fronts},
            {"fill_time", fill},
            {"fill_time_max_rel_error", worst},
            {"c_mean_abs_error_vs_fd", (jets[0].row(1).transpose() - fd.c.values).cwiseAbs().mean()},
            {"p_mean_abs_error_vs_fd", (jets[0].row(0).transpose() - fd.p.values).cwiseAbs().mean()}};
}

json evaluate_twophase2d(const ExperimentConfig& cfg, const ProblemSpec& p, const Network& net) {
    const TwoPhase2dOptions o = twophase2d_options(cfg.problem_options);
    const int k_i = p.params.index("k");
    const double k_nom = o.k;
    json inlet = json::array();
    bool decreasing = true;
    double prev = std::numeric_limits<double>::infinity();
    const auto ys = linspace(0.0, o.inlet_height, 26);
    const auto ts = linspace(0.05, o.horizon, 10);
    for (double f : {0.8, 1.0, 1.2}) {
        std::vector<double> params = nominals(p);
        params[static_cast<std::size_t>(k_i)] = f * k_nom;
        const auto jets = field_jets(net, grid_inputs(p, {{0.0}, ys, ts}, params), {});
        const double mean = jets[0].row(0).mean();
        decreasing = decreasing && mean < prev;
        prev = mean;
        inlet.push_back({{"k", f * k_nom}, {"mean_inlet_pressure", mean}});
    }

    const auto xs = linspace(0.0, 1.0, 501);
    const double y_strip = 0.5 * o.strip_height, y_bulk = 0.5 * (o.strip_height + o.inlet_height);
    json fronts = json::array();
    bool leads = true;
    for (double t : {0.1, 0.2, 0.3, 0.4}) {
        if (t > o.horizon) break;
        double xf[2];
        for (int which = 0; which < 2; ++which) {
            const auto jets = field_jets(net, grid_inputs(p, {xs, {which == 0 ? y_strip : y_bulk}, {t}}, nominals(p)), {});
            std::vector<double> c(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) c[i] = jets[0](1, static_cast<Eigen::Index>(i));
            xf[which] = level_crossing(xs, c);
        }
        leads = leads && xf[0] > xf[1];
        fronts.push_back({{"t", t}, {"strip_front", xf[0]}, {"bulk_front", xf[1]}});
    }
    return {{"inlet_pressure", inlet},
            {"inlet_pressure_decreasing", decreasing},
            {"fronts", fronts},
            {"strip_front_leads", leads},
            {"y_strip", y_strip},
            {"y_bulk", y_bulk}};
}

}  // namespace

std::string SweepSpec::file_name() const {
    std::string n = "sweep";
    for (const auto& p : params) n += "_" + p;
    return n + ".csv";
}

ExperimentConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        schema_fail(std::string("not valid JSON: ") + e.what());
    }
    ObjectReader top(j, "config");
    int schema = -1;
    top.get("schema", schema);
    if (schema != kConfigSchema) schema_fail("schema must be " + std::to_string(kConfigSchema));

    ExperimentConfig c;
    top.get("problem", c.problem);
    if (std::find(problem_names().begin(), problem_names().end(), c.problem) == problem_names().end()) {
        schema_fail("unknown problem '" + c.problem + "'");
    }
    if (const json* po = top.sub("problem_options")) c.problem_options = *po;
    c.problem_options = resolved_problem_options(c.problem, c.problem_options);

    std::string mode = std::string(to_string(c.mode));
    top.get("mode", mode);
    c.mode = translate("mode", [&] { return training_mode_from_string(mode); });

    if (const json* n = top.sub("network")) {
        ObjectReader r(*n, "network");
        r.get("hidden_layers", c.hidden_layers);
        r.get("hidden_width", c.hidden_width);
        r.get("activation", c.activation);
        r.get("init_seed", c.init_seed);
        r.finish();
    }

    c.optimizer.adam.iterations = c.problem == "adv_diff" ? 1000 : 5000;
    if (const json* o = top.sub("optimizer")) {
        ObjectReader r(*o, "optimizer");
        if (const json* a = r.sub("adam")) {
            ObjectReader ra(*a, "optimizer.adam");
            ra.get("lr", c.optimizer.adam.lr);
            ra.get("beta1", c.optimizer.adam.beta1);
            ra.get("beta2", c.optimizer.adam.beta2);
            ra.get("eps", c.optimizer.adam.eps);
            ra.get("iterations", c.optimizer.adam.iterations);
            ra.finish();
        }
        if (const json* q = r.sub("quasi_newton")) {
            ObjectReader rq(*q, "optimizer.quasi_newton");
            auto& qn = c.optimizer.quasi_newton;
            rq.get("full", qn.full);
            rq.get("memory", qn.memory);
            rq.get("max_iterations", qn.max_iterations);
            rq.get("gradient_tolerance", qn.gradient_tolerance);
            rq.get("c1", qn.c1);
            rq.get("c2", qn.c2);
            rq.get("max_step_halvings", qn.max_step_halvings);
            rq.finish();
        }
        r.finish();
    }
    // max_iterations = 0 skips the quasi-Newton phase.
    if (c.optimizer.quasi_newton.max_iterations == 0) {
        c.optimizer.adam.validate();
    } else {
        translate("optimizer", [&] { c.optimizer.validate(); });
    }
    translate("optimizer.adam", [&] { c.optimizer.adam.validate(); });

    if (const json* wj = top.sub("weights")) {
        ObjectReader r(*wj, "weights");
        if (const json* m = r.sub("main")) c.weights.main = kind_weights(*m, "weights.main", c.weights.main);
        if (const json* s = r.sub("sa")) c.weights.sa = kind_weights(*s, "weights.sa", c.weights.sa);
        if (const json* ov = r.sub("sa_overrides")) {
            if (!ov->is_object()) schema_fail("weights.sa_overrides must be an object");
            for (const auto& [name, v] : ov->items()) c.weights.sa_overrides[name] = kind_weights(v, "weights.sa_overrides." + name, {});
        }
        r.finish();
    }
    translate("weights", [&] { c.weights.validate(); });

    if (const json* s = top.sub("sampling")) {
        ObjectReader r(*s, "sampling");
        std::string strategy;
        r.get("strategy", strategy);
        if (!strategy.empty()) c.sampling.strategy = translate("sampling.strategy", [&] { return sampling_strategy_from_string(strategy); });
        if (const json* counts = r.sub("counts")) {
            if (!counts->is_object()) schema_fail("sampling.counts must be an object");
            for (const auto& [k, v] : counts->items()) {
                if (!v.is_number_integer() || v.get<int>() < 0) schema_fail("sampling.counts." + k + " must be a non-negative integer");
                c.sampling.counts.counts[k] = v.get<int>();
            }
        }
        r.get("seed", c.sampling.seed);
        r.get("parametric_factor", c.sampling.parametric_factor);
        r.get("parametric_min_count", c.sampling.parametric_min_count);
        if (const json* a = r.sub("adaptive")) {
            ObjectReader ra(*a, "sampling.adaptive");
            ra.get("interval", c.sampling.adaptive.interval);
            ra.get("add", c.sampling.adaptive.add);
            ra.get("target", c.sampling.adaptive.target);
            ra.get("pool_factor", c.sampling.adaptive.pool_factor);
            ra.finish();
        }
        r.finish();
    }
    const auto& ad = c.sampling.adaptive;
    if (ad.interval < 1 || ad.add < 1 || ad.target < 1 || ad.pool_factor < 1) schema_fail("sampling.adaptive values must be positive");
    if (c.sampling.parametric_factor < 1 || c.sampling.parametric_min_count < 0) schema_fail("sampling.parametric_* out of range");

    c.evaluation.grid = default_grid(c.problem);
    c.evaluation.sweeps = default_sweeps(c.problem, c.problem_options);
    if (const json* e = top.sub("evaluation")) {
        ObjectReader r(*e, "evaluation");
        r.get("grid", c.evaluation.grid);
        r.get("times", c.evaluation.times);
        r.get("oracle_grid", c.evaluation.oracle_grid);
        std::string scheme = to_string(c.evaluation.interface_scheme);
        r.get("interface_scheme", scheme);
        c.evaluation.interface_scheme = interface_scheme_from_string(scheme);
        r.get("fd_cells", c.evaluation.fd_cells);
        if (const json* sw = r.sub("sweeps")) {
            if (!sw->is_array()) schema_fail("evaluation.sweeps must be an array");
            c.evaluation.sweeps.clear();
            for (const auto& item : *sw) {
                SweepSpec s;
                ObjectReader rs(item, "evaluation.sweeps[]");
                rs.get("params", s.params);
                rs.get("lo", s.lo);
                rs.get("hi", s.hi);
                rs.get("points", s.points);
                rs.finish();
                c.evaluation.sweeps.push_back(std::move(s));
            }
        }
        r.finish();
    }

    if (const json* t = top.sub("timing")) {
        ObjectReader r(*t, "timing");
        r.get("sensitivity_counts", c.timing.sensitivity_counts);
        r.get("iterations", c.timing.iterations);
        r.finish();
    }
    top.get("output_dir", c.output_dir);
    top.finish();

    // Cross-checks that need the problem.
    const ProblemSpec p = translate("problem_options", [&] { return build_problem(c); });
    translate("problem_options", [&] { p.params.validate(c.mode == TrainingMode::sa); });
    if (c.hidden_layers < 1 || c.hidden_width < 1) schema_fail("network sizes must be positive");
    translate("network", [&] { build_network_spec(c, p).validate(); });
    if (static_cast<int>(c.evaluation.grid.size()) != p.space_time_dim()) {
        schema_fail("evaluation.grid needs one count per space-time axis");
    }
    for (int g : c.evaluation.grid) {
        if (g < 2) schema_fail("evaluation.grid counts must be >= 2");
    }
    if (c.evaluation.oracle_grid < 31 || c.evaluation.oracle_grid % 2 == 0) schema_fail("evaluation.oracle_grid must be odd and >= 31");
    if (c.evaluation.fd_cells < 2) schema_fail("evaluation.fd_cells must be >= 2");
    for (const auto& s : c.evaluation.sweeps) {
        if (s.params.empty() || s.params.size() > 2 || s.lo.size() != s.params.size() || s.hi.size() != s.params.size()) {
            schema_fail("a sweep names one or two parameters with matching lo/hi");
        }
        if (s.points < 2) schema_fail("sweep points must be >= 2");
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            const int q = translate("sweep", [&] { return p.params.index(s.params[i]); });
            if (!p.params[q].input) schema_fail("sweep parameter '" + s.params[i] + "' is not a network input");
            const double nom = p.params[q].nominal;
            if (!(s.lo[i] <= nom && nom <= s.hi[i])) schema_fail("sweep range of '" + s.params[i] + "' must contain its nominal");
        }
    }
    if (c.timing.iterations < 1) schema_fail("timing.iterations must be positive");
    for (int m : c.timing.sensitivity_counts) {
        if (m < 1 || m > 9) schema_fail("timing.sensitivity_counts entries must lie in [1, 9]");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("config: cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["schema"] = kConfigSchema;
    j["problem"] = c.problem;
    j["problem_options"] = c.problem_options;
    j["mode"] = std::string(to_string(c.mode));
    j["network"] = {{"hidden_layers", c.hidden_layers},
                    {"hidden_width", c.hidden_width},
                    {"activation", c.activation},
                    {"init_seed", c.init_seed}};
    const auto& a = c.optimizer.adam;
    const auto& q = c.optimizer.quasi_newton;
    j["optimizer"] = {{"adam", {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"iterations", a.iterations}}},
                      {"quasi_newton",
                       {{"full", q.full},
                        {"memory", q.memory},
                        {"max_iterations", q.max_iterations},
                        {"gradient_tolerance", q.gradient_tolerance},
                        {"c1", q.c1},
                        {"c2", q.c2},
                        {"max_step_halvings", q.max_step_halvings}}}};
    json ov = json::object();
    for (const auto& [name, m] : c.weights.sa_overrides) ov[name] = kind_weights_json(m);
    j["weights"] = {{"main", kind_weights_json(c.weights.main)}, {"sa", kind_weights_json(c.weights.sa)}, {"sa_overrides", ov}};
    json counts = json::object();
    for (const auto& [k, v] : c.sampling.counts.counts) counts[k] = v;
    j["sampling"] = {{"strategy", c.sampling.strategy ? json(std::string(to_string(*c.sampling.strategy))) : json("")},
                     {"counts", counts},
                     {"seed", c.sampling.seed},
                     {"parametric_factor", c.sampling.parametric_factor},
                     {"parametric_min_count", c.sampling.parametric_min_count},
                     {"adaptive",
                      {{"interval", c.sampling.adaptive.interval},
                       {"add", c.sampling.adaptive.add},
                       {"target", c.sampling.adaptive.target},
                       {"pool_factor", c.sampling.adaptive.pool_factor}}}};
    json sweeps = json::array();
    for (const auto& s : c.evaluation.sweeps) sweeps.push_back({{"params", s.params}, {"lo", s.lo}, {"hi", s.hi}, {"points", s.points}});
    j["evaluation"] = {{"grid", c.evaluation.grid},
                       {"times", c.evaluation.times},
                       {"sweeps", sweeps},
                       {"oracle_grid", c.evaluation.oracle_grid},
                       {"interface_scheme", to_string(c.evaluation.interface_scheme)},
                       {"fd_cells", c.evaluation.fd_cells}};
    j["timing"] = {{"sensitivity_counts", c.timing.sensitivity_counts}, {"iterations", c.timing.iterations}};
    j["output_dir"] = c.output_dir;
    return j;
}

std::string config_hash(const ExperimentConfig& config) {
    json j = to_json(config);
    j.erase("output_dir");
    return hex64(fnv1a(j.dump()));
}

ProblemSpec build_problem(const ExperimentConfig& c) {
    if (c.problem == "adv_diff") return make_adv_diff(adv_diff_options(c.problem_options));
    if (c.problem == "poisson9") return make_poisson9(poisson9_options(c.problem_options));
    if (c.problem == "twophase1d") return make_twophase1d(twophase1d_options(c.problem_options));
    if (c.problem == "twophase2d") return make_twophase2d(twophase2d_options(c.problem_options));
    throw SchemaError("config: unknown problem '" + c.problem + "'");
}

NetworkSpec build_network_spec(const ExperimentConfig& c, const ProblemSpec& p) {
    NetworkSpec s = p.network_spec(c.hidden_layers, c.hidden_width, c.init_seed);
    s.activation = c.activation;
    return s;
}

CollocationSet build_points(const ExperimentConfig& c, const ProblemSpec& p) {
    const bool parametric = c.mode == TrainingMode::parametric;
    SampleCounts counts = c.sampling.counts;
    if (parametric) {
        SampleCounts scaled;
        for (const auto& cond : p.conditions) {
            const int base = counts.count_for(cond);
            if (cond.kind == ConditionKind::hard || base == 0) {
                scaled.counts[cond.name] = 0;
            } else {
                scaled.counts[cond.name] = std::max(base * c.sampling.parametric_factor, c.sampling.parametric_min_count);
            }
        }
        counts = scaled;
    }
    SamplingStrategy strategy = c.sampling.strategy.value_or(p.default_strategy);
    // Adaptive sampling starts from Latin hypercube points and grows during training.
    if (strategy == SamplingStrategy::adaptive_residual) strategy = SamplingStrategy::latin_hypercube;
    return sample(p, strategy, counts, c.sampling.seed, parametric);
}

std::filesystem::path output_root() {
    if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
    return std::filesystem::current_path() / "results";
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
    if (!c.output_dir.empty()) {
        const std::filesystem::path p(c.output_dir);
        return p.is_absolute() ? p : output_root() / p;
    }
    return output_root() / (c.problem + "_" + std::string(to_string(c.mode)) + "_" + config_hash(c));
}

void SweepTable::write_csv(std::ostream& out) const {
    for (const auto& p : params) out << p << ',';
    out << "loss_f\n";
    const auto old = out.precision(17);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }
    out.precision(old);
}

std::size_t SweepTable::argmin() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].back() < rows[best].back()) best = i;
    }
    return best;
}

SweepTable sweep_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                      const SweepSpec& sweep) {
    if (sweep.params.empty() || sweep.params.size() > 2) throw std::invalid_argument("sweep_loss: one or two parameters");
    std::vector<int> slots;
    for (const auto& name : sweep.params) slots.push_back(problem.param_slot(problem.params.index(name)));
    CollocationSet interior;
    for (const auto& b : points.blocks) {
        if (problem.conditions[static_cast<std::size_t>(b.condition)].kind == ConditionKind::interior) interior.blocks.push_back(b);
    }
    LossWeights weights;
    LossFunction loss(problem, interior, weights, LossParts{true, false}, {});
    std::vector<std::vector<double>> axes;
    for (std::size_t i = 0; i < sweep.params.size(); ++i) axes.push_back(linspace(sweep.lo[i], sweep.hi[i], sweep.points));

    SweepTable table;
    table.params = sweep.params;
    const std::size_t n0 = axes[0].size(), n1 = axes.size() > 1 ? axes[1].size() : 1;
    for (std::size_t i = 0; i < n0; ++i) {
        for (std::size_t j = 0; j < n1; ++j) {
            CollocationSet moved = interior;
            std::vector<double> row{axes[0][i]};
            if (axes.size() > 1) row.push_back(axes[1][j]);
            for (auto& b : moved.blocks) {
                for (std::size_t s = 0; s < slots.size(); ++s) b.points.row(slots[s]).setConstant(row[s]);
            }
            loss.set_points(std::move(moved));
            row.push_back(loss.evaluate(network).term(ConditionKind::interior));
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

json evaluate_network(const ExperimentConfig& config, const ProblemSpec& problem, const Network& network,
                      const CollocationSet& points, const std::filesystem::path* directory,
                      std::vector<std::string>* files) {
    BundleWriter w(directory, files);
    json m;

    // Outputs and their parameter derivatives on the evaluation grid.
    std::vector<std::vector<double>> axes;
    for (int d = 0; d < problem.space_time_dim(); ++d) {
        axes.push_back(linspace(problem.domain.lo[static_cast<std::size_t>(d)], problem.domain.hi[static_cast<std::size_t>(d)],
                                config.evaluation.grid[static_cast<std::size_t>(d)]));
    }
    if (problem.time_dependent && !config.evaluation.times.empty()) axes.back() = config.evaluation.times;
    std::vector<int> slots;
    std::vector<std::string> pnames;
    for (int q : problem.params.inputs()) {
        slots.push_back(problem.param_slot(q));
        pnames.push_back(problem.params[q].name);
    }
    if (w.active()) {
        const auto jets = field_jets(network, grid_inputs(problem, axes, nominals(problem)), slots);
        const auto names = axis_names(problem);
        for (int o = 0; o < problem.output_dim; ++o) {
            const std::string& out = problem.output_names[static_cast<std::size_t>(o)];
            w.field("fields/" + out + ".csv", make_field(names, axes, jets[0].row(o).transpose()));
            for (std::size_t s = 0; s < slots.size(); ++s) {
                w.field("fields/d" + out + "_d" + pnames[s] + ".csv", make_field(names, axes, jets[s + 1].row(o).transpose()));
            }
        }
    }

    if (config.problem == "adv_diff") m["errors"] = evaluate_adv_diff(config, problem, network, w);
    if (config.problem == "poisson9") m["errors"] = evaluate_poisson9(config, problem, network, w);
    if (config.problem == "twophase1d") m["errors"] = evaluate_twophase1d(config, problem, network, w);
    if (config.problem == "twophase2d") m["errors"] = evaluate_twophase2d(config, problem, network);

    json sweeps = json::array();
    for (const auto& s : config.evaluation.sweeps) {
        const SweepTable t = sweep_loss(network, problem, points, s);
        w.write(s.file_name(), [&](std::ostream& o) { t.write_csv(o); });
        double sum = 0.0;
        for (const auto& r : t.rows) sum += r.back();
        const std::size_t best = t.argmin();
        json argmin = json::array(), nominal_index = json::array(), argmin_index = json::array();
        for (std::size_t i = 0; i < s.params.size(); ++i) {
            argmin.push_back(t.rows[best][i]);
            const double nom = problem.params[problem.params.index(s.params[i])].nominal;
            nominal_index.push_back(static_cast<int>(std::lround((nom - s.lo[i]) / (s.hi[i] - s.lo[i]) * (s.points - 1))));
        }
        if (s.params.size() == 1) {
            argmin_index.push_back(best);
        } else {
            argmin_index.push_back(best / static_cast<std::size_t>(s.points));
            argmin_index.push_back(best % static_cast<std::size_t>(s.points));
        }
        sweeps.push_back({{"file", s.file_name()},
                          {"params", s.params},
                          {"rows", t.rows.size()},
                          {"mean_loss_f", sum / static_cast<double>(t.rows.size())},
                          {"min_loss_f", t.rows[best].back()},
                          {"argmin", argmin},
                          {"argmin_index", argmin_index},
                          {"nominal_index", nominal_index}});
    }
    m["sweeps"] = sweeps;
    return m;
}

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    const auto t_start = Clock::now();
    const ProblemSpec problem = build_problem(config);
    const std::string hash = config_hash(config);
    const auto log = [&](const std::string& s) {
        if (options.log) *options.log << s << std::endl;
    };

    Network net = Network::init(build_network_spec(config, problem));
    if (!problem.wrapper.empty()) net.set_wrapper(make_wrapper(problem.wrapper));
    CollocationSet points = build_points(config, problem);
    LossFunction loss(problem, points, config.weights, config.mode);

    const bool adaptive = config.sampling.strategy.value_or(problem.default_strategy) == SamplingStrategy::adaptive_residual;
    int round = 0;
    const AdaptiveConfig ad = config.sampling.adaptive;
    const TrainHook hook = [&](int it, const Network& n, LossFunction& l) {
        if (it % 500 == 0) log("adam " + std::to_string(it));
        if (!adaptive || it % ad.interval != 0) return false;
        CollocationSet pts = l.points();
        bool grew = false;
        for (auto& b : pts.blocks) {
            if (problem.conditions[static_cast<std::size_t>(b.condition)].kind != ConditionKind::interior) continue;
            if (b.points.cols() >= ad.target) continue;
            grew = true;
        }
        if (!grew) return false;
        // Refine only blocks below the target, then trim overshoot.
        CollocationSet before = pts;
        const int add = ad.add;
        refine_adaptive(problem, n, pts, add, ad.pool_factor, config.sampling.seed * 7919 + static_cast<std::uint64_t>(++round));
        for (std::size_t i = 0; i < pts.blocks.size(); ++i) {
            auto& b = pts.blocks[i];
            const Eigen::Index had = before.blocks[i].points.cols();
            if (had >= ad.target) b.points = before.blocks[i].points;
            else if (b.points.cols() > ad.target) b.points = Eigen::MatrixXd(b.points.leftCols(ad.target));
        }
        l.set_points(std::move(pts));
        log("adaptive round " + std::to_string(round) + ": " + std::to_string(l.points().count(problem, ConditionKind::interior)) +
            " interior points");
        return true;
    };

    RunResult res;
    res.directory = resolve_output_dir(config);
    const auto t_train = Clock::now();
    TrainResult adam = adam_run(net, loss, config.optimizer.adam, {}, hook);
    const double adam_seconds = seconds_since(t_train);
    log("adam done: loss " + std::to_string(adam.trace.records.empty() ? 0.0 : adam.trace.records.back().total));
    int qn_iterations = 0;
    double qn_seconds = 0.0;
    TrainResult final = adam;
    if (adam.status != OptimStatus::diverged && config.optimizer.quasi_newton.max_iterations > 0) {
        const auto t_qn = Clock::now();
        final = quasi_newton_run(adam.network, loss, config.optimizer.quasi_newton, adam.trace);
        qn_seconds = seconds_since(t_qn);
        qn_iterations = final.trace.last_iteration() - adam.trace.last_iteration();
        log("quasi-newton done: " + std::string(to_string(final.status)));
    }
    res.network = final.network;
    res.trace = final.trace;
    res.status = final.status;

    json m;
    m["config_hash"] = hash;
    m["problem"] = config.problem;
    m["mode"] = std::string(to_string(config.mode));
    m["status"] = std::string(to_string(res.status));
    json flags = json::array();
    if (config.mode == TrainingMode::vanilla) flags.push_back("untrained-sensitivity");
    if (res.status == OptimStatus::diverged) flags.push_back("diverged");
    m["flags"] = flags;
    m["iterations"] = {{"adam", adam.trace.last_iteration()}, {"quasi_newton", qn_iterations}};
    m["collocation_points"] = loss.points().total();
    if (!res.trace.records.empty()) {
        const auto& last = res.trace.records.back();
        json terms = json::object();
        for (std::size_t i = 0; i < res.trace.term_names.size() && i < last.terms.size(); ++i) terms[res.trace.term_names[i]] = last.terms[i];
        m["final_loss"] = {{"total", last.total}, {"terms", terms}};
    }

    std::filesystem::path dir = res.directory;
    if (options.write_outputs) {
        std::filesystem::create_directories(dir);
        BundleWriter w(&dir, &res.files);
        w.write("config.json", [&](std::ostream& o) { o << to_json(config).dump(2) << '\n'; });
        w.write("checkpoint.json", [&](std::ostream& o) { o << res.network.save() << '\n'; });
        w.write("trace.csv", [&](std::ostream& o) { res.trace.write_csv(o); });
    }
    const auto t_eval = Clock::now();
    if (res.healthy()) {
        json ev = evaluate_network(config, problem, res.network, loss.points(), options.write_outputs ? &dir : nullptr,
                                   options.write_outputs ? &res.files : nullptr);
        for (auto& [k, v] : ev.items()) m[k] = v;
    }
    m["timings"] = {{"adam_seconds", adam_seconds},
                    {"quasi_newton_seconds", qn_seconds},
                    {"training_seconds", adam_seconds + qn_seconds},
                    {"evaluation_seconds", seconds_since(t_eval)},
                    {"total_seconds", seconds_since(t_start)}};
    if (options.write_outputs) {
        res.files.push_back("metrics.json");
        m["files"] = res.files;
        std::ofstream(dir / "metrics.json") << m.dump(2) << '\n';
    }
    res.metrics = std::move(m);
    return res;
}

std::vector<TimingRow> timing_study(const ExperimentConfig& config) {
    std::vector<TimingRow> rows;
    for (int m : config.timing.sensitivity_counts) {
        ExperimentConfig c = config;
        c.problem = "poisson9";
        c.mode = TrainingMode::sa;
        json opts = resolved_problem_options("poisson9", c.problem == config.problem ? config.problem_options : json::object());
        opts["sensitive_count"] = m;
        c.problem_options = opts;
        const ProblemSpec p = build_problem(c);
        Network net = Network::init(build_network_spec(c, p));
        if (!p.wrapper.empty()) net.set_wrapper(make_wrapper(p.wrapper));
        LossFunction loss(p, build_points(c, p), c.weights, c.mode);
        AdamConfig a = c.optimizer.adam;
        a.iterations = c.timing.iterations;
        const TrainResult r = adam_run(net, loss, a);
        std::vector<double> dt;
        double prev = 0.0;
        for (const auto& rec : r.trace.records) {
            if (rec.iteration == 0) {
                prev = rec.wall_time;
                continue;
            }
            dt.push_back(rec.wall_time - prev);
            prev = rec.wall_time;
        }
        std::sort(dt.begin(), dt.end());
        TimingRow row;
        row.sensitivity_count = m;
        row.iterations = static_cast<int>(dt.size());
        row.seconds_per_iteration = dt.empty() ? 0.0 : dt[dt.size() / 2];
        rows.push_back(row);
    }
    return rows;
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
    out << "m,iterations,seconds_per_iteration\n";
    const auto old = out.precision(17);
    for (const auto& r : rows) out << r.sensitivity_count << ',' << r.iterations << ',' << r.seconds_per_iteration << '\n';
    out.precision(old);
}

}  // namespace sapinn
