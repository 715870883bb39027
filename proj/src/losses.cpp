#include "sapinn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sapinn {

namespace {

constexpr ConditionKind kClasses[] = {ConditionKind::interior, ConditionKind::initial, ConditionKind::dirichlet,
                                      ConditionKind::neumann};

int class_index(ConditionKind kind) {
    switch (kind) {
    case ConditionKind::interior:
        return 0;
    case ConditionKind::initial:
        return 1;
    case ConditionKind::dirichlet:
        return 2;
    case ConditionKind::neumann:
        return 3;
    case ConditionKind::hard:
        break;
    }
    throw std::invalid_argument("hard-enforced conditions have no loss term");
}

}  // namespace

std::string_view to_string(TrainingMode mode) {
    switch (mode) {
    case TrainingMode::vanilla:
        return "vanilla";
    case TrainingMode::sa:
        return "sa";
    case TrainingMode::parametric:
        return "parametric";
    }
    return "vanilla";
}

TrainingMode training_mode_from_string(std::string_view name) {
    for (auto m : {TrainingMode::vanilla, TrainingMode::sa, TrainingMode::parametric}) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument("unknown training mode: " + std::string(name));
}

std::string_view term_class(ConditionKind kind) {
    switch (kind) {
    case ConditionKind::interior:
        return "f";
    case ConditionKind::initial:
        return "0";
    case ConditionKind::dirichlet:
        return "D";
    case ConditionKind::neumann:
        return "N";
    case ConditionKind::hard:
        break;
    }
    throw std::invalid_argument("hard-enforced conditions have no loss term");
}

double LossWeights::main_weight(ConditionKind kind) const {
    auto it = main.find(kind);
    return it == main.end() ? 0.0 : it->second;
}

double LossWeights::sa_weight(ConditionKind kind, std::string_view param) const {
    if (auto o = sa_overrides.find(std::string(param)); o != sa_overrides.end()) {
        if (auto it = o->second.find(kind); it != o->second.end()) return it->second;
    }
    auto it = sa.find(kind);
    return it == sa.end() ? 0.0 : it->second;
}

LossWeights LossWeights::with_sa(double value) const {
    LossWeights w = *this;
    for (auto& [k, v] : w.sa) v = value;
    for (auto& [name, m] : w.sa_overrides) {
        for (auto& [k, v] : m) v = value;
    }
    return w;
}

void LossWeights::validate() const {
    const auto check = [](const std::map<ConditionKind, double>& m) {
        for (const auto& [k, v] : m) {
            if (!(v >= 0.0)) throw std::invalid_argument("loss weights must be non-negative");
        }
    };
    check(main);
    check(sa);
    for (const auto& [name, m] : sa_overrides) check(m);
}

std::string LossTerm::name() const {
    std::string n = "loss_" + std::string(term_class(kind));
    if (!param.empty()) n += "_" + param;
    return n;
}

const LossTerm* LossBreakdown::find(ConditionKind kind, std::string_view param) const {
    for (const auto& t : terms) {
        if (t.kind == kind && t.param == param) return &t;
    }
    return nullptr;
}

double LossBreakdown::term(ConditionKind kind, std::string_view param) const {
    if (const LossTerm* t = find(kind, param)) return t->value;
    throw std::out_of_range("loss term not assembled: " + std::string(term_class(kind)) + " " + std::string(param));
}

struct LossFunction::BlockPlan {
    JetPlan plan;
    std::vector<int> value_comp;                // per use
    std::vector<std::vector<int>> tangent_comp;  // per direction, per use
};

namespace {

std::shared_ptr<LossFunction::BlockPlan> make_block_plan(const ProblemSpec& problem, const Condition& cond,
                                                         std::span<const int> dirs);

// Residuals of one point. `dir < 0` evaluates without a parameter direction.
// Jet-entry seeds: value of use j is index j, its tangent index U + j.
void eval_point(const ProblemSpec& problem, const Condition& cond, const LossFunction::BlockPlan& bp,
                const JetBatch& batch, const Eigen::MatrixXd& pts, int p, int dir, int dir_param,
                std::vector<SensReal>& vals, std::vector<SensReal>& params, std::span<SensReal> out) {
    const int U = static_cast<int>(cond.uses.size());
    const int seeds = dir >= 0 ? 2 * U : U;
    vals.resize(static_cast<std::size_t>(U));
    for (int j = 0; j < U; ++j) {
        const int o = cond.uses[static_cast<std::size_t>(j)].output;
        const GradReal v = GradReal::seed(batch.value(o, bp.value_comp[static_cast<std::size_t>(j)], p), j, seeds);
        GradReal t(0.0);
        if (dir >= 0) {
            const int comp = bp.tangent_comp[static_cast<std::size_t>(dir)][static_cast<std::size_t>(j)];
            t = GradReal::seed(batch.value(o, comp, p), U + j, seeds);
        }
        vals[static_cast<std::size_t>(j)] = SensReal(v, t);
    }
    const double* coords = pts.data() + static_cast<Eigen::Index>(p) * pts.rows();
    params.resize(static_cast<std::size_t>(problem.params.size()));
    int slot = problem.space_time_dim();
    for (int i = 0; i < problem.params.size(); ++i) {
        const Param& par = problem.params[i];
        const double v = par.input ? coords[slot++] : par.nominal;
        params[static_cast<std::size_t>(i)] = i == dir_param ? SensReal(GradReal(v), GradReal(1.0)) : SensReal(v);
    }
    const JetReader reader(cond.uses, vals);
    const ResidualInputs in{reader, params, std::span<const double>(coords, static_cast<std::size_t>(pts.rows()))};
    for (auto& r : out) r = SensReal(0.0);
    cond.residual(in, out);
}

// Seeds adjoints for d(scale * s^2)/d(jet entries) where s carries gradients over the seeds.
void seed_square(JetBatch& batch, const Condition& cond, const LossFunction::BlockPlan& bp, int p, int dir,
                 const GradReal& s, double scale) {
    if (s.n == 0 || s.val == 0.0 || scale == 0.0) return;
    const int U = static_cast<int>(cond.uses.size());
    const double f = 2.0 * scale * s.val;
    for (int j = 0; j < s.n; ++j) {
        const double g = s.grad[static_cast<std::size_t>(j)];
        if (g == 0.0) continue;
        const int use = j < U ? j : j - U;
        const int o = cond.uses[static_cast<std::size_t>(use)].output;
        const int comp = j < U ? bp.value_comp[static_cast<std::size_t>(use)]
                               : bp.tangent_comp[static_cast<std::size_t>(dir)][static_cast<std::size_t>(use)];
        batch.add_adjoint(o, comp, p, f * g);
    }
}

std::shared_ptr<LossFunction::BlockPlan> make_block_plan(const ProblemSpec& problem, const Condition& cond,
                                                         std::span<const int> dirs) {
    auto bp = std::make_shared<LossFunction::BlockPlan>();
    std::vector<Partial> terms;
    for (const auto& u : cond.uses) {
        if (u.partial.order() > 0) terms.push_back(u.partial);
    }
    std::vector<int> slots;
    for (int d : dirs) {
        const int s = problem.param_slot(d);
        slots.push_back(s);
        for (const auto& u : cond.uses) terms.push_back(u.partial.with(s));
    }
    bp->plan = JetPlan(problem.input_dim(), terms);
    for (const auto& u : cond.uses) bp->value_comp.push_back(bp->plan.index(u.partial));
    for (int s : slots) {
        std::vector<int> comps;
        for (const auto& u : cond.uses) comps.push_back(bp->plan.index(u.partial.with(s)));
        bp->tangent_comp.push_back(std::move(comps));
    }
    return bp;
}

void check_condition(const Condition& cond) {
    if (static_cast<int>(cond.uses.size()) * 2 > kMaxResidualSeeds) {
        throw std::invalid_argument("condition " + cond.name + " reads too many jet entries");
    }
}

}  // namespace

LossFunction::LossFunction(const ProblemSpec& problem, CollocationSet points, LossWeights weights, LossParts parts,
                           std::vector<int> sa_params)
    : problem_(&problem), points_(std::move(points)), weights_(std::move(weights)), parts_(parts),
      sa_params_(std::move(sa_params)) {
    weights_.validate();
    if (!parts_.sensitivity) sa_params_.clear();
    for (int d : sa_params_) {
        if (d < 0 || d >= problem.params.size() || !problem.params[d].input) {
            throw std::invalid_argument("sensitivity parameter is not in the network input layout");
        }
    }
    for (const auto& cond : problem.conditions) {
        if (cond.kind == ConditionKind::hard || !cond.residual) {
            plans_.push_back(nullptr);
            continue;
        }
        check_condition(cond);
        plans_.push_back(make_block_plan(problem, cond, sa_params_));
    }
}

namespace {

LossParts parts_of(TrainingMode mode) { return LossParts{true, mode == TrainingMode::sa}; }

std::vector<int> sa_params_of(const ProblemSpec& problem, TrainingMode mode) {
    if (mode != TrainingMode::sa) return {};
    auto s = problem.params.sensitive();
    if (s.empty()) throw std::invalid_argument("sensitivity mode needs a sensitivity-flagged parameter input");
    return s;
}

}  // namespace

LossFunction::LossFunction(const ProblemSpec& problem, CollocationSet points, LossWeights weights, TrainingMode mode)
    : LossFunction(problem, std::move(points), std::move(weights), parts_of(mode), sa_params_of(problem, mode)) {
    if ((mode == TrainingMode::parametric) != points_.parametric) {
        throw std::invalid_argument("collocation points do not match the training mode");
    }
}

void LossFunction::set_points(CollocationSet points) { points_ = std::move(points); }

const LossFunction::BlockPlan& LossFunction::plan_for(int condition) const {
    const auto& p = plans_.at(static_cast<std::size_t>(condition));
    if (!p) throw std::invalid_argument("condition has no residual");
    return *p;
}

std::vector<std::string> LossFunction::term_names() const {
    std::vector<std::string> names;
    if (parts_.main) {
        for (auto k : kClasses) names.push_back(LossTerm{k, {}, 0, 0}.name());
    }
    for (int d : sa_params_) {
        for (auto k : kClasses) names.push_back(LossTerm{k, problem_->params[d].name, 0, 0}.name());
    }
    return names;
}

LossBreakdown LossFunction::assemble(JetSession& session, bool seed) const {
    const ProblemSpec& problem = *problem_;
    const int D = static_cast<int>(sa_params_.size());

    std::array<int, 4> count{};
    for (const auto& b : points_.blocks) {
        const Condition& c = problem.conditions[static_cast<std::size_t>(b.condition)];
        if (c.kind != ConditionKind::hard) count[static_cast<std::size_t>(class_index(c.kind))] +=
            static_cast<int>(b.points.cols());
    }
    std::array<double, 4> main_sum{};
    std::vector<std::array<double, 4>> sa_sum(static_cast<std::size_t>(D));

    LossBreakdown out;
    std::vector<SensReal> vals, params, res;
    for (const auto& block : points_.blocks) {
        const Condition& cond = problem.conditions[static_cast<std::size_t>(block.condition)];
        if (cond.kind == ConditionKind::hard || block.points.cols() == 0) continue;
        const BlockPlan& bp = plan_for(block.condition);
        JetBatch& batch = session.evaluate(bp.plan, block.points);
        const int ci = class_index(cond.kind);
        const double n = count[static_cast<std::size_t>(ci)];
        const double main_scale = parts_.main ? weights_.main_weight(cond.kind) / n : 0.0;
        res.resize(static_cast<std::size_t>(cond.residual_count));
        Eigen::VectorXd norms;
        if (keep_residuals_) norms.resize(block.points.cols());

        for (int p = 0; p < static_cast<int>(block.points.cols()); ++p) {
            for (int d = 0; d < std::max(D, 1); ++d) {
                const int dir = D > 0 ? d : -1;
                eval_point(problem, cond, bp, batch, block.points, p, dir, dir >= 0 ? sa_params_[static_cast<std::size_t>(d)] : -1,
                           vals, params, res);
                if (d == 0) {
                    double sq = 0.0;
                    for (const auto& r : res) {
                        sq += r.x.val * r.x.val;
                        if (seed) seed_square(batch, cond, bp, p, dir, r.x, main_scale);
                    }
                    main_sum[static_cast<std::size_t>(ci)] += sq;
                    if (keep_residuals_) norms[p] = std::sqrt(sq);
                }
                if (dir >= 0) {
                    const double sa_scale =
                        weights_.sa_weight(cond.kind, problem.params[sa_params_[static_cast<std::size_t>(d)]].name) / n;
                    double sq = 0.0;
                    for (const auto& r : res) {
                        sq += r.dx.val * r.dx.val;
                        if (seed) seed_square(batch, cond, bp, p, dir, r.dx, sa_scale);
                    }
                    sa_sum[static_cast<std::size_t>(d)][static_cast<std::size_t>(ci)] += sq;
                }
            }
        }
        if (keep_residuals_) out.residual_samples.push_back(std::move(norms));
    }

    if (parts_.main) {
        for (auto k : kClasses) {
            const std::size_t i = static_cast<std::size_t>(class_index(k));
            const double v = count[i] > 0 ? main_sum[i] / count[i] : 0.0;
            out.terms.push_back({k, {}, v, weights_.main_weight(k)});
        }
    }
    for (int d = 0; d < D; ++d) {
        const std::string& name = problem.params[sa_params_[static_cast<std::size_t>(d)]].name;
        for (auto k : kClasses) {
            const std::size_t i = static_cast<std::size_t>(class_index(k));
            const double v = count[i] > 0 ? sa_sum[static_cast<std::size_t>(d)][i] / count[i] : 0.0;
            out.terms.push_back({k, name, v, weights_.sa_weight(k, name)});
        }
    }
    for (const auto& t : out.terms) out.total += t.weight * t.value;
    return out;
}

LossBreakdown LossFunction::evaluate(const Network& network) const {
    JetSession session(network);
    return assemble(session, false);
}

std::pair<LossBreakdown, WeightGradient> LossFunction::value_and_gradient(const Network& network) const {
    JetSession session(network);
    LossBreakdown b = assemble(session, true);
    return {std::move(b), session.backward()};
}

LossBreakdown pinn_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                        const LossWeights& weights) {
    return LossFunction(problem, points, weights, LossParts{true, false}, {}).evaluate(network);
}

LossBreakdown sa_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                      const LossWeights& weights) {
    return LossFunction(problem, points, weights, LossParts{false, true}, sa_params_of(problem, TrainingMode::sa))
        .evaluate(network);
}

LossBreakdown total_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                         const LossWeights& weights, TrainingMode mode) {
    return LossFunction(problem, points, weights, mode).evaluate(network);
}

PointResidual residual_at(const Network& network, const ProblemSpec& problem, int condition,
                          std::span<const double> point, int param) {
    const Condition& cond = problem.conditions.at(static_cast<std::size_t>(condition));
    if (!cond.residual) throw std::invalid_argument("condition " + cond.name + " has no residual");
    check_condition(cond);
    std::vector<int> dirs;
    if (param >= 0) dirs.push_back(param);
    const auto bp = make_block_plan(problem, cond, dirs);
    Eigen::MatrixXd pts(problem.input_dim(), 1);
    if (static_cast<int>(point.size()) != problem.input_dim()) {
        throw std::invalid_argument("residual_at: point dimension does not match the input layout");
    }
    for (int i = 0; i < pts.rows(); ++i) pts(i, 0) = point[static_cast<std::size_t>(i)];
    JetSession session(network);
    const JetBatch& batch = session.evaluate(bp->plan, pts);
    std::vector<SensReal> vals, params, res(static_cast<std::size_t>(cond.residual_count));
    eval_point(problem, cond, *bp, batch, pts, 0, param >= 0 ? 0 : -1, param, vals, params, res);
    PointResidual out;
    for (const auto& r : res) {
        out.r.push_back(r.value());
        if (param >= 0) out.dr.push_back(r.tangent());
    }
    return out;
}

Eigen::VectorXd residual_norms(const Network& network, const ProblemSpec& problem, int condition,
                               const Eigen::MatrixXd& points) {
    const Condition& cond = problem.conditions.at(static_cast<std::size_t>(condition));
    if (!cond.residual) throw std::invalid_argument("condition " + cond.name + " has no residual");
    check_condition(cond);
    const auto bp = make_block_plan(problem, cond, {});
    JetSession session(network);
    const JetBatch& batch = session.evaluate(bp->plan, points);
    std::vector<SensReal> vals, params, res(static_cast<std::size_t>(cond.residual_count));
    Eigen::VectorXd norms(points.cols());
    for (int p = 0; p < static_cast<int>(points.cols()); ++p) {
        eval_point(problem, cond, *bp, batch, points, p, -1, -1, vals, params, res);
        double sq = 0.0;
        for (const auto& r : res) sq += r.value() * r.value();
        norms[p] = std::sqrt(sq);
    }
    return norms;
}

}  // namespace sapinn
