#pragma once

#include "sapinn/autodiff.hpp"
#include "sapinn/problems.hpp"

#include <Eigen/Core>

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sapinn {

enum class TrainingMode { vanilla, sa, parametric };

std::string_view to_string(TrainingMode mode);
TrainingMode training_mode_from_string(std::string_view name);

/// Loss-term classes: the PDE residual and the initial, Dirichlet and Neumann mismatches.
/// Hard-enforced conditions never form a term.
std::string_view term_class(ConditionKind kind);

/// Weights of the main terms and of the sensitivity terms. Sensitivity
/// weights are shared by all parameters of a class unless overridden per
/// parameter name.
struct LossWeights {
    std::map<ConditionKind, double> main{{ConditionKind::interior, 1.0},
                                         {ConditionKind::initial, 1.0},
                                         {ConditionKind::dirichlet, 1.0},
                                         {ConditionKind::neumann, 1.0}};
    std::map<ConditionKind, double> sa{{ConditionKind::interior, 0.1},
                                       {ConditionKind::initial, 0.1},
                                       {ConditionKind::dirichlet, 0.1},
                                       {ConditionKind::neumann, 0.1}};
    std::map<std::string, std::map<ConditionKind, double>> sa_overrides;

    double main_weight(ConditionKind kind) const;
    double sa_weight(ConditionKind kind, std::string_view param) const;
    LossWeights with_sa(double value) const;
    /// Throws std::invalid_argument on a negative weight.
    void validate() const;
};

struct LossTerm {
    ConditionKind kind = ConditionKind::interior;
    std::string param;  // empty for main terms
    double value = 0.0;
    double weight = 0.0;

    /// "loss_f", "loss_D", "loss_0", "loss_N"; sensitivity terms append "_<param>".
    std::string name() const;
};

struct LossBreakdown {
    double total = 0.0;
    std::vector<LossTerm> terms;
    /// Pointwise residual norms per collocation block, filled on request.
    std::vector<Eigen::VectorXd> residual_samples;

    /// Throws std::out_of_range for a term that was not assembled.
    double term(ConditionKind kind, std::string_view param = {}) const;
    const LossTerm* find(ConditionKind kind, std::string_view param = {}) const;
};

/// Which parts of the loss to assemble.
struct LossParts {
    bool main = true;
    bool sensitivity = false;
};

/// Residual and its parameter derivative at one point.
struct PointResidual {
    std::vector<double> r;
    std::vector<double> dr;  // empty without a parameter direction
};

/// Weighted loss over a fixed collocation set, with exact weight gradients.
///
/// Parameter values in residuals come from the point coordinates for
/// parameter inputs and from nominals for fixed parameters. Sensitivity terms
/// differentiate each residual along every requested parameter input at the
/// point's coordinates.
class LossFunction {
public:
    /// `sa_params` defaults to every sensitivity-flagged parameter input.
    /// Throws std::invalid_argument for a parameter that is not a network input.
    LossFunction(const ProblemSpec& problem, CollocationSet points, LossWeights weights, LossParts parts,
                 std::vector<int> sa_params);
    LossFunction(const ProblemSpec& problem, CollocationSet points, LossWeights weights, TrainingMode mode);

    const ProblemSpec& problem() const { return *problem_; }
    const CollocationSet& points() const { return points_; }
    void set_points(CollocationSet points);
    const std::vector<int>& sa_params() const { return sa_params_; }
    void set_keep_residuals(bool keep) { keep_residuals_ = keep; }

    /// Term names in breakdown order.
    std::vector<std::string> term_names() const;

    LossBreakdown evaluate(const Network& network) const;
    /// Breakdown and d(total)/d(weights). Non-finite totals are returned, not thrown.
    std::pair<LossBreakdown, WeightGradient> value_and_gradient(const Network& network) const;

    struct BlockPlan;  // compiled jet plan of one condition

private:
    LossBreakdown assemble(JetSession& session, bool seed) const;
    const BlockPlan& plan_for(int condition) const;

    const ProblemSpec* problem_;
    CollocationSet points_;
    LossWeights weights_;
    LossParts parts_;
    std::vector<int> sa_params_;
    bool keep_residuals_ = false;
    std::vector<std::shared_ptr<BlockPlan>> plans_;  // per condition
};

LossBreakdown pinn_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                        const LossWeights& weights);
/// Throws std::invalid_argument when the problem has no sensitivity-flagged parameter input.
LossBreakdown sa_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                      const LossWeights& weights);
LossBreakdown total_loss(const Network& network, const ProblemSpec& problem, const CollocationSet& points,
                         const LossWeights& weights, TrainingMode mode);

/// Residual of condition `condition` at `point` (input coordinates); with
/// `param >= 0` also its derivative along that parameter input.
PointResidual residual_at(const Network& network, const ProblemSpec& problem, int condition,
                          std::span<const double> point, int param = -1);

/// Euclidean norm of the residual vector at every column of `points`.
Eigen::VectorXd residual_norms(const Network& network, const ProblemSpec& problem, int condition,
                               const Eigen::MatrixXd& points);

}  // namespace sapinn
