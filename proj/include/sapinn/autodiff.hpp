#pragma once

#include "sapinn/network.hpp"
#include "sapinn/partial.hpp"

#include <Eigen/Core>

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace sapinn {

/// Network output value and requested input partials at one point.
struct DerivativeJet {
    std::vector<double> value;                         // one entry per output
    std::map<Partial, std::vector<double>> partials;  // requested signatures only

    /// Throws std::out_of_range when `partial` was not requested.
    double at(const Partial& partial, int output = 0) const;
};

/// Flat gradient aligned with Network::flat_weights().
using WeightGradient = Eigen::VectorXd;

/// Exact input derivatives of the wrapped network output at `point`.
/// Throws std::invalid_argument on unknown slots, too-deep requests or a
/// point/layout dimension mismatch.
DerivativeJet eval_jet(const Network& network, std::span<const double> point, const DerivativeRequest& request);

/// Forward jets of a network over a batch of points, kept for a reverse sweep.
///
/// Values and adjoints are `outputs x (components * points)` matrices; the
/// column of (component c, point p) is `c * points + p`.
class JetBatch {
public:
    const JetPlan& plan() const { return *plan_; }
    int points() const { return points_; }
    int outputs() const { return static_cast<int>(values_.rows()); }

    double value(int output, int component, int point) const { return values_(output, column(component, point)); }
    void add_adjoint(int output, int component, int point, double g) {
        adjoints_(output, column(component, point)) += g;
    }

    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& adjoints() { return adjoints_; }
    const Eigen::MatrixXd& adjoints() const { return adjoints_; }

private:
    friend class JetSession;

    Eigen::Index column(int component, int point) const {
        return static_cast<Eigen::Index>(component) * points_ + point;
    }

    struct Hidden {
        Eigen::MatrixXd z;  // pre-activation jets
        Eigen::MatrixXd a;  // post-activation jets
        Eigen::ArrayXXd d1, d2, d3, d4;
    };

    const JetPlan* plan_ = nullptr;
    int points_ = 0;
    Eigen::MatrixXd input_;
    std::vector<Hidden> hidden_;
    Eigen::MatrixXd raw_;       // linear output layer jets before wrapping
    Eigen::MatrixXd envelope_;  // empty without a wrapper
    Eigen::MatrixXd values_;
    Eigen::MatrixXd adjoints_;
};

/// Records jet evaluations of one network so that adjoints seeded on their
/// outputs can be pulled back to the weights in one reverse sweep.
class JetSession {
public:
    explicit JetSession(const Network& network) : network_(&network) {}
    explicit JetSession(Network&&) = delete;

    const Network& network() const { return *network_; }

    /// `points` is `input_dim x n`. The plan must outlive the session.
    JetBatch& evaluate(const JetPlan& plan, const Eigen::MatrixXd& points);

    /// Adds a direct weight-space gradient, for loss terms that read weights
    /// rather than jets (regularizers).
    void add_weight_gradient(const WeightGradient& g);

    /// Sum over batches of d(Σ adjoint · value)/d(weights), plus direct terms.
    WeightGradient backward() const;

private:
    const Network* network_;
    WeightGradient direct_;
    std::vector<std::unique_ptr<JetBatch>> batches_;
};

using LossEvaluator = std::function<double(JetSession&)>;

/// Loss value and its exact weight gradient. The evaluator reads jets through
/// the session and seeds d(loss)/d(jet) on the batches it evaluated.
/// Throws DivergenceError on a non-finite loss.
std::pair<double, WeightGradient> loss_weight_gradient(const LossEvaluator& loss, const Network& network);

/// Variant taking the collocation data the evaluator consumes.
template <class Points, class Evaluator>
std::pair<double, WeightGradient> loss_weight_gradient(const Evaluator& loss, const Network& network,
                                                       const Points& points) {
    return loss_weight_gradient(LossEvaluator([&](JetSession& s) { return loss(s, points); }), network);
}

}  // namespace sapinn
