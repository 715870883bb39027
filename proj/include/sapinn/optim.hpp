#pragma once

#include "sapinn/losses.hpp"
#include "sapinn/network.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sapinn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int iterations = 1000;

    void validate() const;
};

struct QuasiNewtonConfig {
    bool full = false;  // dense inverse-Hessian BFGS instead of the limited-memory form
    int memory = 20;
    int max_iterations = 5000;
    double gradient_tolerance = 1e-8;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_step_halvings = 30;  // line-search evaluations per iteration

    void validate() const;
};

struct OptimizerConfig {
    AdamConfig adam;
    QuasiNewtonConfig quasi_newton;

    void validate() const { adam.validate(), quasi_newton.validate(); }
};

/// Objective value, gradient and optional per-term values for the trace.
struct Evaluation {
    double f = 0.0;
    Eigen::VectorXd g;
    std::vector<double> terms;
};

using Objective = std::function<Evaluation(const Eigen::VectorXd&)>;

enum class Phase { adam, quasi_newton };
std::string_view to_string(Phase phase);

struct TraceRecord {
    int iteration = 0;
    Phase phase = Phase::adam;
    double total = 0.0;
    std::vector<double> terms;
    double grad_norm = 0.0;
    double wall_time = 0.0;  // seconds since the phase started, cumulative across phases
};

struct TrainingTrace {
    std::vector<std::string> term_names;
    std::vector<TraceRecord> records;

    int last_iteration() const { return records.empty() ? 0 : records.back().iteration; }
    double last_time() const { return records.empty() ? 0.0 : records.back().wall_time; }
    /// Header `iteration,phase,total,<term names>,grad_norm,wall_time`; 17 significant digits.
    void write_csv(std::ostream& out) const;
};

enum class OptimStatus { completed, converged, max_iterations, line_search_failed, diverged };
std::string_view to_string(OptimStatus status);

/// One accepted line-search step, kept for checking the Wolfe conditions.
struct LineSearchRecord {
    double alpha = 0.0;
    double f0 = 0.0;
    double slope0 = 0.0;  // directional derivative at alpha = 0
    double f = 0.0;
    double slope = 0.0;
    int evaluations = 0;
};

struct OptimResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int iterations = 0;
    OptimStatus status = OptimStatus::completed;
    std::vector<LineSearchRecord> steps;
};

/// Called after every iteration with the new iterate. Returns true when it
/// changed the objective (for example after adding collocation points).
using IterationHook = std::function<bool(int iteration, const Eigen::VectorXd& x, const Evaluation& e)>;

/// Adam with bias correction for `config.iterations` steps. Stops with
/// `diverged` at the first non-finite loss and keeps the last finite iterate.
OptimResult adam_minimize(const Objective& objective, Eigen::VectorXd x, const AdamConfig& config,
                          const IterationHook& hook = {});

/// (L-)BFGS with a strong-Wolfe line search. Never returns an iterate worse
/// than its input; a failed line search returns the best point so far.
OptimResult quasi_newton_minimize(const Objective& objective, Eigen::VectorXd x, const QuasiNewtonConfig& config,
                                  const IterationHook& hook = {});

/// Strong-Wolfe line search along `direction` (zoom with cubic interpolation).
/// Returns false when no acceptable step was found within the evaluation budget.
bool strong_wolfe_search(const Objective& objective, const Eigen::VectorXd& x, const Evaluation& at_x,
                         const Eigen::VectorXd& direction, double alpha0, const QuasiNewtonConfig& config,
                         Eigen::VectorXd& x_out, Evaluation& e_out, LineSearchRecord& record);

struct TrainResult {
    Network network;
    TrainingTrace trace;
    OptimStatus status = OptimStatus::completed;
};

/// Called after each iteration; may replace the collocation points of `loss`,
/// in which case it returns true.
using TrainHook = std::function<bool(int iteration, const Network& network, LossFunction& loss)>;

/// Adam phase over the network weights. Appends to `trace`.
TrainResult adam_run(const Network& network, LossFunction& loss, const AdamConfig& config,
                     TrainingTrace trace = {}, const TrainHook& hook = {});
/// Quasi-Newton phase over the network weights. Appends to `trace`.
TrainResult quasi_newton_run(const Network& network, LossFunction& loss, const QuasiNewtonConfig& config,
                             TrainingTrace trace = {}, const TrainHook& hook = {});

}  // namespace sapinn
