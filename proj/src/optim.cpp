#include "sapinn/optim.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sapinn {

namespace {

bool finite(const Evaluation& e) { return std::isfinite(e.f) && e.g.allFinite(); }

// Minimizer of the cubic matching values and slopes at a and b; NaN when it does not exist.
double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = gb - ga + 2.0 * d2;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return b - (b - a) * ((gb + d2 - d1) / denom);
}

class Clock {
public:
    explicit Clock(double offset) : offset_(offset), start_(std::chrono::steady_clock::now()) {}
    double now() const {
        return offset_ + std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    double offset_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

void AdamConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("adam: betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be positive");
    if (iterations < 0) throw std::invalid_argument("adam: iterations must be non-negative");
}

void QuasiNewtonConfig::validate() const {
    if (memory < 1) throw std::invalid_argument("quasi_newton: memory must be at least 1");
    if (max_iterations < 0) throw std::invalid_argument("quasi_newton: max_iterations must be non-negative");
    if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("quasi_newton: gradient_tolerance must be positive");
    if (!(c1 > 0.0 && c1 < c2 && c2 < 1.0)) throw std::invalid_argument("quasi_newton: need 0 < c1 < c2 < 1");
    if (max_step_halvings < 1) throw std::invalid_argument("quasi_newton: max_step_halvings must be positive");
}

std::string_view to_string(Phase phase) { return phase == Phase::adam ? "adam" : "quasi_newton"; }

std::string_view to_string(OptimStatus status) {
    switch (status) {
    case OptimStatus::completed:
        return "completed";
    case OptimStatus::converged:
        return "converged";
    case OptimStatus::max_iterations:
        return "max_iterations";
    case OptimStatus::line_search_failed:
        return "line_search_failed";
    case OptimStatus::diverged:
        return "diverged";
    }
    return "completed";
}

void TrainingTrace::write_csv(std::ostream& out) const {
    out << "iteration,phase,total";
    for (const auto& n : term_names) out << ',' << n;
    out << ",grad_norm,wall_time\n";
    out << std::setprecision(17);
    for (const auto& r : records) {
        out << r.iteration << ',' << to_string(r.phase) << ',' << r.total;
        for (double t : r.terms) out << ',' << t;
        out << ',' << r.grad_norm << ',' << r.wall_time << '\n';
    }
}

OptimResult adam_minimize(const Objective& objective, Eigen::VectorXd x, const AdamConfig& config,
                          const IterationHook& hook) {
    config.validate();
    OptimResult res;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
    double b1t = 1.0, b2t = 1.0;
    for (int t = 1; t <= config.iterations; ++t) {
        const Evaluation e = objective(x);
        if (!finite(e)) {
            res.status = OptimStatus::diverged;
            res.x = std::move(x);
            res.f = e.f;
            return res;
        }
        b1t *= config.beta1;
        b2t *= config.beta2;
        m = config.beta1 * m + (1.0 - config.beta1) * e.g;
        v = config.beta2 * v + (1.0 - config.beta2) * e.g.cwiseAbs2();
        const Eigen::VectorXd mhat = m / (1.0 - b1t);
        const Eigen::VectorXd vhat = v / (1.0 - b2t);
        x.array() -= config.lr * mhat.array() / (vhat.array().sqrt() + config.eps);
        res.iterations = t;
        if (hook) hook(t, x, e);
    }
    const Evaluation last = objective(x);
    res.f = last.f;
    res.status = finite(last) ? OptimStatus::completed : OptimStatus::diverged;
    res.x = std::move(x);
    return res;
}

bool strong_wolfe_search(const Objective& objective, const Eigen::VectorXd& x, const Evaluation& at_x,
                         const Eigen::VectorXd& direction, double alpha0, const QuasiNewtonConfig& config,
                         Eigen::VectorXd& x_out, Evaluation& e_out, LineSearchRecord& record) {
    const double f0 = at_x.f;
    const double g0 = at_x.g.dot(direction);
    record = LineSearchRecord{0.0, f0, g0, f0, g0, 0};
    if (!(g0 < 0.0)) return false;

    int evals = 0;
    const auto probe = [&](double alpha, Evaluation& e) {
        ++evals;
        e = objective(x + alpha * direction);
        return finite(e) ? e.g.dot(direction) : std::numeric_limits<double>::quiet_NaN();
    };
    const auto accept = [&](double alpha, Evaluation&& e, double slope) {
        x_out = x + alpha * direction;
        record = LineSearchRecord{alpha, f0, g0, e.f, slope, evals};
        e_out = std::move(e);
        return true;
    };
    const auto armijo = [&](double alpha, double f) { return f <= f0 + config.c1 * alpha * g0; };
    // A slope at the rounding level of g.d counts as zero, so tiny c2 acts as an exact line search.
    const double d_norm = direction.norm();
    const auto curvature = [&](double slope, const Evaluation& e) {
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * e.g.norm() * d_norm;
        return std::abs(slope) <= std::max(-config.c2 * g0, noise);
    };

    // Zoom between lo (satisfies Armijo, lowest so far) and hi. When the
    // bracket's values agree to rounding, the line minimizer is resolved and lo is taken.
    const auto zoom = [&](double lo, double f_lo, double g_lo, Evaluation e_lo, double hi, double f_hi,
                          double g_hi) {
        const auto resolved = [&]() {
            return lo > 0.0 &&
                   std::abs(f_hi - f_lo) <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
        };
        while (evals < config.max_step_halvings) {
            if (resolved()) return accept(lo, std::move(e_lo), g_lo);
            const double span = hi - lo;
            double a = cubic_minimizer(lo, f_lo, g_lo, hi, f_hi, g_hi);
            const double left = std::min(lo, hi) + 0.1 * std::abs(span);
            const double right = std::max(lo, hi) - 0.1 * std::abs(span);
            if (!std::isfinite(a) || a < left || a > right) a = 0.5 * (lo + hi);
            if (a == lo || a == hi) break;
            Evaluation e;
            const double s = probe(a, e);
            if (!std::isfinite(s)) {
                // No usable slope: shrink towards lo by bisection.
                hi = a;
                f_hi = f_lo + std::abs(g_lo) * std::abs(a - lo) + 1.0;
                g_hi = std::abs(g_lo) * (a > lo ? 1.0 : -1.0);
                continue;
            }
            if (!armijo(a, e.f) || e.f >= f_lo) {
                hi = a;
                f_hi = e.f;
                g_hi = s;
                continue;
            }
            if (curvature(s, e)) return accept(a, std::move(e), s);
            if (s * (hi - lo) >= 0.0) {
                hi = lo;
                f_hi = f_lo;
                g_hi = g_lo;
            }
            lo = a;
            f_lo = e.f;
            g_lo = s;
            e_lo = std::move(e);
        }
        if (resolved()) return accept(lo, std::move(e_lo), g_lo);
        return false;
    };

    double prev = 0.0, f_prev = f0, g_prev = g0;
    Evaluation e_prev = at_x;
    double alpha = alpha0;
    for (int i = 0; evals < config.max_step_halvings; ++i) {
        Evaluation e;
        const double s = probe(alpha, e);
        if (!std::isfinite(s)) {
            // Step left the region where the objective is finite: shrink.
            alpha = prev + 0.5 * (alpha - prev);
            continue;
        }
        if (!armijo(alpha, e.f) || (i > 0 && e.f >= f_prev)) {
            const bool ok = zoom(prev, f_prev, g_prev, e_prev, alpha, e.f, s);
            if (ok) return true;
            break;
        }
        if (curvature(s, e)) return accept(alpha, std::move(e), s);
        if (s >= 0.0) {
            const bool ok = zoom(alpha, e.f, s, e, prev, f_prev, g_prev);
            if (ok) return true;
            break;
        }
        prev = alpha;
        f_prev = e.f;
        g_prev = s;
        e_prev = std::move(e);
        alpha *= 2.0;
    }
    record.evaluations = evals;
    return false;
}

OptimResult quasi_newton_minimize(const Objective& objective, Eigen::VectorXd x, const QuasiNewtonConfig& config,
                                  const IterationHook& hook) {
    config.validate();
    OptimResult res;
    Evaluation e = objective(x);
    if (!finite(e)) {
        res.x = std::move(x);
        res.f = e.f;
        res.status = OptimStatus::diverged;
        return res;
    }
    const Eigen::Index n = x.size();
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y), oldest first
    std::deque<double> rhos;
    Eigen::MatrixXd H;  // dense inverse Hessian, full mode only
    bool h_init = false;

    const auto reset = [&]() {
        pairs.clear();
        rhos.clear();
        h_init = false;
    };

    res.status = OptimStatus::max_iterations;
    for (int k = 0; k < config.max_iterations; ++k) {
        if (e.g.norm() < config.gradient_tolerance) {
            res.status = OptimStatus::converged;
            break;
        }
        Eigen::VectorXd d;
        if (config.full) {
            d = h_init ? Eigen::VectorXd(-(H * e.g)) : Eigen::VectorXd(-e.g);
        } else {
            // Two-loop recursion.
            Eigen::VectorXd q = e.g;
            std::vector<double> alpha(pairs.size());
            for (std::size_t i = pairs.size(); i-- > 0;) {
                alpha[i] = rhos[i] * pairs[i].first.dot(q);
                q -= alpha[i] * pairs[i].second;
            }
            if (!pairs.empty()) {
                const auto& [s, y] = pairs.back();
                q *= s.dot(y) / y.squaredNorm();
            }
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const double beta = rhos[i] * pairs[i].second.dot(q);
                q += (alpha[i] - beta) * pairs[i].first;
            }
            d = -q;
        }
        if (!(d.dot(e.g) < 0.0)) {
            reset();
            d = -e.g;
        }
        const bool fresh = config.full ? !h_init : pairs.empty();
        const double alpha0 = fresh ? std::min(1.0, 1.0 / e.g.norm()) : 1.0;

        Eigen::VectorXd x_new;
        Evaluation e_new;
        LineSearchRecord rec;
        bool found = strong_wolfe_search(objective, x, e, d, alpha0, config, x_new, e_new, rec);
        if (!found && !fresh) {
            // Retry once along steepest descent before giving up.
            reset();
            d = -e.g;
            found = strong_wolfe_search(objective, x, e, d, std::min(1.0, 1.0 / e.g.norm()), config, x_new, e_new,
                                        rec);
        }
        if (!found) {
            res.status = OptimStatus::line_search_failed;
            break;
        }
        res.steps.push_back(rec);
        {
            const Eigen::VectorXd s = x_new - x;
            const Eigen::VectorXd y = e_new.g - e.g;
            const double sy = s.dot(y);
            if (sy > 1e-12 * s.norm() * y.norm()) {
                if (config.full) {
                    if (!h_init) {
                        H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                        h_init = true;
                    }
                    const double rho = 1.0 / sy;
                    const Eigen::VectorXd Hy = H * y;
                    const double yHy = y.dot(Hy);
                    H -= rho * (Hy * s.transpose() + s * Hy.transpose());
                    H += (rho * rho * yHy + rho) * (s * s.transpose());
                } else {
                    pairs.emplace_back(s, y);
                    rhos.push_back(1.0 / sy);
                    if (static_cast<int>(pairs.size()) > config.memory) {
                        pairs.pop_front();
                        rhos.pop_front();
                    }
                }
            }
        }
        x = std::move(x_new);
        e = std::move(e_new);
        res.iterations = k + 1;
        if (hook && hook(k + 1, x, e)) {
            e = objective(x);
            reset();
            if (!finite(e)) {
                res.status = OptimStatus::diverged;
                break;
            }
        }
    }
    if (res.status == OptimStatus::max_iterations && e.g.norm() < config.gradient_tolerance) {
        res.status = OptimStatus::converged;
    }
    res.x = std::move(x);
    res.f = e.f;
    return res;
}

namespace {

Objective network_objective(const Network& base, const LossFunction& loss) {
    return [&base, &loss](const Eigen::VectorXd& w) {
        const Network net = base.with_weights(w);
        auto [b, g] = loss.value_and_gradient(net);
        Evaluation e;
        e.f = b.total;
        e.g = std::move(g);
        for (const auto& t : b.terms) e.terms.push_back(t.value);
        return e;
    };
}

void prepare_trace(TrainingTrace& trace, const LossFunction& loss) {
    if (trace.term_names.empty()) trace.term_names = loss.term_names();
}

}  // namespace

TrainResult adam_run(const Network& network, LossFunction& loss, const AdamConfig& config, TrainingTrace trace,
                     const TrainHook& hook) {
    prepare_trace(trace, loss);
    const Clock clock(trace.last_time());
    const int base = trace.last_iteration();
    Network current = network;
    const IterationHook step = [&](int t, const Eigen::VectorXd& x, const Evaluation& e) {
        trace.records.push_back({base + t, Phase::adam, e.f, e.terms, e.g.norm(), clock.now()});
        if (!hook) return false;
        current.set_flat_weights(x);
        return hook(base + t, current, loss);
    };
    const OptimResult r = adam_minimize(network_objective(network, loss), network.flat_weights(), config, step);
    TrainResult out{network.with_weights(r.x), std::move(trace), r.status};
    return out;
}

TrainResult quasi_newton_run(const Network& network, LossFunction& loss, const QuasiNewtonConfig& config,
                             TrainingTrace trace, const TrainHook& hook) {
    prepare_trace(trace, loss);
    const Clock clock(trace.last_time());
    const int base = trace.last_iteration();
    Network current = network;
    const IterationHook step = [&](int k, const Eigen::VectorXd& x, const Evaluation& e) {
        trace.records.push_back({base + k, Phase::quasi_newton, e.f, e.terms, e.g.norm(), clock.now()});
        if (!hook) return false;
        current.set_flat_weights(x);
        return hook(base + k, current, loss);
    };
    const OptimResult r =
        quasi_newton_minimize(network_objective(network, loss), network.flat_weights(), config, step);
    return TrainResult{network.with_weights(r.x), std::move(trace), r.status};
}

}  // namespace sapinn
