#include "sapinn/autodiff.hpp"

#include "sapinn/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sapinn {

namespace {

// Propagates jets through the elementwise activation. `z` and `a` hold all
// components; d1..d4 are the activation derivatives at the value component.
void activation_forward(const JetPlan& plan, int points, const Eigen::MatrixXd& z, Eigen::MatrixXd& a,
                        const Eigen::ArrayXXd& s, const Eigen::ArrayXXd& d1, const Eigen::ArrayXXd& d2,
                        const Eigen::ArrayXXd& d3) {
    const auto Z = [&](int c) { return z.middleCols(static_cast<Eigen::Index>(c) * points, points).array(); };
    const auto A = [&](int c) { return a.middleCols(static_cast<Eigen::Index>(c) * points, points).array(); };
    A(0) = s;
    for (const auto& e : plan.first_order()) A(e.component) = d1 * Z(e.component);
    for (const auto& e : plan.second_order()) A(e.component) = d2 * Z(e.a) * Z(e.b) + d1 * Z(e.component);
    for (const auto& e : plan.third_order()) {
        A(e.component) = d3 * Z(e.a) * Z(e.b) * Z(e.c) +
                         d2 * (Z(e.ab) * Z(e.c) + Z(e.ac) * Z(e.b) + Z(e.bc) * Z(e.a)) + d1 * Z(e.component);
    }
}

// Adjoint of activation_forward: ga = dL/da in, gz = dL/dz out.
void activation_backward(const JetPlan& plan, int points, const Eigen::MatrixXd& z, const Eigen::MatrixXd& ga,
                         Eigen::MatrixXd& gz, const Eigen::ArrayXXd& d1, const Eigen::ArrayXXd& d2,
                         const Eigen::ArrayXXd& d3, const Eigen::ArrayXXd& d4) {
    const auto Z = [&](int c) { return z.middleCols(static_cast<Eigen::Index>(c) * points, points).array(); };
    const auto GA = [&](int c) { return ga.middleCols(static_cast<Eigen::Index>(c) * points, points).array(); };
    const auto GZ = [&](int c) { return gz.middleCols(static_cast<Eigen::Index>(c) * points, points).array(); };
    gz.setZero(z.rows(), z.cols());
    GZ(0) = GA(0) * d1;
    for (const auto& e : plan.first_order()) {
        GZ(e.component) += GA(e.component) * d1;
        GZ(0) += GA(e.component) * d2 * Z(e.component);
    }
    for (const auto& e : plan.second_order()) {
        const auto g = GA(e.component);
        GZ(e.component) += g * d1;
        GZ(e.a) += g * d2 * Z(e.b);
        GZ(e.b) += g * d2 * Z(e.a);
        GZ(0) += g * (d3 * Z(e.a) * Z(e.b) + d2 * Z(e.component));
    }
    for (const auto& e : plan.third_order()) {
        const auto g = GA(e.component);
        GZ(e.component) += g * d1;
        GZ(e.a) += g * (d3 * Z(e.b) * Z(e.c) + d2 * Z(e.bc));
        GZ(e.b) += g * (d3 * Z(e.a) * Z(e.c) + d2 * Z(e.ac));
        GZ(e.c) += g * (d3 * Z(e.a) * Z(e.b) + d2 * Z(e.ab));
        GZ(e.ab) += g * d2 * Z(e.c);
        GZ(e.ac) += g * d2 * Z(e.b);
        GZ(e.bc) += g * d2 * Z(e.a);
        GZ(0) += g * (d4 * Z(e.a) * Z(e.b) * Z(e.c) +
                      d3 * (Z(e.ab) * Z(e.c) + Z(e.ac) * Z(e.b) + Z(e.bc) * Z(e.a)) + d2 * Z(e.component));
    }
}

void accumulate_layer_gradient(const Eigen::MatrixXd& gz, const Eigen::MatrixXd& input, int points,
                               Eigen::Ref<Eigen::VectorXd> out) {
    const Eigen::Index rows = gz.rows();
    const Eigen::Index cols = input.rows();
    RowMatrix gw = gz * input.transpose();
    out.head(rows * cols) += Eigen::Map<const Eigen::VectorXd>(gw.data(), rows * cols);
    out.segment(rows * cols, rows) += gz.leftCols(points).rowwise().sum();
}

}  // namespace

double DerivativeJet::at(const Partial& partial, int output) const {
    if (partial.order() == 0) return value.at(static_cast<std::size_t>(output));
    auto it = partials.find(partial);
    if (it == partials.end()) throw std::out_of_range("derivative jet does not carry " + partial.to_string());
    return it->second.at(static_cast<std::size_t>(output));
}

JetBatch& JetSession::evaluate(const JetPlan& plan, const Eigen::MatrixXd& points) {
    const Network& net = *network_;
    const NetworkSpec& spec = net.spec();
    if (points.rows() != spec.input_dim() || plan.input_dim() != spec.input_dim()) {
        throw std::invalid_argument("jet evaluation: point dimension " + std::to_string(points.rows()) +
                                    " does not match input layout " + std::to_string(spec.input_dim()));
    }
    auto batch = std::make_unique<JetBatch>();
    JetBatch& b = *batch;
    const int P = static_cast<int>(points.cols());
    const int C = plan.size();
    const Eigen::Index cols = static_cast<Eigen::Index>(C) * P;
    b.plan_ = &plan;
    b.points_ = P;

    b.input_.setZero(spec.input_dim(), cols);
    for (int i = 0; i < spec.input_dim(); ++i) {
        b.input_.row(i).head(P) = points.row(i) * spec.input_layout[static_cast<std::size_t>(i)].scale;
    }
    for (const auto& e : plan.first_order()) {
        b.input_.row(e.slot).segment(static_cast<Eigen::Index>(e.component) * P, P).setConstant(
            spec.input_layout[static_cast<std::size_t>(e.slot)].scale);
    }

    const auto& layers = net.layers();
    const bool is_tanh = spec.activation == "tanh";
    const Eigen::MatrixXd* prev = &b.input_;
    b.hidden_.resize(layers.size() - 1);
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        auto& h = b.hidden_[l];
        h.z.noalias() = layers[l].weights * *prev;
        h.z.leftCols(P).colwise() += layers[l].bias;
        const auto z0 = h.z.leftCols(P).array();
        Eigen::ArrayXXd s;
        if (is_tanh) {
            s = z0.tanh();
            h.d1 = 1.0 - s.square();
            h.d2 = -2.0 * s * h.d1;
            h.d3 = -2.0 * (h.d1.square() + s * h.d2);
            h.d4 = -6.0 * h.d1 * h.d2 - 2.0 * s * h.d3;
        } else {
            s = z0;
            h.d1 = Eigen::ArrayXXd::Ones(z0.rows(), z0.cols());
            h.d2 = h.d3 = h.d4 = Eigen::ArrayXXd::Zero(z0.rows(), z0.cols());
        }
        h.a.resize(h.z.rows(), h.z.cols());
        activation_forward(plan, P, h.z, h.a, s, h.d1, h.d2, h.d3);
        prev = &h.a;
    }
    b.raw_.noalias() = layers.back().weights * *prev;
    b.raw_.leftCols(P).colwise() += layers.back().bias;

    if (const OutputWrapper* w = net.wrapper()) {
        const int O = spec.output_dim;
        b.envelope_.resize(O, cols);
        b.values_.resize(O, cols);
        Jet env(plan, 0.0), off(plan, 0.0);
        std::vector<double> pt(static_cast<std::size_t>(spec.input_dim()));
        for (int p = 0; p < P; ++p) {
            for (int i = 0; i < spec.input_dim(); ++i) pt[static_cast<std::size_t>(i)] = points(i, p);
            for (int o = 0; o < O; ++o) {
                w->jets(pt, o, env, off);
                for (int c = 0; c < C; ++c) {
                    double v = off[c];
                    for (const auto& t : plan.product_terms(c)) v += env[t.left] * b.raw_(o, b.column(t.right, p));
                    b.values_(o, b.column(c, p)) = v;
                    b.envelope_(o, b.column(c, p)) = env[c];
                }
            }
        }
    } else {
        b.values_ = b.raw_;
    }
    b.adjoints_.setZero(b.values_.rows(), b.values_.cols());
    batches_.push_back(std::move(batch));
    return b;
}

void JetSession::add_weight_gradient(const WeightGradient& g) {
    if (g.size() != network_->parameter_count()) throw std::invalid_argument("weight gradient length mismatch");
    if (direct_.size() == 0) direct_ = WeightGradient::Zero(g.size());
    direct_ += g;
}

WeightGradient JetSession::backward() const {
    const Network& net = *network_;
    const auto& layers = net.layers();
    WeightGradient grad = direct_.size() ? direct_ : WeightGradient::Zero(net.parameter_count());

    std::vector<Eigen::Index> offsets;
    Eigen::Index k = 0;
    for (const auto& l : layers) {
        offsets.push_back(k);
        k += l.weights.size() + l.bias.size();
    }

    for (const auto& bp : batches_) {
        const JetBatch& b = *bp;
        if (b.adjoints_.isZero(0.0)) continue;
        const JetPlan& plan = *b.plan_;
        const int P = b.points_;

        Eigen::MatrixXd g_raw;
        if (net.wrapper()) {
            g_raw.setZero(b.raw_.rows(), b.raw_.cols());
            for (int o = 0; o < b.raw_.rows(); ++o) {
                for (int c = 0; c < plan.size(); ++c) {
                    for (const auto& t : plan.product_terms(c)) {
                        for (int p = 0; p < P; ++p) {
                            g_raw(o, b.column(t.right, p)) +=
                                b.adjoints_(o, b.column(c, p)) * b.envelope_(o, b.column(t.left, p));
                        }
                    }
                }
            }
        } else {
            g_raw = b.adjoints_;
        }

        const std::size_t L = layers.size();
        const Eigen::MatrixXd& last_in = L > 1 ? b.hidden_[L - 2].a : b.input_;
        accumulate_layer_gradient(g_raw, last_in, P,
                                  grad.segment(offsets[L - 1], layers[L - 1].weights.size() + layers[L - 1].bias.size()));
        Eigen::MatrixXd ga = layers[L - 1].weights.transpose() * g_raw;
        Eigen::MatrixXd gz;
        for (std::size_t l = L - 1; l-- > 0;) {
            const auto& h = b.hidden_[l];
            activation_backward(plan, P, h.z, ga, gz, h.d1, h.d2, h.d3, h.d4);
            const Eigen::MatrixXd& in = l > 0 ? b.hidden_[l - 1].a : b.input_;
            accumulate_layer_gradient(gz, in, P,
                                      grad.segment(offsets[l], layers[l].weights.size() + layers[l].bias.size()));
            if (l > 0) ga.noalias() = layers[l].weights.transpose() * gz;
        }
    }
    return grad;
}

DerivativeJet eval_jet(const Network& network, std::span<const double> point, const DerivativeRequest& request) {
    request.validate();
    if (request.input_dim != network.spec().input_dim()) {
        throw std::invalid_argument("derivative request input_dim does not match the network input layout");
    }
    if (static_cast<int>(point.size()) != network.spec().input_dim()) {
        throw std::invalid_argument("eval_jet: point dimension does not match input layout");
    }
    const JetPlan plan(request);
    Eigen::MatrixXd pts(network.spec().input_dim(), 1);
    for (int i = 0; i < pts.rows(); ++i) pts(i, 0) = point[static_cast<std::size_t>(i)];
    JetSession session(network);
    const JetBatch& b = session.evaluate(plan, pts);

    DerivativeJet jet;
    const int O = b.outputs();
    jet.value.resize(static_cast<std::size_t>(O));
    for (int o = 0; o < O; ++o) jet.value[static_cast<std::size_t>(o)] = b.value(o, 0, 0);
    for (const auto& p : request.terms()) {
        std::vector<double> v(static_cast<std::size_t>(O));
        const int c = plan.index(p);
        for (int o = 0; o < O; ++o) v[static_cast<std::size_t>(o)] = b.value(o, c, 0);
        jet.partials.emplace(p, std::move(v));
    }
    return jet;
}

std::pair<double, WeightGradient> loss_weight_gradient(const LossEvaluator& loss, const Network& network) {
    JetSession session(network);
    const double value = loss(session);
    if (!std::isfinite(value)) throw DivergenceError("loss evaluated to a non-finite value");
    return {value, session.backward()};
}

}  // namespace sapinn
