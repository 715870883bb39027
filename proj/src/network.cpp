#include "sapinn/network.hpp"

#include "sapinn/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace sapinn {

using json = nlohmann::json;

namespace {

constexpr int kCheckpointSchema = 1;

std::array<double, 5> activation_derivatives(const std::string& activation, double z) {
    if (activation == "tanh") return tanh_derivatives(z);
    return {z, 1.0, 0.0, 0.0, 0.0};  // identity
}

class UnitSquareBox final : public OutputWrapper {
public:
    std::string id() const override { return "unit_square_box"; }
    std::vector<int> slots() const override { return {0, 1}; }
    void jets(std::span<const double> point, int /*output*/, Jet& envelope, Jet& offset) const override {
        const JetPlan& plan = envelope.plan();
        const Jet x = Jet::variable(plan, 0, point[0]);
        const Jet y = Jet::variable(plan, 1, point[1]);
        envelope = x * y * (x - 1.0) * (y - 1.0);
        offset = Jet::constant(plan, 0.0);
    }
};

class AdvDiffExact final : public OutputWrapper {
public:
    std::string id() const override { return "adv_diff_exact"; }
    std::vector<int> slots() const override { return {0, 1}; }
    void jets(std::span<const double> point, int /*output*/, Jet& envelope, Jet& offset) const override {
        const JetPlan& plan = envelope.plan();
        const Jet x = Jet::variable(plan, 0, point[0]);
        const Jet eps = Jet::variable(plan, 1, point[1]);
        const Jet inv_eps = reciprocal(eps);
        // u = x + 1 - w(0) + w(x), w(x) = exp((x-1)/eps) / (1 - exp(-1/eps))
        const Jet denom = Jet::constant(plan, 1.0) - exp(inv_eps * -1.0);
        const Jet w_x = exp((x - 1.0) * inv_eps) / denom;
        const Jet w_0 = exp(inv_eps * -1.0) / denom;
        envelope = Jet::constant(plan, 0.0);
        offset = x + 1.0 - w_0 + w_x;
    }
};

}  // namespace

std::string_view to_string(SlotKind kind) {
    switch (kind) {
    case SlotKind::space:
        return "space";
    case SlotKind::time:
        return "time";
    case SlotKind::parameter:
        return "parameter";
    }
    return "space";
}

SlotKind slot_kind_from_string(std::string_view name) {
    if (name == "space") return SlotKind::space;
    if (name == "time") return SlotKind::time;
    if (name == "parameter") return SlotKind::parameter;
    throw SchemaError("unknown input slot kind: " + std::string(name));
}

int NetworkSpec::slot(std::string_view name) const {
    for (std::size_t i = 0; i < input_layout.size(); ++i) {
        if (input_layout[i].name == name) return static_cast<int>(i);
    }
    throw std::out_of_range("network has no input named " + std::string(name));
}

void NetworkSpec::validate() const {
    if (input_layout.empty()) throw std::invalid_argument("network spec: empty input layout");
    if (hidden_layers < 1) throw std::invalid_argument("network spec: hidden_layers must be >= 1");
    if (hidden_width < 1) throw std::invalid_argument("network spec: hidden_width must be >= 1");
    if (output_dim < 1) throw std::invalid_argument("network spec: output_dim must be >= 1");
    if (activation != "tanh" && activation != "identity") {
        throw std::invalid_argument("network spec: unsupported activation " + activation);
    }
    for (const auto& s : input_layout) {
        if (!std::isfinite(s.scale) || s.scale == 0.0) {
            throw std::invalid_argument("network spec: input scale must be finite and nonzero");
        }
    }
}

std::array<double, 5> tanh_derivatives(double z) {
    const double s = std::tanh(z);
    const double d1 = 1.0 - s * s;
    const double d2 = -2.0 * s * d1;
    const double d3 = -2.0 * (d1 * d1 + s * d2);
    const double d4 = -6.0 * d1 * d2 - 2.0 * s * d3;
    return {s, d1, d2, d3, d4};
}

std::shared_ptr<const OutputWrapper> make_wrapper(std::string_view id) {
    if (id == "unit_square_box") return std::make_shared<UnitSquareBox>();
    if (id == "adv_diff_exact") return std::make_shared<AdvDiffExact>();
    throw SchemaError("unknown output wrapper: " + std::string(id));
}

Network Network::init(const NetworkSpec& spec) {
    spec.validate();
    Network net;
    net.spec_ = spec;
    std::mt19937_64 rng(spec.init_seed);
    int fan_in = spec.input_dim();
    for (int l = 0; l <= spec.hidden_layers; ++l) {
        const int fan_out = l == spec.hidden_layers ? spec.output_dim : spec.hidden_width;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer{RowMatrix(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = dist(rng);
        }
        net.layers_.push_back(std::move(layer));
        fan_in = fan_out;
    }
    return net;
}

void Network::set_wrapper(std::shared_ptr<const OutputWrapper> wrapper) {
    if (wrapper) {
        for (int s : wrapper->slots()) {
            if (s >= spec_.input_dim()) {
                throw std::invalid_argument("wrapper " + wrapper->id() + " references undeclared input slot");
            }
        }
    }
    wrapper_ = std::move(wrapper);
}

Eigen::Index Network::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

Eigen::VectorXd Network::flat_weights() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index k = 0;
    for (const auto& l : layers_) {
        flat.segment(k, l.weights.size()) = Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
        k += l.weights.size();
        flat.segment(k, l.bias.size()) = l.bias;
        k += l.bias.size();
    }
    return flat;
}

void Network::set_flat_weights(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count()) throw std::invalid_argument("flat weight vector has wrong length");
    Eigen::Index k = 0;
    for (auto& l : layers_) {
        Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) = flat.segment(k, l.weights.size());
        k += l.weights.size();
        l.bias = flat.segment(k, l.bias.size());
        k += l.bias.size();
    }
}

Network Network::with_weights(const Eigen::VectorXd& flat) const {
    Network copy = *this;
    copy.set_flat_weights(flat);
    return copy;
}

std::vector<double> Network::forward(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != spec_.input_dim()) {
        throw std::invalid_argument("forward: point dimension " + std::to_string(point.size()) +
                                    " does not match input layout " + std::to_string(spec_.input_dim()));
    }
    Eigen::VectorXd a(spec_.input_dim());
    for (int i = 0; i < spec_.input_dim(); ++i) a[i] = point[static_cast<std::size_t>(i)] * spec_.input_layout[static_cast<std::size_t>(i)].scale;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = layers_[l].weights * a + layers_[l].bias;
        if (l + 1 < layers_.size()) {
            for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = activation_derivatives(spec_.activation, z[i])[0];
        }
        a = std::move(z);
    }
    std::vector<double> out(a.data(), a.data() + a.size());
    if (wrapper_) {
        const JetPlan value_only(spec_.input_dim(), std::span<const Partial>{});
        Jet env(value_only, 0.0), off(value_only, 0.0);
        for (int o = 0; o < spec_.output_dim; ++o) {
            wrapper_->jets(point, o, env, off);
            out[static_cast<std::size_t>(o)] = env.value() * out[static_cast<std::size_t>(o)] + off.value();
        }
    }
    return out;
}

std::string Network::save() const {
    json spec;
    json layout = json::array();
    for (const auto& s : spec_.input_layout) {
        layout.push_back({{"name", s.name}, {"kind", std::string(to_string(s.kind))}, {"scale", s.scale}});
    }
    spec["input_layout"] = layout;
    spec["hidden_layers"] = spec_.hidden_layers;
    spec["hidden_width"] = spec_.hidden_width;
    spec["output_dim"] = spec_.output_dim;
    spec["activation"] = spec_.activation;
    spec["init_seed"] = spec_.init_seed;

    json shapes = json::array(), weights = json::array(), biases = json::array();
    for (const auto& l : layers_) {
        shapes.push_back({l.weights.rows(), l.weights.cols()});
        weights.push_back(std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size()));
        biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
    }
    json doc;
    doc["schema"] = kCheckpointSchema;
    doc["spec"] = spec;
    doc["shapes"] = shapes;
    doc["weights"] = weights;
    doc["biases"] = biases;
    doc["wrapper"] = wrapper_ ? json(wrapper_->id()) : json(nullptr);
    return doc.dump(1);
}

Network Network::load(std::string_view checkpoint) {
    json doc;
    try {
        doc = json::parse(checkpoint);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.contains("schema") || doc.at("schema").get<int>() != kCheckpointSchema) {
            throw SchemaError("checkpoint schema version mismatch");
        }
        const json& s = doc.at("spec");
        NetworkSpec spec;
        for (const auto& slot : s.at("input_layout")) {
            spec.input_layout.push_back({slot.at("name").get<std::string>(),
                                         slot_kind_from_string(slot.at("kind").get<std::string>()),
                                         slot.at("scale").get<double>()});
        }
        spec.hidden_layers = s.at("hidden_layers").get<int>();
        spec.hidden_width = s.at("hidden_width").get<int>();
        spec.output_dim = s.at("output_dim").get<int>();
        spec.activation = s.at("activation").get<std::string>();
        spec.init_seed = s.at("init_seed").get<std::uint64_t>();
        spec.validate();

        Network net = Network::init(spec);
        const json& weights = doc.at("weights");
        const json& biases = doc.at("biases");
        if (weights.size() != net.layers_.size() || biases.size() != net.layers_.size()) {
            throw SchemaError("checkpoint layer count does not match its spec");
        }
        for (std::size_t l = 0; l < net.layers_.size(); ++l) {
            auto w = weights[l].get<std::vector<double>>();
            auto b = biases[l].get<std::vector<double>>();
            auto& layer = net.layers_[l];
            if (static_cast<Eigen::Index>(w.size()) != layer.weights.size() ||
                static_cast<Eigen::Index>(b.size()) != layer.bias.size()) {
                throw SchemaError("checkpoint layer " + std::to_string(l) + " has inconsistent shape");
            }
            std::copy(w.begin(), w.end(), layer.weights.data());
            std::copy(b.begin(), b.end(), layer.bias.data());
        }
        const json& wrapper = doc.at("wrapper");
        if (!wrapper.is_null()) net.set_wrapper(make_wrapper(wrapper.get<std::string>()));
        return net;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("incompatible checkpoint: ") + e.what());
    }
}

}  // namespace sapinn
