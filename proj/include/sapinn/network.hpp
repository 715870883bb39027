#pragma once

#include "sapinn/jet.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sapinn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class SlotKind { space, time, parameter };

std::string_view to_string(SlotKind kind);
SlotKind slot_kind_from_string(std::string_view name);

/// One network input. `scale` multiplies the raw coordinate before the first
/// layer, so derivatives are always with respect to the raw coordinate.
struct InputSlot {
    std::string name;
    SlotKind kind = SlotKind::space;
    double scale = 1.0;
};

struct NetworkSpec {
    std::vector<InputSlot> input_layout;
    int hidden_layers = 5;
    int hidden_width = 20;
    int output_dim = 1;
    std::string activation = "tanh";
    std::uint64_t init_seed = 0;

    int input_dim() const { return static_cast<int>(input_layout.size()); }
    /// Slot index of the named input; throws std::out_of_range.
    int slot(std::string_view name) const;
    void validate() const;
};

/// tanh(z) and its first four derivatives, from the closed-form recurrences
/// s' = 1 - s^2, s'' = -2 s s', s''' = -2 (s'^2 + s s''), s'''' = -6 s' s'' - 2 s s'''.
std::array<double, 5> tanh_derivatives(double z);

/// Multiplicative/additive envelope applied to the raw network output:
/// wrapped = envelope(point) * raw + offset(point).
class OutputWrapper {
public:
    virtual ~OutputWrapper() = default;
    virtual std::string id() const = 0;
    /// Input slots the envelope reads.
    virtual std::vector<int> slots() const = 0;
    /// Envelope and offset jets of `output` at `point`, laid out by the jets' plan.
    virtual void jets(std::span<const double> point, int output, Jet& envelope, Jet& offset) const = 0;
};

/// Known wrappers: "unit_square_box" (x y (x-1) (y-1) on slots 0 and 1) and
/// "adv_diff_exact" (zero envelope, offset = closed-form advection-diffusion
/// solution in slots x = 0, eps = 1). Throws SchemaError for unknown ids.
std::shared_ptr<const OutputWrapper> make_wrapper(std::string_view id);

struct DenseLayer {
    RowMatrix weights;  // fan_out x fan_in
    Eigen::VectorXd bias;
};

/// Fully-connected tanh network with a linear output layer.
///
/// Canonical flat weight order: layer by layer, row-major weights then bias.
class Network {
public:
    Network() = default;

    /// Glorot-uniform weights, zero biases, fully determined by spec.init_seed.
    static Network init(const NetworkSpec& spec);

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& mutable_layers() { return layers_; }

    const OutputWrapper* wrapper() const { return wrapper_.get(); }
    void set_wrapper(std::shared_ptr<const OutputWrapper> wrapper);

    Eigen::Index parameter_count() const;
    Eigen::VectorXd flat_weights() const;
    void set_flat_weights(const Eigen::VectorXd& flat);
    Network with_weights(const Eigen::VectorXd& flat) const;

    /// Wrapped output at a point given in input-layout order.
    std::vector<double> forward(std::span<const double> point) const;

    /// Checkpoint JSON (schema 1).
    std::string save() const;
    /// Throws SchemaError on malformed input or schema mismatch.
    static Network load(std::string_view checkpoint);

private:
    NetworkSpec spec_;
    std::vector<DenseLayer> layers_;
    std::shared_ptr<const OutputWrapper> wrapper_;
};

inline Network init(const NetworkSpec& spec) { return Network::init(spec); }

}  // namespace sapinn
