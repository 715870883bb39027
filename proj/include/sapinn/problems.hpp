#pragma once

#include "sapinn/network.hpp"
#include "sapinn/partial.hpp"
#include "sapinn/sens_real.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sapinn {

enum class ConditionKind { interior, initial, dirichlet, neumann, hard };

std::string_view to_string(ConditionKind kind);
ConditionKind condition_kind_from_string(std::string_view name);

/// A physical/material parameter. Parameters with `input == true` are network
/// inputs (parameters of interest); the rest are fixed constants.
struct Param {
    std::string name;
    double nominal = 0.0;
    bool sensitive = false;
    double lo = 0.0;  // sweep / parametric range
    double hi = 0.0;
    bool input = false;
    double input_scale = 1.0;
};

struct ParamVector {
    std::vector<Param> entries;

    int size() const { return static_cast<int>(entries.size()); }
    const Param& operator[](int i) const { return entries[static_cast<std::size_t>(i)]; }
    Param& operator[](int i) { return entries[static_cast<std::size_t>(i)]; }
    /// Throws std::out_of_range for unknown names.
    int index(std::string_view name) const;
    std::vector<int> inputs() const;
    std::vector<int> sensitive() const;
    /// Nominals strictly inside declared ranges; at least one sensitive input when `sa_mode`.
    void validate(bool sa_mode) const;
};

/// Axis-aligned box over space-time coordinates (spatial dims, then time).
/// Degenerate axes (lo == hi) pin a coordinate, e.g. a wall or t = 0.
struct Region {
    std::vector<double> lo;
    std::vector<double> hi;

    int dims() const { return static_cast<int>(lo.size()); }
    std::vector<int> free_axes() const;
    bool contains(std::span<const double> coords, double tol = 1e-12) const;
};

struct OutputPartial {
    int output = 0;
    Partial partial;
};

/// Read access to the jet entries a residual declared in `uses`.
class JetReader {
public:
    JetReader(std::span<const OutputPartial> uses, std::span<const SensReal> values)
        : uses_(uses), values_(values) {}

    /// Throws std::out_of_range for an undeclared entry.
    const SensReal& operator()(int output, const Partial& partial = {}) const;

private:
    std::span<const OutputPartial> uses_;
    std::span<const SensReal> values_;
};

struct ResidualInputs {
    const JetReader& u;
    std::span<const SensReal> params;  // ParamVector order
    std::span<const double> point;     // full input coordinates
};

using ResidualFn = std::function<void(const ResidualInputs&, std::span<SensReal>)>;

/// One equation or condition of a problem, enforced at points of `region`.
/// Boundary kinds are the BoundarySpec of the problem.
struct Condition {
    std::string name;
    ConditionKind kind = ConditionKind::interior;
    Region region;
    int applies_to = -1;  // output index for boundary data, -1 for the PDE
    std::vector<OutputPartial> uses;
    int residual_count = 1;
    ResidualFn residual;
    int default_count = 0;
};
using BoundarySpec = Condition;

enum class SamplingStrategy { equispaced, latin_hypercube, adaptive_residual };

std::string_view to_string(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_string(std::string_view name);

struct ProblemSpec {
    std::string name;
    std::vector<std::string> space_names;
    bool time_dependent = false;
    Region domain;  // spatial axes, then time
    ParamVector params;
    int output_dim = 1;
    std::vector<std::string> output_names;
    std::vector<Condition> conditions;
    std::string wrapper;  // empty when boundary data is penalized
    SamplingStrategy default_strategy = SamplingStrategy::latin_hypercube;

    int spatial_dim() const { return static_cast<int>(space_names.size()); }
    int space_time_dim() const { return spatial_dim() + (time_dependent ? 1 : 0); }
    int input_dim() const;
    /// Network input slot of parameter `param_index`; throws if it is not an input.
    int param_slot(int param_index) const;
    int time_slot() const { return spatial_dim(); }
    std::vector<InputSlot> input_layout() const;
    NetworkSpec network_spec(int hidden_layers = 5, int hidden_width = 20, std::uint64_t seed = 0) const;
    /// Input coordinates of a space-time point with parameters at nominal.
    std::vector<double> input_point(std::span<const double> space_time) const;
    int condition_index(std::string_view name) const;
};

struct AdvDiffOptions {
    double eps = 0.1;
    double eps_lo = 0.05;
    double eps_hi = 0.15;
};

struct Poisson9Options {
    double k_nominal = 1.0;
    double k_lo = 0.5;
    double k_hi = 1.5;
    /// Parameters of interest flagged for sensitivity: the first `sensitive_count` of k1..k9.
    int sensitive_count = 9;
};

/// Scaling of the interior pressure equation of the two-phase problems.
/// `flux`: d/dx(-(k/(phi mu)) p_x) expanded; `scaled`: the same expression times (mu/mu2)^2;
/// `balanced`: times mu, i.e. -(k/phi) (p_xx - p_x (log mu)_x), of unit size on both sides of the front.
enum class PressureForm { flux, scaled, balanced };

struct TwoPhase1dOptions {
    double k = 1.0;
    double k_lo = 0.5;
    double k_hi = 2.0;
    double mu1 = 1e-5;
    double mu2 = 1.0;
    double p_in = 1.0;
    double p_out = 0.0;
    double length = 1.0;
    double phi = 1.0;
    double horizon = 0.5;
    double corner_gap = 0.01;  // initial-condition points start at x = corner_gap
    /// Inlet points start at this time. The front moves as sqrt(2 k dp t / (phi mu2)), so
    /// the time it needs to cross `corner_gap` is tiny; a gap of `corner_gap` in t would
    /// leave a band of width sqrt(2 * 0.01) = 0.14 behind the front unconstrained.
    double inlet_time_gap = 5e-5;
    PressureForm pressure_form = PressureForm::scaled;
    double fraction_smoothing = 0.02;  // soft-clamp width of c in the viscosity blend; 0 = hard clamp
};

struct TwoPhase2dOptions {
    double k = 100.0;
    double k_lo = 80.0;
    double k_hi = 120.0;
    double k_input_scale = 0.01;
    double k_bulk = 1.0;
    double mu1 = 1e-5;
    double mu2 = 1.0;
    double phi = 1.0;
    double v_in = 1.0;
    double p_out = 0.0;
    double inlet_height = 0.25;
    double strip_height = 0.05;
    double strip_transition = 0.01;  // half-width of the smoothed strip edge; 0 = sharp
    double horizon = 0.5;
    double corner_gap = 0.01;  // initial-condition points start at x = corner_gap
    double inlet_time_gap = 5e-5;  // see TwoPhase1dOptions
    PressureForm pressure_form = PressureForm::scaled;
    double fraction_smoothing = 0.02;
};

ProblemSpec make_adv_diff(const AdvDiffOptions& options = {});
ProblemSpec make_poisson9(const Poisson9Options& options = {});
ProblemSpec make_twophase1d(const TwoPhase1dOptions& options = {});
ProblemSpec make_twophase2d(const TwoPhase2dOptions& options = {});

/// Index 0..8 of the 1/3 x 1/3 cell containing (x, y), row-major from the top-left.
int poisson9_cell(double x, double y);

/// Viscosity blend c mu2 + (1 - c) mu1 with c clamped to [0, 1]. A positive
/// `smoothing` w rounds the clamp over [-w, w] and [1 - w, 1 + w] (C2), which
/// keeps the loss continuous where c crosses 0 or 1.
SensReal blended_viscosity(const SensReal& c, double mu1, double mu2, double smoothing = 0.0);

enum class StripRegion { strip, bulk };
StripRegion twophase2d_region(double y, const TwoPhase2dOptions& options);
/// Strip weight in [0, 1]: 1 inside the strip, 0 in the bulk, smooth across the edge.
double twophase2d_strip_weight(double y, const TwoPhase2dOptions& options);
double twophase2d_strip_weight_dy(double y, const TwoPhase2dOptions& options);
double twophase2d_permeability(double y, double k, const TwoPhase2dOptions& options);

struct PointBlock {
    int condition = 0;
    Eigen::MatrixXd points;  // input_dim x n
};

/// Collocation points grouped by condition.
struct CollocationSet {
    std::vector<PointBlock> blocks;
    bool parametric = false;

    int count(const ProblemSpec& problem, ConditionKind kind) const;
    int total() const;
};

/// Per-condition counts. Keys are condition names or kind names
/// ("interior", "initial", ...); a condition name wins over its kind.
struct SampleCounts {
    std::map<std::string, int> counts;
    int count_for(const Condition& condition) const;
};

/// Deterministic collocation sampling. Parameter coordinates sit at nominal
/// unless `parametric`, in which case they are drawn over the declared ranges.
/// adaptive_residual needs a network: it draws `pool_factor` times more Latin
/// hypercube candidates for each interior condition and keeps those with the
/// largest residual norm.
/// Throws std::invalid_argument for adaptive_residual without a network.
CollocationSet sample(const ProblemSpec& problem, SamplingStrategy strategy, const SampleCounts& counts,
                      std::uint64_t seed, bool parametric = false, const Network* network = nullptr,
                      int pool_factor = 10);

/// One residual-driven refinement round: for every interior block, add the
/// `add` points of a Latin hypercube candidate pool of size `pool_factor * add`
/// with the largest residual norm under `network`.
void refine_adaptive(const ProblemSpec& problem, const Network& network, CollocationSet& points, int add,
                     int pool_factor, std::uint64_t seed);

/// Latin hypercube points in the unit cube [0,1)^dims, one per stratum on every axis.
Eigen::MatrixXd latin_hypercube(int dims, int count, std::uint64_t seed);

}  // namespace sapinn
