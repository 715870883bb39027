#pragma once

#include "sapinn/problems.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sapinn {

/// Values on a tensor grid. The first axis varies slowest.
struct GridField {
    std::vector<std::string> axis_names;
    std::vector<std::vector<double>> axes;
    Eigen::VectorXd values;

    std::size_t size() const;
    std::size_t flat_index(std::span<const std::size_t> idx) const;
    double at(std::span<const std::size_t> idx) const { return values[static_cast<Eigen::Index>(flat_index(idx))]; }
    double at(std::size_t i, std::size_t j) const {
        const std::array<std::size_t, 2> idx{i, j};
        return at(idx);
    }
    /// Grid spans, value count and finiteness; throws std::invalid_argument.
    void validate() const;
    /// Header `x[,y][,t],value`, one row per node, 17 significant digits.
    void write_csv(std::ostream& out) const;
};

GridField operator-(const GridField& a, const GridField& b);

/// Closed-form advection-diffusion solution and its eps-derivative.
/// Stable for eps >= 0.02; throws std::invalid_argument below that or for x outside [0, 1].
std::pair<double, double> adv_diff_exact(double x, double eps);
inline constexpr double kAdvDiffEpsFloor = 0.02;

enum class InterfaceScheme {
    /// Laplacian with source -1/k averaged over each control volume: the strong
    /// form with u and its gradient continuous across cell edges.
    strong,
    /// Conservative flux form with series (harmonic) face diffusivities.
    harmonic_flux,
};

/// Five-point finite-difference solve of the nine-cell Poisson problem on a
/// vertex grid of `grid_n` x `grid_n` nodes including the boundary.
/// `grid_n` must be odd (a node sits at the centre) and >= 31.
/// Throws std::invalid_argument on bad input, SolverError on a failed factorization.
GridField poisson9_fd_solve(std::span<const double> k, int grid_n,
                            InterfaceScheme scheme = InterfaceScheme::strong);

struct SensitivityEstimate {
    std::string param;
    double h = 0.0;
    GridField field;
};

using ParamSolver = std::function<GridField(std::span<const double> params)>;

/// Central difference (solve(mu + h) - solve(mu - h)) / 2h in parameter `target`.
/// `h <= 0` selects 0.01 |mu|. Throws std::invalid_argument when the step is not positive.
SensitivityEstimate fd_param_sensitivity(const ParamSolver& solver, std::span<const double> params, int target,
                                         std::string name, double h = 0.0);

/// Sharp-interface front of the 1D injection problem.
struct FrontEstimate {
    double x_f = 0.0;
    double dx_f_dk = 0.0;
    double t_fill = 0.0;  // time at which the front reaches x_star
};

/// x_f = sqrt(2 k dp t / (phi mu2)), with dp = p_in - p_out. Throws std::invalid_argument for t < 0 or k <= 0.
FrontEstimate twophase1d_front(double t, double k, double x_star = 0.5, const TwoPhase1dOptions& options = {});

struct TwoPhaseGrid {
    int nx = 400;
    double cfl = 0.9;
    std::vector<double> times;  // output times, increasing, within [0, horizon]
};

struct TwoPhaseFields {
    GridField p;  // axes x (cell centres), t
    GridField c;
    std::vector<double> inlet_velocity;  // at the output times
    std::vector<double> injected;         // integral of the inlet velocity from 0 to each output time
};

/// Finite-volume reference: per step, the series-resistance pressure solve
/// of 1D Darcy flow with blended viscosity, then first-order upwind transport
/// of c. Throws std::invalid_argument for cfl outside (0, 1] or bad times.
TwoPhaseFields twophase1d_fd_solve(const TwoPhase1dOptions& options, const TwoPhaseGrid& grid);

/// First crossing of `level` going down in x along samples (xs[i], values[i]),
/// linearly interpolated. Returns xs.front() when values start below `level`
/// and xs.back() when they never drop below it.
double level_crossing(std::span<const double> xs, std::span<const double> values, double level = 0.5);

}  // namespace sapinn
