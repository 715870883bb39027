#include "sapinn/oracles.hpp"

#include "sapinn/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace sapinn {

std::size_t GridField::size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
}

std::size_t GridField::flat_index(std::span<const std::size_t> idx) const {
    if (idx.size() != axes.size()) throw std::invalid_argument("grid index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes.size(); ++d) {
        if (idx[d] >= axes[d].size()) throw std::out_of_range("grid index out of range");
        flat = flat * axes[d].size() + idx[d];
    }
    return flat;
}

void GridField::validate() const {
    if (axis_names.size() != axes.size()) throw std::invalid_argument("grid: one name per axis");
    for (const auto& a : axes) {
        if (a.empty()) throw std::invalid_argument("grid: empty axis");
        if (!std::is_sorted(a.begin(), a.end())) throw std::invalid_argument("grid: axis not increasing");
    }
    if (static_cast<std::size_t>(values.size()) != size()) throw std::invalid_argument("grid: value count mismatch");
    if (!values.allFinite()) throw std::invalid_argument("grid: non-finite values");
}

void GridField::write_csv(std::ostream& out) const {
    for (const auto& n : axis_names) out << n << ',';
    out << "value\n" << std::setprecision(17);
    std::vector<std::size_t> idx(axes.size(), 0);
    for (Eigen::Index flat = 0; flat < values.size(); ++flat) {
        for (std::size_t d = 0; d < axes.size(); ++d) out << axes[d][idx[d]] << ',';
        out << values[flat] << '\n';
        for (std::size_t d = axes.size(); d-- > 0;) {
            if (++idx[d] < axes[d].size()) break;
            idx[d] = 0;
        }
    }
}

GridField operator-(const GridField& a, const GridField& b) {
    if (a.axes != b.axes) throw std::invalid_argument("grid fields live on different grids");
    GridField d = a;
    d.values -= b.values;
    return d;
}

std::pair<double, double> adv_diff_exact(double x, double eps) {
    if (!(eps >= kAdvDiffEpsFloor)) throw std::invalid_argument("adv_diff_exact: eps below the stability floor 0.02");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("adv_diff_exact: x outside [0, 1]");
    // u = x + 1 - w(0) + w(x), w(x) = e^{(x-1)/eps} / (1 - e^{-1/eps})
    const double q = std::exp(-1.0 / eps);
    const double D = -std::expm1(-1.0 / eps);
    const double w = std::exp((x - 1.0) / eps) / D;
    const double w0 = q / D;
    const double e2 = eps * eps;
    const double dw = w / e2 * (1.0 - x + q / D);
    const double dw0 = q / e2 / (D * D);
    return {x + 1.0 - w0 + w, dw - dw0};
}

GridField poisson9_fd_solve(std::span<const double> k, int grid_n, InterfaceScheme scheme) {
    if (k.size() != 9) throw std::invalid_argument("poisson9_fd_solve: nine diffusivities expected");
    for (double v : k) {
        if (!(v > 0.0)) throw std::invalid_argument("poisson9_fd_solve: diffusivities must be positive");
    }
    if (grid_n < 31 || grid_n % 2 == 0) {
        throw std::invalid_argument("poisson9_fd_solve: grid_n must be odd and >= 31");
    }
    const int n = grid_n;
    const int m = n - 2;  // interior nodes per side
    const double h = 1.0 / (n - 1);
    // Diffusivity of cell column cx, row cy (both counted from the origin).
    const auto kc = [&](int cx, int cy) {
        return k[static_cast<std::size_t>(poisson9_cell((cx + 0.5) / 3.0, (cy + 0.5) / 3.0))];
    };
    // Lengths of [a, b] inside each third of the unit interval.
    const auto thirds = [](double a, double b) {
        std::array<double, 3> len{};
        for (int c = 0; c < 3; ++c) len[static_cast<std::size_t>(c)] = std::max(0.0, std::min(b, (c + 1) / 3.0) - std::max(a, c / 3.0));
        return len;
    };
    const auto id = [m](int i, int j) { return (i - 1) * m + (j - 1); };

    // Finite volumes around each node: the strong form integrates 1/k over the
    // control volume; the flux form uses, per tangential strip, the series
    // (harmonic) diffusivity along the node-to-node segment. Both are exact for
    // layered k, which keeps second order with interfaces anywhere.
    const auto face = [&](double x0, double x1, double y0, double y1, bool along_x) {
        const auto nl = along_x ? thirds(x0, x1) : thirds(y0, y1);
        const auto tl = along_x ? thirds(y0, y1) : thirds(x0, x1);
        double c = 0.0;
        for (int t = 0; t < 3; ++t) {
            if (tl[static_cast<std::size_t>(t)] == 0.0) continue;
            double resist = 0.0;
            for (int q = 0; q < 3; ++q) {
                const double kk = along_x ? kc(q, t) : kc(t, q);
                resist += nl[static_cast<std::size_t>(q)] / kk;
            }
            c += tl[static_cast<std::size_t>(t)] * h / resist;
        }
        return c / h;
    };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(5 * m * m));
    Eigen::VectorXd rhs(m * m);
    constexpr int di[4] = {1, -1, 0, 0};
    constexpr int dj[4] = {0, 0, 1, -1};
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= m; ++j) {
            const int row = id(i, j);
            const double x = i * h, y = j * h;
            double diag = 0.0;
            for (int f = 0; f < 4; ++f) {
                const int ni = i + di[f], nj = j + dj[f];
                double c = 1.0;
                if (scheme == InterfaceScheme::harmonic_flux) {
                    const double xn = ni * h, yn = nj * h;
                    c = di[f] != 0 ? face(std::min(x, xn), std::max(x, xn), y - 0.5 * h, y + 0.5 * h, true)
                                   : face(x - 0.5 * h, x + 0.5 * h, std::min(y, yn), std::max(y, yn), false);
                }
                diag += c;
                if (ni >= 1 && ni <= m && nj >= 1 && nj <= m) trip.emplace_back(row, id(ni, nj), -c / (h * h));
            }
            trip.emplace_back(row, row, diag / (h * h));
            if (scheme == InterfaceScheme::strong) {
                const auto lx = thirds(x - 0.5 * h, x + 0.5 * h), ly = thirds(y - 0.5 * h, y + 0.5 * h);
                double avg = 0.0;
                for (int cx = 0; cx < 3; ++cx)
                    for (int cy = 0; cy < 3; ++cy)
                        avg += lx[static_cast<std::size_t>(cx)] * ly[static_cast<std::size_t>(cy)] / kc(cx, cy);
                rhs[row] = avg / (h * h);
            } else {
                rhs[row] = 1.0;
            }
        }
    }
    Eigen::SparseMatrix<double> A(m * m, m * m);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    if (solver.info() != Eigen::Success) throw SolverError("poisson9_fd_solve: factorization failed");
    const Eigen::VectorXd u = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !u.allFinite()) throw SolverError("poisson9_fd_solve: solve failed");

    GridField g;
    g.axis_names = {"x", "y"};
    std::vector<double> axis(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) axis[static_cast<std::size_t>(i)] = i * h;
    g.axes = {axis, axis};
    g.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * n);
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) g.values[static_cast<Eigen::Index>(i) * n + j] = u[id(i, j)];
    return g;
}

SensitivityEstimate fd_param_sensitivity(const ParamSolver& solver, std::span<const double> params, int target,
                                         std::string name, double h) {
    if (target < 0 || target >= static_cast<int>(params.size())) {
        throw std::invalid_argument("fd_param_sensitivity: target out of range");
    }
    const double mu = params[static_cast<std::size_t>(target)];
    if (h <= 0.0) h = 0.01 * std::abs(mu);
    if (!(h > 0.0)) throw std::invalid_argument("fd_param_sensitivity: step must be positive");
    std::vector<double> p(params.begin(), params.end());
    p[static_cast<std::size_t>(target)] = mu + h;
    const GridField plus = solver(p);
    p[static_cast<std::size_t>(target)] = mu - h;
    const GridField minus = solver(p);
    GridField d = plus - minus;
    d.values /= 2.0 * h;
    return SensitivityEstimate{std::move(name), h, std::move(d)};
}

FrontEstimate twophase1d_front(double t, double k, double x_star, const TwoPhase1dOptions& o) {
    if (!(t >= 0.0)) throw std::invalid_argument("twophase1d_front: t must be non-negative");
    if (!(k > 0.0)) throw std::invalid_argument("twophase1d_front: k must be positive");
    const double dp = o.p_in - o.p_out;
    FrontEstimate f;
    f.x_f = std::sqrt(2.0 * k * dp * t / (o.phi * o.mu2));
    f.dx_f_dk = f.x_f / (2.0 * k);
    f.t_fill = o.phi * o.mu2 * x_star * x_star / (2.0 * k * dp);
    return f;
}

TwoPhaseFields twophase1d_fd_solve(const TwoPhase1dOptions& o, const TwoPhaseGrid& grid) {
    if (!(grid.cfl > 0.0 && grid.cfl <= 1.0)) throw std::invalid_argument("twophase1d_fd_solve: CFL must lie in (0, 1]");
    if (grid.nx < 2) throw std::invalid_argument("twophase1d_fd_solve: need at least two cells");
    if (grid.times.empty() || !std::is_sorted(grid.times.begin(), grid.times.end()) || grid.times.front() < 0.0) {
        throw std::invalid_argument("twophase1d_fd_solve: output times must be non-negative and increasing");
    }
    const int nx = grid.nx;
    const double dx = o.length / nx;
    const double dp = o.p_in - o.p_out;
    std::vector<double> c(static_cast<std::size_t>(nx), 0.0), next(c.size());
    const auto mu = [&](double ci) {
        const double cc = std::clamp(ci, 0.0, 1.0);
        return cc * o.mu2 + (1.0 - cc) * o.mu1;
    };
    // Darcy velocity through cells in series: dp = v (phi / k) sum mu_i dx.
    const auto velocity = [&]() {
        double r = 0.0;
        for (double ci : c) r += mu(ci) * dx;
        return o.k * dp / (o.phi * r);
    };

    TwoPhaseFields out;
    std::vector<double> xs(static_cast<std::size_t>(nx));
    for (int i = 0; i < nx; ++i) xs[static_cast<std::size_t>(i)] = (i + 0.5) * dx;
    for (GridField* g : {&out.p, &out.c}) {
        g->axis_names = {"x", "t"};
        g->axes = {xs, grid.times};
        g->values.resize(static_cast<Eigen::Index>(nx) * static_cast<Eigen::Index>(grid.times.size()));
    }
    const std::size_t nt = grid.times.size();
    const auto record = [&](std::size_t ti, double v, double injected) {
        double p = o.p_in;
        for (int i = 0; i < nx; ++i) {
            const double m = mu(c[static_cast<std::size_t>(i)]);
            p -= v * o.phi / o.k * m * 0.5 * dx;  // to the cell centre
            out.p.values[static_cast<Eigen::Index>(i) * static_cast<Eigen::Index>(nt) + static_cast<Eigen::Index>(ti)] = p;
            out.c.values[static_cast<Eigen::Index>(i) * static_cast<Eigen::Index>(nt) + static_cast<Eigen::Index>(ti)] =
                c[static_cast<std::size_t>(i)];
            p -= v * o.phi / o.k * m * 0.5 * dx;
        }
        out.inlet_velocity.push_back(v);
        out.injected.push_back(injected);
    };

    double t = 0.0, injected = 0.0;
    for (std::size_t ti = 0; ti < nt; ++ti) {
        while (t < grid.times[ti]) {
            const double v = velocity();
            double dt = grid.cfl * dx / v;
            if (t + dt >= grid.times[ti]) dt = grid.times[ti] - t;
            const double nu = v * dt / dx;
            if (nu > 1.0 + 1e-12) throw std::invalid_argument("twophase1d_fd_solve: CFL violated");
            for (int i = 0; i < nx; ++i) {
                const double up = i == 0 ? 1.0 : c[static_cast<std::size_t>(i - 1)];
                next[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)] - nu * (c[static_cast<std::size_t>(i)] - up);
            }
            c.swap(next);
            injected += v * dt;
            t += dt;
            if (dt <= 0.0) break;
        }
        record(ti, velocity(), injected);
    }
    return out;
}

double level_crossing(std::span<const double> xs, std::span<const double> values, double level) {
    if (xs.size() != values.size() || xs.empty()) throw std::invalid_argument("level_crossing: size mismatch");
    if (values[0] < level) return xs.front();
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (values[i] < level) {
            const double a = values[i - 1], b = values[i];
            return xs[i - 1] + (xs[i] - xs[i - 1]) * (a - level) / (a - b);
        }
    }
    return xs.back();
}

}  // namespace sapinn
