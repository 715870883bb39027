// Command-line front end: run, oracle, sweep, timing.
#include "sapinn/errors.hpp"
#include "sapinn/oracles.hpp"
#include "sapinn/runner.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace sapinn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write " + path);
    return file;
}

int cmd_run(const std::string& config_path, const std::string& output_dir, bool quiet) {
    ExperimentConfig cfg = load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    RunOptions opts;
    opts.log = quiet ? nullptr : &std::cerr;
    const RunResult r = run_experiment(cfg, opts);
    std::cout << r.directory.string() << '\n';
    if (!quiet) std::cerr << "status: " << to_string(r.status) << '\n';
    return r.healthy() ? kExitOk : kExitDiverged;
}

struct OracleArgs {
    std::string problem;
    std::string out;
    double eps = 0.1;
    int points = 201;
    int grid = 129;
    std::string scheme = "strong";
    std::vector<double> k;
    std::string sensitivity;
    double step = 0.0;
    int cells = 400;
    std::vector<double> times;
    std::string field = "c";
    double perm = 1.0;
};

int cmd_oracle(const OracleArgs& a) {
    std::ofstream file;
    std::ostream& out = open_out(a.out, file);
    if (a.problem == "adv_diff") {
        out << "x,u,du_deps\n";
        out.precision(17);
        for (int i = 0; i < a.points; ++i) {
            const double x = a.points == 1 ? 0.0 : static_cast<double>(i) / (a.points - 1);
            const auto [u, du] = adv_diff_exact(x, a.eps);
            out << x << ',' << u << ',' << du << '\n';
        }
        return kExitOk;
    }
    if (a.problem == "poisson9") {
        std::vector<double> k = a.k.empty() ? std::vector<double>(9, 1.0) : a.k;
        if (k.size() != 9) throw std::invalid_argument("--k takes nine values");
        const InterfaceScheme scheme = a.scheme == "harmonic_flux" ? InterfaceScheme::harmonic_flux : InterfaceScheme::strong;
        if (a.scheme != "strong" && a.scheme != "harmonic_flux") throw std::invalid_argument("--scheme is strong or harmonic_flux");
        if (a.sensitivity.empty()) {
            poisson9_fd_solve(k, a.grid, scheme).write_csv(out);
            return kExitOk;
        }
        const int target = std::stoi(a.sensitivity.substr(1)) - 1;
        if (a.sensitivity[0] != 'k' || target < 0 || target > 8) throw std::invalid_argument("--sensitivity names k1..k9");
        const int n = a.grid;
        const ParamSolver solver = [n, scheme](std::span<const double> kk) { return poisson9_fd_solve(kk, n, scheme); };
        fd_param_sensitivity(solver, k, target, a.sensitivity, a.step).field.write_csv(out);
        return kExitOk;
    }
    if (a.problem == "twophase1d") {
        TwoPhase1dOptions o;
        o.k = a.perm;
        TwoPhaseGrid g;
        g.nx = a.cells;
        g.times = a.times.empty() ? std::vector<double>{0.0, 0.125, 0.25, 0.375, 0.5} : a.times;
        const TwoPhaseFields f = twophase1d_fd_solve(o, g);
        if (a.field == "p") f.p.write_csv(out);
        else if (a.field == "c") f.c.write_csv(out);
        else if (a.field == "front") {
            out << "t,x_front,x_exact\n";
            out.precision(17);
            const auto& xs = f.c.axes[0];
            for (std::size_t j = 0; j < g.times.size(); ++j) {
                std::vector<double> c(xs.size());
                for (std::size_t i = 0; i < xs.size(); ++i) c[i] = f.c.at(i, j);
                out << g.times[j] << ',' << level_crossing(xs, c) << ',' << twophase1d_front(g.times[j], o.k, 0.5, o).x_f << '\n';
            }
        } else {
            throw std::invalid_argument("--field is c, p or front");
        }
        return kExitOk;
    }
    throw std::invalid_argument("no oracle for problem '" + a.problem + "'");
}

int cmd_sweep(const std::string& checkpoint, const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = load_config(config_path);
    std::ifstream in(checkpoint);
    if (!in) throw SchemaError("cannot read " + checkpoint);
    std::stringstream ss;
    ss << in.rdbuf();
    const Network net = Network::load(ss.str());
    const ProblemSpec p = build_problem(cfg);
    const CollocationSet pts = build_points(cfg, p);
    const std::filesystem::path dir = out_dir.empty() ? resolve_output_dir(cfg) : std::filesystem::path(out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& s : cfg.evaluation.sweeps) {
        const SweepTable t = sweep_loss(net, p, pts, s);
        std::ofstream f(dir / s.file_name());
        t.write_csv(f);
        std::cout << (dir / s.file_name()).string() << '\n';
    }
    return kExitOk;
}

int cmd_timing(const std::string& config_path, const std::string& out) {
    const ExperimentConfig cfg = load_config(config_path);
    const auto rows = timing_study(cfg);
    if (out.empty()) {
        const std::filesystem::path dir = resolve_output_dir(cfg);
        std::filesystem::create_directories(dir);
        std::ofstream f(dir / "timing.csv");
        write_timing_csv(f, rows);
        std::cout << (dir / "timing.csv").string() << '\n';
    } else {
        std::ofstream file;
        write_timing_csv(open_out(out, file), rows);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensitivity-regularized PINN experiments"};
    app.require_subcommand(1);

    std::string config, output_dir, checkpoint, out;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "train and evaluate one experiment, write its bundle");
    run->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--output-dir", output_dir, "bundle directory (overrides the config)");
    run->add_flag("-q,--quiet", quiet, "no progress output");

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "emit reference solutions as CSV");
    oracle->add_option("problem", oa.problem, "adv_diff, poisson9 or twophase1d")->required();
    oracle->add_option("-o,--out", oa.out, "output file (stdout by default)");
    oracle->add_option("--eps", oa.eps, "adv_diff diffusivity");
    oracle->add_option("--points", oa.points, "adv_diff grid points");
    oracle->add_option("--grid", oa.grid, "poisson9 nodes per side (odd, >= 31)");
    oracle->add_option("--scheme", oa.scheme, "poisson9 interface scheme: strong or harmonic_flux");
    oracle->add_option("--k", oa.k, "poisson9 cell diffusivities k1..k9");
    oracle->add_option("--sensitivity", oa.sensitivity, "poisson9: emit du/dk_i by central differences (k1..k9)");
    oracle->add_option("--step", oa.step, "difference step (default 1% of the value)");
    oracle->add_option("--cells", oa.cells, "twophase1d cells");
    oracle->add_option("--times", oa.times, "twophase1d output times");
    oracle->add_option("--field", oa.field, "twophase1d: c, p or front");
    oracle->add_option("--perm", oa.perm, "twophase1d permeability");

    auto* sweep = app.add_subcommand("sweep", "loss_f against parameter values for a saved network");
    sweep->add_option("checkpoint", checkpoint, "checkpoint JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--output-dir", output_dir, "directory for sweep CSVs");

    auto* timing = app.add_subcommand("timing", "SA cost per iteration against the number of sensitivity parameters");
    timing->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    timing->add_option("-o,--out", out, "CSV file (default: <output dir>/timing.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(config, output_dir, quiet);
        if (*oracle) return cmd_oracle(oa);
        if (*sweep) return cmd_sweep(checkpoint, config, output_dir);
        if (*timing) return cmd_timing(config, out);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
