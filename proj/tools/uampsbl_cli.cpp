#include "uampsbl/analysis.hpp"
#include "uampsbl/bench.hpp"
#include "uampsbl/instance_io.hpp"
#include "uampsbl/model.hpp"
#include "uampsbl/random.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

using namespace uampsbl;

namespace {

struct InstanceArgs {
    std::string kind = "iid_gaussian";
    MatrixSpec matrix{};
    double rho = 0.1;
    Index vectors = 1;
    double alpha = 0.0;
    double snr_db = 60.0;
    std::uint64_t seed = 1;

    void attach(CLI::App* app) {
        app->add_option("--kind", kind, "matrix family")
            ->check(CLI::IsMember({"iid_gaussian", "ill_conditioned", "correlated", "nonzero_mean",
                                   "low_rank"}));
        app->add_option("--rows", matrix.rows, "M")->capture_default_str();
        app->add_option("--cols", matrix.cols, "N")->capture_default_str();
        app->add_option("--kappa", matrix.kappa, "condition number");
        app->add_option("--corr", matrix.c, "correlation parameter");
        app->add_option("--mu", matrix.mu, "entry mean");
        app->add_option("--rank-ratio", matrix.rank_ratio, "R/N");
        app->add_option("--rho", rho, "sparsity rate")->capture_default_str();
        app->add_option("--L", vectors, "measurement vectors")->capture_default_str();
        app->add_option("--alpha", alpha, "AR(1) coefficient across columns");
        app->add_option("--snr", snr_db, "SNR in dB")->capture_default_str();
        app->add_option("--seed", seed, "seed")->capture_default_str();
    }

    ProblemInstance make() const {
        MatrixSpec m = matrix;
        m.kind = parse_matrix_kind(kind);
        SignalSpec s;
        s.length = m.cols;
        s.sparsity_rate = rho;
        s.num_vectors = vectors;
        s.temporal_corr = alpha;
        return make_instance(m, s, snr_db, seed);
    }
};

int cmd_solve(const InstanceArgs& ia, const std::string& instance_path, const std::string& solver,
              const SolverSettings& settings) {
    const ProblemInstance inst = instance_path.empty() ? ia.make() : load_instance(instance_path);
    SolverSettings st = settings;
    if (inst.X.cols() > 1 && st.alpha == 0.0) st.alpha = ia.alpha;
    const SolverOutcome out = run_solver(solver, inst, st);
    std::cout << std::setprecision(6) << "solver " << solver << '\n'
              << "nmse_db " << to_db(nmse_mmv(out.x, inst.X)) << '\n'
              << "support_recovered " << (support_recovered(out.x, inst.support) ? 1 : 0) << '\n';
    if (out.has_iterations) std::cout << "iterations " << out.iterations << '\n';
    std::cout << "converged " << (out.converged ? 1 : 0) << '\n'
              << "runtime_s " << out.runtime_s << '\n';
    return 0;
}

int cmd_sweep(const std::string& path, const std::string& output, int threads) {
    ExperimentConfig cfg = load_config(path);
    if (!output.empty()) cfg.output_path = output;
    if (threads >= 0) cfg.threads = static_cast<unsigned>(threads);
    const auto rows = run_experiment(cfg);
    if (cfg.output_path.empty() || cfg.output_path == "-") {
        write_csv(std::cout, rows, cfg);
    } else {
        std::ofstream os(cfg.output_path);
        if (!os) throw std::runtime_error("cannot write " + cfg.output_path);
        write_csv(os, rows, cfg);
        if (!os) throw std::runtime_error("write to " + cfg.output_path + " failed");
        std::cerr << rows.size() << " rows written to " << cfg.output_path << '\n';
    }
    return 0;
}

int cmd_se(const InstanceArgs& ia, const std::string& table_in, const std::string& table_out,
           std::size_t samples, std::size_t iterations, double vx0) {
    const ProblemInstance inst = ia.make();
    if (!std::isfinite(inst.beta_true)) throw std::invalid_argument("se needs a finite SNR");
    MseTable table;
    if (!table_in.empty()) {
        std::ifstream is(table_in);
        if (!is) throw std::runtime_error("cannot open " + table_in);
        table = MseTable::load(is);
    } else {
        SignalSpec s;
        s.sparsity_rate = ia.rho;
        MseTableOptions opt;
        opt.samples = samples;
        table = build_mse_table(s, default_tau_grid(), derive_seed(ia.seed, {7}), opt);
    }
    if (!table_out.empty()) {
        std::ofstream os(table_out);
        if (!os) throw std::runtime_error("cannot write " + table_out);
        table.save(os);
    }
    const TransformedModel model = unitary_transform(inst.A, inst.Y);
    const double v0 = vx0 > 0.0 ? vx0 : ia.rho;
    const SeTrajectory tr = se_predict(model.lambda, inst.beta_true, table, v0, iterations, model.cols());
    std::cout << "iter,tau,v_x,nmse_db\n" << std::setprecision(8);
    for (std::size_t i = 0; i < tr.points.size(); ++i)
        std::cout << i + 1 << ',' << tr.points[i].tau << ',' << tr.points[i].v_x << ','
                  << to_db(tr.points[i].v_x / table.rho) << '\n';
    if (tr.extrapolated) std::cerr << "warning: tau left the table range; values extrapolated\n";
    if (!tr.converged) std::cerr << "warning: trajectory did not settle within " << iterations << " steps\n";
    return 0;
}

int cmd_fixedpoint(double beta, const std::vector<double>& ysq, const std::vector<double>& eps) {
    std::cout << "beta,y_sq,epsilon,regime,fixed_point,unstable_root,threshold\n"
              << std::setprecision(12);
    for (double e : eps)
        for (double y : ysq) {
            const FixedPointReport r = classify_fixed_points(beta, y, e);
            std::cout << beta << ',' << y << ',' << e << ',' << to_string(r.regime) << ',';
            if (r.fp_value) std::cout << *r.fp_value; else std::cout << "NA";
            std::cout << ',';
            if (r.unstable_root) std::cout << *r.unstable_root; else std::cout << "NA";
            std::cout << ',' << r.threshold << '\n';
        }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAMP-SBL sparse recovery toolkit"};
    app.require_subcommand(1);

    InstanceArgs solve_args, se_args, gen_args;
    SolverSettings settings;
    std::string solver = "uamp_sbl", instance_path;
    auto* solve = app.add_subcommand("solve", "run one solver on one instance");
    solve_args.attach(solve);
    solve->add_option("--solver", solver)->check(CLI::IsMember(known_solvers()))->capture_default_str();
    solve->add_option("--instance", instance_path, "load the instance from a file")
        ->check(CLI::ExistingFile);
    solve->add_option("--delta-x", settings.stop.delta_x)->capture_default_str();
    solve->add_option("--t-max", settings.stop.t_max)->capture_default_str();
    solve->add_option("--eps0", settings.epsilon0)->capture_default_str();

    std::string config_path, output;
    int threads = -1;
    auto* sweep = app.add_subcommand("sweep", "run an experiment from a config file");
    sweep->add_option("config", config_path, "config file")->required();
    sweep->add_option("-o,--output", output, "CSV path; overrides output.path");
    sweep->add_option("--threads", threads, "worker threads; overrides the config");

    std::string table_in, table_out;
    std::size_t samples = 100000, se_iters = 100;
    double vx0 = 0.0;
    auto* se = app.add_subcommand("se", "state-evolution trajectory for one instance");
    se_args.attach(se);
    se->add_option("--table", table_in, "MSE table to reuse")->check(CLI::ExistingFile);
    se->add_option("--save-table", table_out, "write the MSE table here");
    se->add_option("--samples", samples, "Monte Carlo samples per table point")->capture_default_str();
    se->add_option("--iterations", se_iters)->capture_default_str();
    se->add_option("--vx0", vx0, "initial v_x (default rho)");

    double beta = 1.0;
    std::vector<double> ysq{2.0}, eps{0.0};
    auto* fp = app.add_subcommand("fixedpoint", "classify fixed points of the scalar precision map");
    fp->add_option("--beta", beta)->capture_default_str();
    fp->add_option("--ysq", ysq, "one or more values of y^2");
    fp->add_option("--eps", eps, "one or more shape values");

    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "write a problem instance to disk");
    gen_args.attach(gen);
    gen->add_option("-o,--output", gen_out, "instance path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(solve_args, instance_path, solver, settings);
        if (sweep->parsed()) return cmd_sweep(config_path, output, threads);
        if (se->parsed()) return cmd_se(se_args, table_in, table_out, samples, se_iters, vx0);
        if (fp->parsed()) return cmd_fixedpoint(beta, ysq, eps);
        if (gen->parsed()) {
            save_instance(gen_out, gen_args.make());
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
