#include "uampsbl/bench.hpp"
#include "uampsbl/analysis.hpp"
#include "uampsbl/mmv.hpp"
#include "uampsbl/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace uampsbl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": not a number: '" + v + "'");
    return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument(key + ": not a nonnegative integer: '" + v + "'");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": out of range: '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument(key + ": expected true or false, got '" + v + "'");
}

bool is_smv_solver(const std::string& s) {
    return s == "uamp_sbl" || s == "uamp_sbl_v1" || s == "tipping_sbl" ||
           s == "tipping_sbl_auto_eps" || s == "oracle";
}

bool uses_transform(const std::string& s) {
    return s == "uamp_sbl" || s == "uamp_sbl_v1" || s == "uamp_sbl_mmv" || s == "uamp_tsbl";
}

TransformedModel single_column(const TransformedModel& model, Index l) {
    TransformedModel m;
    m.r = model.r.col(l);
    m.Phi = model.Phi;
    m.lambda = model.lambda;
    return m;
}

struct ColumnResult {
    Vector x;
    std::size_t iterations = 0;
    bool converged = false;
    double epsilon = 0.0;
};

ColumnResult solve_column(const std::string& solver, const ProblemInstance& inst,
                          const TransformedModel* model, Index l, const SolverSettings& st) {
    ColumnResult out;
    try {
        if (solver == "uamp_sbl" || solver == "uamp_sbl_v1") {
            SblOptions opt;
            opt.stop = st.stop;
            opt.epsilon0 = st.epsilon0;
            opt.variant = solver == "uamp_sbl" ? UampVariant::v2 : UampVariant::v1;
            const SblRun run = uamp_sbl(single_column(*model, l), opt);
            out.x = run.result.x.col(0);
            out.iterations = run.result.iterations;
            out.converged = run.result.converged;
            out.epsilon = run.result.epsilon_final;
        } else {
            TippingOptions opt;
            opt.stop = st.stop;
            opt.prior.epsilon = st.epsilon0;
            opt.auto_epsilon = solver == "tipping_sbl_auto_eps";
            const RecoveryResult r = tipping_sbl(inst.A, inst.Y.col(l), inst.beta_true, opt);
            out.x = r.x.col(0);
            out.iterations = r.iterations;
            out.converged = r.converged;
            out.epsilon = r.epsilon_final;
        }
    } catch (const DivergenceError& e) {
        out.x = e.last_finite().col(0);
        out.iterations = e.iteration();
        out.converged = false;
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

template <class T, class F>
std::string opt_field(const std::optional<T>& v, F&& f) {
    return v ? f(*v) : std::string("NA");
}

} // namespace

const std::vector<std::string>& known_solvers() {
    static const std::vector<std::string> names{"uamp_sbl",    "uamp_sbl_v1",  "tipping_sbl",
                                                "tipping_sbl_auto_eps", "uamp_sbl_mmv",
                                                "uamp_tsbl",   "oracle"};
    return names;
}

void ExperimentConfig::validate() const {
    static const std::vector<std::string> params{"kappa", "c", "mu", "rank_ratio", "snr_db", "rho"};
    if (std::find(params.begin(), params.end(), sweep_param) == params.end())
        throw std::invalid_argument("unknown sweep.param '" + sweep_param + "'");
    if (sweep_values.empty()) throw std::invalid_argument("sweep.values is empty");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (solvers.empty()) throw std::invalid_argument("no solvers configured");
    for (const auto& s : solvers)
        if (std::find(known_solvers().begin(), known_solvers().end(), s) == known_solvers().end())
            throw std::invalid_argument("unknown solver '" + s + "'");
    if (!(stop.delta_x > 0.0)) throw std::invalid_argument("stop.delta_x must be positive");
    for (double v : sweep_values) {
        MatrixSpec m;
        SignalSpec s;
        double snr = 0.0;
        apply_sweep(v, m, s, snr);
        m.validate();
        s.validate();
        if (std::isnan(snr)) throw std::invalid_argument("snr_db is NaN");
        if (m.cols != s.length) throw std::invalid_argument("signal length must equal matrix.cols");
    }
}

void ExperimentConfig::apply_sweep(double v, MatrixSpec& m, SignalSpec& s, double& snr) const {
    m = matrix;
    s = signal;
    s.length = matrix.cols;
    snr = snr_db;
    if (sweep_param == "kappa") m.kappa = v;
    else if (sweep_param == "c") m.c = v;
    else if (sweep_param == "mu") m.mu = v;
    else if (sweep_param == "rank_ratio") m.rank_ratio = v;
    else if (sweep_param == "snr_db") snr = v;
    else if (sweep_param == "rho") s.sparsity_rate = v;
    else throw std::invalid_argument("unknown sweep.param '" + sweep_param + "'");
}

ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    std::string line;
    bool header = false;
    std::map<std::string, int> seen;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (!header) {
            if (line != "uampsbl-config v1")
                throw std::invalid_argument("config must start with 'uampsbl-config v1'");
            header = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (seen[key]++) throw std::invalid_argument("duplicate key '" + key + "'");

        if (key == "matrix.kind") cfg.matrix.kind = parse_matrix_kind(val);
        else if (key == "matrix.rows") cfg.matrix.rows = static_cast<Index>(parse_unsigned(key, val));
        else if (key == "matrix.cols") cfg.matrix.cols = static_cast<Index>(parse_unsigned(key, val));
        else if (key == "matrix.kappa") cfg.matrix.kappa = parse_double(key, val);
        else if (key == "matrix.c") cfg.matrix.c = parse_double(key, val);
        else if (key == "matrix.mu") cfg.matrix.mu = parse_double(key, val);
        else if (key == "matrix.rank_ratio") cfg.matrix.rank_ratio = parse_double(key, val);
        else if (key == "sweep.param") cfg.sweep_param = val;
        else if (key == "sweep.values") {
            cfg.sweep_values.clear();
            for (const auto& v : split_list(val)) cfg.sweep_values.push_back(parse_double(key, v));
        } else if (key == "signal.rho") cfg.signal.sparsity_rate = parse_double(key, val);
        else if (key == "signal.L") cfg.signal.num_vectors = static_cast<Index>(parse_unsigned(key, val));
        else if (key == "signal.alpha") cfg.signal.temporal_corr = parse_double(key, val);
        else if (key == "snr_db") cfg.snr_db = parse_double(key, val);
        else if (key == "trials") cfg.trials = parse_unsigned(key, val);
        else if (key == "solvers") cfg.solvers = split_list(val);
        else if (key == "stop.delta_x") cfg.stop.delta_x = parse_double(key, val);
        else if (key == "stop.t_max") cfg.stop.t_max = parse_unsigned(key, val);
        else if (key == "epsilon0") cfg.epsilon0 = parse_double(key, val);
        else if (key == "seed") cfg.seed = parse_unsigned(key, val);
        else if (key == "output.path") cfg.output_path = val;
        else if (key == "output.runtime") cfg.record_runtime = parse_bool(key, val);
        else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_unsigned(key, val));
        else throw std::invalid_argument("unknown key '" + key + "'");
    }
    if (!header) throw std::invalid_argument("empty config");
    cfg.signal.length = cfg.matrix.cols;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    return parse_config(is);
}

SolverOutcome run_solver(const std::string& solver, const ProblemInstance& inst,
                         const SolverSettings& settings) {
    const Index n = inst.A.cols(), l_count = inst.Y.cols();
    SolverOutcome out;
    const auto start = Clock::now();

    if (solver == "oracle") {
        out.x.resize(n, l_count);
        for (Index l = 0; l < l_count; ++l)
            out.x.col(l) = support_oracle_mmse(inst.A, inst.Y.col(l), inst.support, inst.beta_true);
        out.converged = true;
        out.has_iterations = false;
        out.runtime_s = seconds_since(start);
        return out;
    }

    std::optional<TransformedModel> model;
    if (uses_transform(solver)) model = unitary_transform(inst.A, inst.Y);

    if (is_smv_solver(solver)) {
        out.x.resize(n, l_count);
        out.converged = true;
        double eps = 0.0;
        for (Index l = 0; l < l_count; ++l) {
            const ColumnResult c = solve_column(solver, inst, model ? &*model : nullptr, l, settings);
            out.x.col(l) = c.x;
            out.iterations = std::max(out.iterations, c.iterations);
            out.converged = out.converged && c.converged;
            eps += c.epsilon;
        }
        out.epsilon_final = eps / static_cast<double>(l_count);
    } else if (solver == "uamp_sbl_mmv" || solver == "uamp_tsbl") {
        MmvOptions opt;
        opt.stop = settings.stop;
        opt.epsilon0 = settings.epsilon0;
        try {
            const RecoveryResult r = solver == "uamp_sbl_mmv" ? uamp_sbl_mmv(*model, opt)
                                                              : uamp_tsbl(*model, settings.alpha, opt);
            out.x = r.x;
            out.iterations = r.iterations;
            out.converged = r.converged;
            out.epsilon_final = r.epsilon_final;
        } catch (const DivergenceError& e) {
            out.x = e.last_finite();
            out.iterations = e.iteration();
            out.converged = false;
        }
    } else {
        throw std::invalid_argument("unknown solver '" + solver + "'");
    }
    out.runtime_s = seconds_since(start);
    return out;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& config) {
    config.validate();
    const std::size_t n_sweep = config.sweep_values.size();
    const std::size_t jobs = n_sweep * config.trials;
    std::vector<std::vector<TrialRecord>> results(jobs);

    auto run_job = [&](std::size_t job) {
        const std::size_t si = job / config.trials, trial = job % config.trials;
        const double value = config.sweep_values[si];
        MatrixSpec mspec;
        SignalSpec sspec;
        double snr = 0.0;
        config.apply_sweep(value, mspec, sspec, snr);
        const ProblemInstance inst =
            make_instance(mspec, sspec, snr, derive_seed(config.seed, {si, trial}));

        SolverSettings settings;
        settings.stop = config.stop;
        settings.epsilon0 = config.epsilon0;
        settings.alpha = sspec.num_vectors > 1 ? sspec.temporal_corr : 0.0;

        std::optional<double> oracle_db;
        try {
            const SolverOutcome o = run_solver("oracle", inst, settings);
            oracle_db = to_db(nmse_mmv(o.x, inst.X));
        } catch (const std::exception&) {
        }

        auto& rows = results[job];
        for (const auto& solver : config.solvers) {
            TrialRecord rec;
            rec.sweep_index = si;
            rec.sweep_value = value;
            rec.trial = trial;
            rec.solver = solver;
            try {
                const SolverOutcome o = run_solver(solver, inst, settings);
                if (o.x.allFinite()) {
                    rec.nmse_db = to_db(nmse_mmv(o.x, inst.X));
                    rec.support_recovered = support_recovered(o.x, inst.support);
                    if (oracle_db) rec.oracle_gap_db = *rec.nmse_db - *oracle_db;
                }
                if (o.has_iterations) rec.iterations = o.iterations;
                rec.runtime_s = o.runtime_s;
                rec.converged = o.converged;
                rec.epsilon_final = o.epsilon_final;
            } catch (const std::exception& e) {
                rec.error = e.what();
                rec.converged = false;
            }
            rows.push_back(std::move(rec));
        }
    };

    unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(jobs, 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs;) run_job(j);
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::vector<TrialRecord> out;
    out.reserve(jobs * config.solvers.size());
    for (auto& rows : results)
        for (auto& r : rows) out.push_back(std::move(r));
    return out;
}

void write_csv(std::ostream& os, const std::vector<TrialRecord>& rows, const ExperimentConfig& config) {
    os << "sweep_param,sweep_value,trial,solver,nmse_db,oracle_gap_db,support_recovery,iterations,"
          "runtime_s,converged,epsilon_final\n";
    for (const auto& r : rows) {
        os << config.sweep_param << ',' << fmt(r.sweep_value) << ',' << r.trial << ',' << r.solver
           << ',' << opt_field(r.nmse_db, fmt) << ',' << opt_field(r.oracle_gap_db, fmt) << ','
           << opt_field(r.support_recovered, [](bool b) { return std::string(b ? "1" : "0"); })
           << ','
           << opt_field(r.iterations, [](std::size_t i) { return std::to_string(i); }) << ','
           << (config.record_runtime ? opt_field(r.runtime_s, fmt) : std::string("NA")) << ','
           << (r.converged ? 1 : 0) << ',' << opt_field(r.epsilon_final, fmt) << '\n';
    }
}

} // namespace uampsbl
