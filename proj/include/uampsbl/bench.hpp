#pragma once

#include "uampsbl/model.hpp"
#include "uampsbl/sbl.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uampsbl {

/// Solver names accepted in a configuration.
const std::vector<std::string>& known_solvers();

/// Parameters of a sweep. Parsed from a flat key = value file whose first
/// non-comment line is `uampsbl-config v1`:
///
///     matrix.kind       iid_gaussian | ill_conditioned | correlated | nonzero_mean | low_rank
///     matrix.rows       M (160)
///     matrix.cols       N (200)
///     matrix.kappa / matrix.c / matrix.mu / matrix.rank_ratio
///     sweep.param       kappa | c | mu | rank_ratio | snr_db | rho
///     sweep.values      comma separated list
///     signal.rho        sparsity rate (0.1)
///     signal.L          measurement vectors (1)
///     signal.alpha      AR(1) coefficient across columns (0)
///     snr_db            (60)
///     trials            K (1)
///     solvers           comma separated subset of known_solvers()
///     stop.delta_x      (1e-8)
///     stop.t_max        (300)
///     epsilon0          initial shape (0.001)
///     seed              master seed (1)
///     output.path       CSV path, empty for stdout
///     output.runtime    true | false; false writes NA in the runtime column
///     threads           worker threads (1; 0 for hardware concurrency)
///
/// `#` starts a comment. Unknown keys are errors.
struct ExperimentConfig {
    MatrixSpec matrix{};
    std::string sweep_param = "kappa";
    std::vector<double> sweep_values{1.0};
    SignalSpec signal{};
    double snr_db = 60.0;
    std::size_t trials = 1;
    std::vector<std::string> solvers{"uamp_sbl"};
    StopCriteria stop{};
    double epsilon0 = 0.001;
    std::uint64_t seed = 1;
    std::string output_path;
    bool record_runtime = true;
    unsigned threads = 1;

    void validate() const;
    /// Matrix and signal specs with sweep value `v` substituted.
    void apply_sweep(double v, MatrixSpec& m, SignalSpec& s, double& snr_db) const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

struct TrialRecord {
    std::size_t sweep_index = 0;
    double sweep_value = 0.0;
    std::size_t trial = 0;
    std::string solver;
    std::optional<double> nmse_db;
    std::optional<double> oracle_gap_db; ///< nmse_db minus the oracle's nmse_db
    std::optional<bool> support_recovered;
    std::optional<std::size_t> iterations;
    std::optional<double> runtime_s;
    bool converged = false;
    std::optional<double> epsilon_final;
    std::string error; ///< empty unless the solver threw something other than divergence
};

struct SolverSettings {
    StopCriteria stop{};
    double epsilon0 = 0.001;
    double alpha = 0.0; ///< temporal coefficient for uamp_tsbl
};

struct SolverOutcome {
    Matrix x;
    std::size_t iterations = 0;
    bool converged = false;
    double runtime_s = 0.0;
    std::optional<double> epsilon_final;
    bool has_iterations = true;
};

/// Runs one named solver on an instance. SMV solvers are applied column by
/// column when the instance has several measurement vectors. Runtime includes
/// the SVD for the UAMP-based solvers. A DivergenceError yields the last
/// finite estimate with converged = false.
SolverOutcome run_solver(const std::string& solver, const ProblemInstance& inst,
                         const SolverSettings& settings);

/// One row per (sweep value, trial, solver), ordered by sweep index, trial,
/// then the configured solver order. The result does not depend on `threads`.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

void write_csv(std::ostream& os, const std::vector<TrialRecord>& rows, const ExperimentConfig& config);

} // namespace uampsbl
