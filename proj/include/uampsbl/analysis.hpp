#pragma once

#include "uampsbl/common.hpp"
#include "uampsbl/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace uampsbl {

// ---------------------------------------------------------------------------
// Scalar precision iteration

enum class FixedPointRegime { stable_fp, diverge, neutral };

std::string to_string(FixedPointRegime regime);

struct FixedPointReport {
    FixedPointRegime regime = FixedPointRegime::diverge;
    std::optional<double> fp_value;      ///< attracting fixed point
    std::optional<double> unstable_root; ///< repelling root, epsilon > 0 only
    double threshold = 1.0;              ///< critical value of beta·y²
};

/// g(γ) = (2ε+1)(β+γ)² / ((βy)² + β + γ), with y_sq = y².
double gamma_map(double gamma, double beta, double y_sq, double epsilon);

/// 1 + 4ε + 4·sqrt(ε² + ε/2); equals 1 at ε = 0.
double fixed_point_threshold(double epsilon);

/// Relative band around the threshold reported as neutral.
inline constexpr double kNeutralTolerance = 1e-12;

FixedPointReport classify_fixed_points(double beta, double y_sq, double epsilon);

/// Ratio of the attracting fixed points with shape ε and with shape 0.
/// Throws std::domain_error at or below the threshold.
double precision_ratio(double beta_y_sq, double epsilon);

// ---------------------------------------------------------------------------
// State evolution

/// Denoiser MSE as a function of the pseudo-observation noise variance.
struct MseTable {
    std::vector<double> tau;
    std::vector<double> mse;
    double rho = 0.1;

    /// Linear interpolation in log-log space; clamps to the end segments
    /// outside the grid and sets *extrapolated when it does.
    double operator()(double tau_q, bool* extrapolated = nullptr) const;

    void save(std::ostream& os) const;
    static MseTable load(std::istream& is);
};

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// 60 points over [1e-10, 1e4].
std::vector<double> default_tau_grid();

struct MseTableOptions {
    std::size_t samples = 100000;
    std::size_t sweeps = 50; ///< precision/shape adaptation passes per batch
    double epsilon0 = 0.001;
    double gamma_cap = 1e11;
    unsigned threads = 0; ///< 0: hardware concurrency
};

/// Monte Carlo table for a Bernoulli-Gaussian signal with unit on-support
/// variance. One common batch of signal and unit noise is drawn from `seed`
/// and rescaled for every grid point.
MseTable build_mse_table(const SignalSpec& signal, const std::vector<double>& tau_grid,
                         std::uint64_t seed, const MseTableOptions& options = {});

struct SePoint {
    double tau;
    double v_x;
};

struct SeTrajectory {
    std::vector<SePoint> points;
    bool converged = false;
    bool extrapolated = false;

    double final_mse() const { return points.empty() ? 0.0 : points.back().v_x; }
};

/// τ = N / Σ λ_m/(v λ_m + 1/β).
double se_psi(const Vector& lambda, double beta, double v_x, Index n);

/// Alternates τ = ψ(v) and v = φ(τ) from v_x_init until |Δv| ≤ 1e-10·v or
/// `iterations` steps. `n` is the signal length.
SeTrajectory se_predict(const Vector& lambda, double beta, const MseTable& table, double v_x_init,
                        std::size_t iterations, Index n);

// ---------------------------------------------------------------------------
// Metrics

/// ‖x̂ − x‖² / ‖x‖². Throws on shape mismatch or zero truth.
double nmse(const Vector& x_hat, const Vector& x_true);

/// Column-averaged NMSE of an N×L estimate.
double nmse_mmv(const Matrix& x_hat, const Matrix& x_true);

inline constexpr double kDbFloor = -300.0;

/// 10·log10(v), floored at kDbFloor.
double to_db(double v);

/// True iff the |support| rows of largest magnitude are exactly `support`.
/// Ties go to the lower index. Rows are compared by Euclidean norm.
bool support_recovered(const Matrix& x_hat, const std::vector<Index>& support);

struct SupportTrial {
    Matrix x_hat;
    std::vector<Index> support;
};

double support_recovery_rate(const std::vector<SupportTrial>& trials);

} // namespace uampsbl
