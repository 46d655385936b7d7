#pragma once

#include "uampsbl/common.hpp"
#include "uampsbl/model.hpp"
#include "uampsbl/uamp.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace uampsbl {

/// Gamma(shape = epsilon, rate = eta) hyperprior on each precision.
struct PriorParams {
    double epsilon = 0.001;
    double eta = 0.0;
};

/// Outcome of any recovery routine. `x` is N×L (L = 1 for SMV).
struct RecoveryResult {
    Matrix x;
    std::size_t iterations = 0;
    bool converged = false;
    std::optional<double> nmse_db;
    double runtime_s = 0.0;
    double epsilon_final = 0.0;
    double beta_hat = 0.0;
    std::size_t gamma_cap_hits = 0;
};

/// Working state of the UAMP-SBL recursion.
struct SblState {
    Vector x;
    double tau_x = 1.0;
    Vector tau_x_elem; ///< per-element variances, only used by the v1 variant
    Vector s;
    Vector gamma;
    double beta = 1.0;
    double epsilon = 0.001;
    std::size_t t = 0;
    Vector v_h;
    Vector h_hat;
    std::size_t gamma_cap_hits = 0;
};

struct SblOptions {
    StopCriteria stop{};
    UampVariant variant = UampVariant::v2;
    double epsilon0 = 0.001;
    bool auto_epsilon = true;
    double gamma_cap = 1e11;
    /// Called after every sweep with the updated state.
    std::function<void(const SblState&)> on_iteration;
};

/// Which hyperparameter updates a sweep performs. Freezing all three turns
/// the sweep into a plain UAMP iteration with a fixed Gaussian prior.
struct SblSweepControl {
    bool update_beta = true;
    bool update_gamma = true;
    bool update_epsilon = true;
};

/// tau_x = 1, x = 0, gamma = 1, beta = 1, s = 0, epsilon = options.epsilon0.
SblState initial_sbl_state(const TransformedModel& model, const SblOptions& options);

/// One sweep of UAMP-SBL on column 0 of `model`: message update, noise
/// precision, prior precisions, shape parameter. Throws DivergenceError on
/// any non-finite quantity.
void uamp_sbl_sweep(SblState& state, const TransformedModel& model, const SblOptions& options,
                    SblSweepControl control = {});

struct SblRun {
    RecoveryResult result;
    SblState state;
};

SblRun uamp_sbl(const TransformedModel& model, const SblOptions& options = {});

/// Shape-parameter rule: ½·sqrt(log(mean γ) − mean(log γ)). Zero exactly for
/// constant input; throws on non-positive entries.
double epsilon_update(const Vector& gamma);

struct TippingOptions {
    PriorParams prior{};
    bool auto_epsilon = false;
    StopCriteria stop{};
    double gamma_cap = 1e11;
    std::function<void(std::size_t t, const Vector& x, const Vector& gamma)> on_iteration;
};

/// Reference SBL with an explicit N×N inverse per iteration and known noise
/// precision beta.
RecoveryResult tipping_sbl(const Matrix& A, const Vector& y, double beta,
                           const TippingOptions& options = {});

/// LMMSE estimate restricted to `support`, zero elsewhere. beta may be +inf.
Vector support_oracle_mmse(const Matrix& A, const Vector& y, const std::vector<Index>& support,
                           double beta, double signal_var = 1.0);

} // namespace uampsbl
