#pragma once

#include "uampsbl/common.hpp"
#include "uampsbl/model.hpp"

#include <vector>

namespace uampsbl {

enum class UampVariant { v1, v2 };

/// Scalar denoiser: posterior mean of x_n given a pseudo-observation
/// q = x_n + Normal(0, tau_q) under the element's prior, and its derivative
/// with respect to q. The derivative defaults to a central difference with
/// step 1e-6·max(1,|q|); override it when an analytic form is available.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual double mean(double q, double tau_q, Index n) const = 0;
    virtual double derivative(double q, double tau_q, Index n) const;

    /// Elementwise application. `tau_q` is either length-1 (broadcast) or length N.
    void apply(const Vector& q, const Vector& tau_q, Vector& mean_out, Vector& deriv_out) const;
};

/// Zero-mean Gaussian prior with per-element variance.
class GaussianDenoiser final : public Denoiser {
public:
    explicit GaussianDenoiser(Vector prior_var) : var_(std::move(prior_var)) {}
    GaussianDenoiser(Index n, double prior_var) : var_(Vector::Constant(n, prior_var)) {}

    double mean(double q, double tau_q, Index n) const override;
    double derivative(double q, double tau_q, Index n) const override;

private:
    Vector var_;
};

/// Bernoulli-Gaussian prior: x = 0 w.p. 1-rho, Normal(0, var) w.p. rho.
class BernoulliGaussianDenoiser final : public Denoiser {
public:
    BernoulliGaussianDenoiser(double rho, double var) : rho_(rho), var_(var) {}

    double mean(double q, double tau_q, Index n) const override;
    double derivative(double q, double tau_q, Index n) const override;

private:
    double activity(double q, double tau_q) const;

    double rho_;
    double var_;
};

struct UampState {
    Vector x;
    Vector tau_x; ///< length N for v1; v2 keeps every entry equal
    Vector s;
    std::size_t t = 0;

    static UampState initial(Index n, Index m, double tau_x0 = 1.0);
};

struct UampIterates {
    Vector tau_p, p, tau_s, tau_q, q;
};

/// One pass over the nine steps of the UAMP recursion on column `column` of
/// the transformed model, with noise variance `noise_var`.
UampIterates uamp_iteration(UampState& state, const TransformedModel& model, double noise_var,
                            const Denoiser& denoiser, UampVariant variant, Index column = 0);

struct UampTraceEntry {
    double change;
    double tau_x_mean;
};

/// Divergence inside run_uamp, with the per-iteration trace up to the failure.
class UampDivergenceError : public DivergenceError {
public:
    UampDivergenceError(const DivergenceError& cause, std::vector<UampTraceEntry> trace)
        : DivergenceError(cause), trace_(std::move(trace)) {}
    const std::vector<UampTraceEntry>& trace() const noexcept { return trace_; }

private:
    std::vector<UampTraceEntry> trace_;
};

struct UampRun {
    UampState state;
    std::vector<UampTraceEntry> trace;
    bool converged = false;
};

/// Iterates from x = 0, tau_x = tau_x0, s = 0 until the relative change
/// reaches stop.delta_x or stop.t_max sweeps. Throws UampDivergenceError.
UampRun run_uamp(const TransformedModel& model, double noise_var, const Denoiser& denoiser,
                 UampVariant variant, const StopCriteria& stop, double tau_x0 = 1.0,
                 Index column = 0);

} // namespace uampsbl
