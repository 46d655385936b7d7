#include "uampsbl/uamp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uampsbl {

namespace {

constexpr double kRunawayNorm = 1e12;

void check_finite(const Vector& v, const char* line, const UampState& st) {
    if (!v.allFinite()) throw DivergenceError(line, st.t, st.x);
}

double normal_pdf(double x, double var) {
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

} // namespace

double Denoiser::derivative(double q, double tau_q, Index n) const {
    const double h = 1e-6 * std::max(1.0, std::abs(q));
    return (mean(q + h, tau_q, n) - mean(q - h, tau_q, n)) / (2.0 * h);
}

void Denoiser::apply(const Vector& q, const Vector& tau_q, Vector& mean_out,
                     Vector& deriv_out) const {
    const Index n = q.size();
    if (tau_q.size() != 1 && tau_q.size() != n)
        throw std::invalid_argument("tau_q must be scalar or match q");
    mean_out.resize(n);
    deriv_out.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double t = tau_q.size() == 1 ? tau_q(0) : tau_q(i);
        mean_out(i) = mean(q(i), t, i);
        deriv_out(i) = derivative(q(i), t, i);
    }
}

double GaussianDenoiser::mean(double q, double tau_q, Index n) const {
    const double v = var_(n);
    return q * v / (v + tau_q);
}

double GaussianDenoiser::derivative(double, double tau_q, Index n) const {
    const double v = var_(n);
    return v / (v + tau_q);
}

double BernoulliGaussianDenoiser::activity(double q, double tau_q) const {
    // posterior probability that the element is active
    const double on = rho_ * normal_pdf(q, var_ + tau_q);
    const double off = (1.0 - rho_) * normal_pdf(q, tau_q);
    if (on == 0.0 && off == 0.0) {
        // both underflow; compare in the log domain
        const double lon = std::log(rho_) - 0.5 * std::log(var_ + tau_q) - 0.5 * q * q / (var_ + tau_q);
        const double loff = std::log1p(-rho_) - 0.5 * std::log(tau_q) - 0.5 * q * q / tau_q;
        return 1.0 / (1.0 + std::exp(loff - lon));
    }
    return on / (on + off);
}

double BernoulliGaussianDenoiser::mean(double q, double tau_q, Index) const {
    if (rho_ <= 0.0) return 0.0;
    const double gain = var_ / (var_ + tau_q);
    return activity(q, tau_q) * gain * q;
}

double BernoulliGaussianDenoiser::derivative(double q, double tau_q, Index) const {
    if (rho_ <= 0.0) return 0.0;
    const double gain = var_ / (var_ + tau_q);
    const double pi = activity(q, tau_q);
    // d pi / dq = pi (1 - pi) q (1/tau - 1/(var+tau))
    const double dpi = pi * (1.0 - pi) * q * (1.0 / tau_q - 1.0 / (var_ + tau_q));
    return gain * (pi + q * dpi);
}

UampState UampState::initial(Index n, Index m, double tau_x0) {
    if (!(tau_x0 > 0.0)) throw std::invalid_argument("initial tau_x must be positive");
    UampState st;
    st.x = Vector::Zero(n);
    st.tau_x = Vector::Constant(n, tau_x0);
    st.s = Vector::Zero(m);
    return st;
}

UampIterates uamp_iteration(UampState& state, const TransformedModel& model, double noise_var,
                            const Denoiser& denoiser, UampVariant variant, Index column) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("noise variance must be positive");
    const Matrix& phi = model.Phi;
    const Index n = phi.cols();
    const auto r = model.r.col(column);
    UampIterates it;

    // 1
    if (variant == UampVariant::v1)
        it.tau_p = phi.cwiseAbs2() * state.tau_x;
    else
        it.tau_p = state.tau_x.mean() * model.lambda;
    check_finite(it.tau_p, "tau_p", state);
    // 2
    it.p = phi * state.x - it.tau_p.cwiseProduct(state.s);
    check_finite(it.p, "p", state);
    // 3
    it.tau_s = (it.tau_p.array() + noise_var).inverse().matrix();
    // 4
    state.s = it.tau_s.cwiseProduct(r - it.p);
    check_finite(state.s, "s", state);
    // 5
    if (variant == UampVariant::v1)
        it.tau_q = (phi.transpose().cwiseAbs2() * it.tau_s).cwiseInverse();
    else
        it.tau_q = Vector::Constant(1, static_cast<double>(n) / model.lambda.dot(it.tau_s));
    check_finite(it.tau_q, "tau_q", state);
    // 6
    const Vector back = phi.transpose() * state.s;
    if (it.tau_q.size() == 1)
        it.q = state.x + it.tau_q(0) * back;
    else
        it.q = state.x + it.tau_q.cwiseProduct(back);
    check_finite(it.q, "q", state);
    // 7, 8
    Vector mean, deriv;
    denoiser.apply(it.q, it.tau_q, mean, deriv);
    Vector tau_x = it.tau_q.size() == 1 ? (it.tau_q(0) * deriv).eval() : it.tau_q.cwiseProduct(deriv);
    if (variant == UampVariant::v2) tau_x.setConstant(tau_x.mean());
    check_finite(tau_x, "tau_x", state);
    check_finite(mean, "x", state);
    if (mean.norm() > kRunawayNorm) throw DivergenceError("x runaway", state.t, state.x);

    state.tau_x = std::move(tau_x);
    state.x = std::move(mean);
    // 9
    ++state.t;
    return it;
}

UampRun run_uamp(const TransformedModel& model, double noise_var, const Denoiser& denoiser,
                 UampVariant variant, const StopCriteria& stop, double tau_x0, Index column) {
    if (!(stop.delta_x > 0.0)) throw std::invalid_argument("delta_x must be positive");
    UampRun run;
    run.state = UampState::initial(model.cols(), model.rows(), tau_x0);
    while (run.state.t < stop.t_max) {
        const Vector prev = run.state.x;
        try {
            uamp_iteration(run.state, model, noise_var, denoiser, variant, column);
        } catch (const DivergenceError& e) {
            throw UampDivergenceError(e, run.trace);
        }
        const double change = relative_change(run.state.x, prev);
        run.trace.push_back({change, run.state.tau_x.mean()});
        if (change <= stop.delta_x) {
            run.converged = true;
            break;
        }
    }
    return run;
}

} // namespace uampsbl
