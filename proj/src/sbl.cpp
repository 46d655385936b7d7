#include "uampsbl/sbl.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace uampsbl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_finite(const Vector& v, const char* where, const SblState& st) {
    if (!v.allFinite()) throw DivergenceError(where, st.t + 1, st.x);
}

void require_finite(double v, const char* where, const SblState& st) {
    if (!std::isfinite(v)) throw DivergenceError(where, st.t + 1, st.x);
}

std::size_t cap_precisions(Vector& gamma, double cap) {
    std::size_t hits = 0;
    for (Index n = 0; n < gamma.size(); ++n)
        if (gamma(n) > cap) {
            gamma(n) = cap;
            ++hits;
        }
    return hits;
}

} // namespace

double epsilon_update(const Vector& gamma) {
    if (gamma.size() == 0) throw std::invalid_argument("empty precision vector");
    if (!(gamma.array() > 0.0).all() || !gamma.allFinite())
        throw std::invalid_argument("precisions must be positive and finite");
    // scale by the maximum: constant vectors map to exactly 1 and the gap is 0
    const double ref = gamma.maxCoeff();
    const Eigen::ArrayXd scaled = gamma.array() / ref;
    const double gap = std::log(scaled.mean()) - scaled.log().mean();
    return 0.5 * std::sqrt(std::max(gap, 0.0));
}

SblState initial_sbl_state(const TransformedModel& model, const SblOptions& options) {
    SblState st;
    const Index n = model.cols(), m = model.rows();
    st.x = Vector::Zero(n);
    st.tau_x = 1.0;
    if (options.variant == UampVariant::v1) st.tau_x_elem = Vector::Ones(n);
    st.s = Vector::Zero(m);
    st.gamma = Vector::Ones(n);
    st.beta = 1.0;
    st.epsilon = options.epsilon0;
    return st;
}

void uamp_sbl_sweep(SblState& st, const TransformedModel& model, const SblOptions& options,
                    SblSweepControl control) {
    const Matrix& phi = model.Phi;
    const auto r = model.r.col(0);
    const Index m = phi.rows(), n = phi.cols();
    const bool v1 = options.variant == UampVariant::v1;

    // 1-2
    const Vector tau_p = v1 ? (phi.cwiseAbs2() * st.tau_x_elem).eval() : (st.tau_x * model.lambda).eval();
    const Vector p = phi * st.x - tau_p.cwiseProduct(st.s);
    require_finite(p, "p", st);
    // 3-4, guarded forms so tau_p = 0 is harmless
    const Eigen::ArrayXd denom = 1.0 + st.beta * tau_p.array();
    st.v_h = (tau_p.array() / denom).matrix();
    st.h_hat = ((st.beta * tau_p.array() * r.array() + p.array()) / denom).matrix();
    // 5
    if (control.update_beta) {
        st.beta = static_cast<double>(m) / ((r - st.h_hat).squaredNorm() + st.v_h.sum());
        require_finite(st.beta, "beta", st);
    }
    // 6-7
    const Vector tau_s = (tau_p.array() + 1.0 / st.beta).inverse().matrix();
    st.s = tau_s.cwiseProduct(r - p);
    require_finite(st.s, "s", st);
    const Vector back = phi.transpose() * st.s;

    if (!v1) {
        // 8-11
        const double tau_q = static_cast<double>(n) / model.lambda.dot(tau_s);
        require_finite(tau_q, "tau_q", st);
        const Vector q = st.x + tau_q * back;
        const Eigen::ArrayXd shrink = 1.0 + tau_q * st.gamma.array();
        Vector x_next = (q.array() / shrink).matrix();
        require_finite(x_next, "x", st);
        st.tau_x = tau_q / static_cast<double>(n) * shrink.inverse().sum();
        st.x = std::move(x_next);
        // 12
        if (control.update_gamma) {
            st.gamma = ((2.0 * st.epsilon + 1.0) / (st.x.array().square() + st.tau_x)).matrix();
            st.gamma_cap_hits += cap_precisions(st.gamma, options.gamma_cap);
        }
    } else {
        const Vector tau_q = (phi.transpose().cwiseAbs2() * tau_s).cwiseInverse();
        require_finite(tau_q, "tau_q", st);
        const Vector q = st.x + tau_q.cwiseProduct(back);
        const Eigen::ArrayXd shrink = 1.0 + tau_q.array() * st.gamma.array();
        Vector x_next = (q.array() / shrink).matrix();
        require_finite(x_next, "x", st);
        st.tau_x_elem = (tau_q.array() / shrink).matrix();
        st.tau_x = st.tau_x_elem.mean();
        st.x = std::move(x_next);
        if (control.update_gamma) {
            st.gamma = ((2.0 * st.epsilon + 1.0) /
                        (st.x.array().square() + st.tau_x_elem.array()))
                           .matrix();
            st.gamma_cap_hits += cap_precisions(st.gamma, options.gamma_cap);
        }
    }
    require_finite(st.gamma, "gamma", st);
    // 13
    if (control.update_epsilon && options.auto_epsilon) st.epsilon = epsilon_update(st.gamma);
    ++st.t;
}

SblRun uamp_sbl(const TransformedModel& model, const SblOptions& options) {
    if (!(options.stop.delta_x > 0.0)) throw std::invalid_argument("delta_x must be positive");
    const auto start = Clock::now();
    SblRun run;
    run.state = initial_sbl_state(model, options);
    SblState& st = run.state;
    double change = std::numeric_limits<double>::infinity();
    while (st.t < options.stop.t_max) {
        const Vector prev = st.x;
        uamp_sbl_sweep(st, model, options);
        change = relative_change(st.x, prev);
        if (options.on_iteration) options.on_iteration(st);
        if (change <= options.stop.delta_x) break;
    }
    run.result.x = st.x;
    run.result.iterations = st.t;
    run.result.converged = change <= options.stop.delta_x;
    run.result.epsilon_final = st.epsilon;
    run.result.beta_hat = st.beta;
    run.result.gamma_cap_hits = st.gamma_cap_hits;
    run.result.runtime_s = seconds_since(start);
    return run;
}

RecoveryResult tipping_sbl(const Matrix& A, const Vector& y, double beta,
                           const TippingOptions& options) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("tipping_sbl needs a finite positive noise precision");
    if (options.auto_epsilon && options.prior.eta != 0.0)
        throw std::invalid_argument("automatic shape update assumes eta = 0");
    if (A.rows() != y.size()) throw std::invalid_argument("A and y sizes differ");

    const auto start = Clock::now();
    const Index n = A.cols();
    const Matrix gram = beta * (A.transpose() * A);
    const Vector rhs = beta * (A.transpose() * y);
    const Matrix eye = Matrix::Identity(n, n);

    Vector gamma = Vector::Ones(n);
    Vector x = Vector::Zero(n);
    double epsilon = options.prior.epsilon;
    const double eta = options.prior.eta;

    RecoveryResult out;
    std::size_t t = 0;
    double change = std::numeric_limits<double>::infinity();
    while (t < options.stop.t_max) {
        Matrix system = gram;
        system.diagonal() += gamma;
        Eigen::LLT<Matrix> llt(system);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("SBL system matrix is not positive definite");
        const Vector next = llt.solve(rhs);
        // diag(Z) from the column norms of L⁻¹
        const Matrix l_inv = llt.matrixL().solve(eye);
        const Vector z_diag = l_inv.colwise().squaredNorm().transpose();
        if (!next.allFinite() || !z_diag.allFinite())
            throw DivergenceError("tipping_sbl posterior", t + 1, x);

        change = relative_change(next, x);
        x = next;
        gamma = ((2.0 * epsilon + 1.0) / (2.0 * eta + x.array().square() + z_diag.array())).matrix();
        out.gamma_cap_hits += cap_precisions(gamma, options.gamma_cap);
        if (options.auto_epsilon) epsilon = epsilon_update(gamma);
        ++t;
        if (options.on_iteration) options.on_iteration(t, x, gamma);
        if (change <= options.stop.delta_x) break;
    }
    out.x = x;
    out.iterations = t;
    out.converged = change <= options.stop.delta_x;
    out.epsilon_final = epsilon;
    out.beta_hat = beta;
    out.runtime_s = seconds_since(start);
    return out;
}

Vector support_oracle_mmse(const Matrix& A, const Vector& y, const std::vector<Index>& support,
                           double beta, double signal_var) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(signal_var > 0.0)) throw std::invalid_argument("signal variance must be positive");
    const Index n = A.cols();
    Vector out = Vector::Zero(n);
    if (support.empty()) return out;

    const auto k = static_cast<Index>(support.size());
    Matrix a_s(A.rows(), k);
    for (Index j = 0; j < k; ++j) {
        if (support[j] < 0 || support[j] >= n) throw std::out_of_range("support index");
        a_s.col(j) = A.col(support[j]);
    }
    Vector est;
    if (std::isinf(beta)) {
        est = a_s.colPivHouseholderQr().solve(y);
    } else {
        // (I/(v·β) + A_SᵀA_S) x = A_Sᵀy, the LMMSE system divided by β
        Matrix system = a_s.transpose() * a_s;
        system.diagonal().array() += 1.0 / (signal_var * beta);
        est = system.llt().solve(a_s.transpose() * y);
    }
    for (Index j = 0; j < k; ++j) out(support[j]) = est(j);
    return out;
}

} // namespace uampsbl
