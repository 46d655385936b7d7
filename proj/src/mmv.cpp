#include "uampsbl/mmv.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace uampsbl {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

MmvState initial_mmv_state(const TransformedModel& model, const MmvOptions& options) {
    const Index n = model.cols(), m = model.rows(), l = model.num_vectors();
    if (l < 1) throw std::invalid_argument("model has no measurement vectors");
    MmvState st;
    st.x = Matrix::Zero(n, l);
    st.tau_x = Vector::Ones(l);
    st.s = Matrix::Zero(m, l);
    st.q = Matrix::Zero(n, l);
    st.tau_q = Vector::Ones(l);
    st.gamma = Vector::Ones(n);
    st.beta = 1.0;
    st.epsilon = options.epsilon0;
    return st;
}

void require_finite(const Matrix& v, const char* where, const MmvState& st, const Matrix& last) {
    if (!v.allFinite()) throw DivergenceError(where, st.t + 1, last);
}

/// Output-side half of the per-column block: messages for h, then the pooled
/// noise-precision update. Returns tau_p per column (M×L) for the input side.
Matrix output_side(MmvState& st, const TransformedModel& model, Matrix& p) {
    const Index m = model.rows(), l_count = model.num_vectors();
    Matrix tau_p(m, l_count);
    p.resize(m, l_count);
    double residual = 0.0;
    for (Index l = 0; l < l_count; ++l) {
        tau_p.col(l) = st.tau_x(l) * model.lambda;
        p.col(l) = model.Phi * st.x.col(l) - tau_p.col(l).cwiseProduct(st.s.col(l));
        const Eigen::ArrayXd denom = 1.0 + st.beta * tau_p.col(l).array();
        const Vector v_h = (tau_p.col(l).array() / denom).matrix();
        const Vector h_hat =
            ((st.beta * tau_p.col(l).array() * model.r.col(l).array() + p.col(l).array()) / denom)
                .matrix();
        residual += (model.r.col(l) - h_hat).squaredNorm() + v_h.sum();
    }
    require_finite(p, "p", st, st.x);
    st.beta = static_cast<double>(l_count * m) / residual;
    if (!std::isfinite(st.beta)) throw DivergenceError("beta", st.t + 1, st.x);
    return tau_p;
}

/// s and the scalar-variance pseudo-observation q for every column.
void input_side(MmvState& st, const TransformedModel& model, const Matrix& tau_p, const Matrix& p) {
    const Index n = model.cols(), l_count = model.num_vectors();
    for (Index l = 0; l < l_count; ++l) {
        const Vector tau_s = (tau_p.col(l).array() + 1.0 / st.beta).inverse().matrix();
        st.s.col(l) = tau_s.cwiseProduct(model.r.col(l) - p.col(l));
        st.tau_q(l) = static_cast<double>(n) / model.lambda.dot(tau_s);
        st.q.col(l) = st.x.col(l) + st.tau_q(l) * (model.Phi.transpose() * st.s.col(l));
    }
    require_finite(st.q, "q", st, st.x);
    if (!st.tau_q.allFinite()) throw DivergenceError("tau_q", st.t + 1, st.x);
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

double mean_relative_change(const Matrix& next, const Matrix& prev) {
    double total = 0.0;
    for (Index l = 0; l < next.cols(); ++l) total += relative_change(next.col(l), prev.col(l));
    return total / static_cast<double>(next.cols());
}

RecoveryResult finish(const MmvState& st, double change, const StopCriteria& stop,
                      Clock::time_point start) {
    RecoveryResult out;
    out.x = st.x;
    out.iterations = st.t;
    out.converged = change <= stop.delta_x;
    out.epsilon_final = st.epsilon;
    out.beta_hat = st.beta;
    out.gamma_cap_hits = st.gamma_cap_hits;
    out.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

} // namespace

RecoveryResult uamp_sbl_mmv(const TransformedModel& model, const MmvOptions& options) {
    if (!(options.stop.delta_x > 0.0)) throw std::invalid_argument("delta_x must be positive");
    const auto start = Clock::now();
    const Index n = model.cols(), l_count = model.num_vectors();
    MmvState st = initial_mmv_state(model, options);

    double change = kInf;
    while (st.t < options.stop.t_max) {
        const Matrix prev = st.x;
        Matrix p;
        const Matrix tau_p = output_side(st, model, p);
        input_side(st, model, tau_p, p);

        Matrix x_next(n, l_count);
        Vector tau_next(l_count);
        for (Index l = 0; l < l_count; ++l) {
            const Eigen::ArrayXd shrink = 1.0 + st.tau_q(l) * st.gamma.array();
            tau_next(l) = st.tau_q(l) / static_cast<double>(n) * shrink.inverse().sum();
            x_next.col(l) = (st.q.col(l).array() / shrink).matrix();
        }
        require_finite(x_next, "x", st, st.x);
        st.x = std::move(x_next);
        st.tau_x = std::move(tau_next);

        Eigen::ArrayXd energy = Eigen::ArrayXd::Zero(n);
        for (Index l = 0; l < l_count; ++l) energy += st.x.col(l).array().square() + st.tau_x(l);
        st.gamma = ((2.0 * st.epsilon + 1.0) / (energy / static_cast<double>(l_count))).matrix();
        st.gamma_cap_hits += cap_precisions(st.gamma, options.gamma_cap);
        require_finite(st.gamma, "gamma", st, st.x);
        if (options.auto_epsilon) st.epsilon = epsilon_update(st.gamma);
        ++st.t;

        change = mean_relative_change(st.x, prev);
        if (options.on_iteration) options.on_iteration(st);
        if (change <= options.stop.delta_x) break;
    }
    return finish(st, change, options.stop, start);
}

TsblMessages TsblMessages::initial(Index n, Index l, double alpha) {
    TsblMessages msg;
    msg.alpha = alpha;
    msg.xi = Matrix::Zero(n, l);
    msg.psi = Matrix::Ones(n, l);
    msg.theta = Matrix::Zero(n, l);
    msg.phi = Matrix::Ones(n, l);
    msg.phi.col(l - 1).setConstant(kInf);
    if (alpha == 0.0) msg.phi.setConstant(kInf);
    return msg;
}

void tsbl_forward(TsblMessages& msg, const Matrix& q, const Vector& tau_q, const Vector& gamma) {
    const Index l_count = q.cols();
    const double a = msg.alpha;
    const Eigen::ArrayXd prior_var = gamma.array().inverse();
    msg.xi.col(0).setZero();
    msg.psi.col(0) = prior_var.matrix();
    for (Index l = 1; l < l_count; ++l) {
        const double tq = tau_q(l - 1);
        const Eigen::ArrayXd psi_prev = msg.psi.col(l - 1).array();
        const Eigen::ArrayXd combined_var = tq * psi_prev / (tq + psi_prev);
        msg.xi.col(l) =
            (a * (q.col(l - 1).array() / tq + msg.xi.col(l - 1).array() / psi_prev) * combined_var)
                .matrix();
        msg.psi.col(l) = (a * a * combined_var + (1.0 - a * a) * prior_var).matrix();
        if (!(msg.psi.col(l).array() > 0.0).all())
            throw std::domain_error("forward message variance is not positive");
    }
}

void tsbl_backward(TsblMessages& msg, const Matrix& q, const Vector& tau_q, const Vector& gamma) {
    const Index l_count = q.cols();
    const double a = msg.alpha;
    msg.theta.col(l_count - 1).setZero();
    msg.phi.col(l_count - 1).setConstant(kInf);
    if (l_count < 2) return;
    if (a == 0.0) {
        msg.theta.setZero();
        msg.phi.setConstant(kInf);
        return;
    }
    const Eigen::ArrayXd transition_var = (1.0 - a * a) * gamma.array().inverse();
    const Index last = l_count - 1;
    msg.theta.col(last - 1) = (q.col(last).array() / a).matrix();
    msg.phi.col(last - 1) = ((tau_q(last) + transition_var) / (a * a)).matrix();
    for (Index l = last - 2; l >= 0; --l) {
        const double tq = tau_q(l + 1);
        const Eigen::ArrayXd phi_next = msg.phi.col(l + 1).array();
        const Eigen::ArrayXd combined_var = tq * phi_next / (tq + phi_next);
        msg.theta.col(l) =
            ((q.col(l + 1).array() / tq + msg.theta.col(l + 1).array() / phi_next) * combined_var / a)
                .matrix();
        msg.phi.col(l) = ((combined_var + transition_var) / (a * a)).matrix();
    }
    if (!(msg.phi.array() > 0.0).all())
        throw std::domain_error("backward message variance is not positive");
}

Vector tsbl_precision_update(const Matrix& x, const Vector& tau_x, double alpha, double epsilon) {
    const Index n = x.rows(), l_count = x.cols();
    const double one_minus = 1.0 - alpha * alpha;
    auto energy = [&](Index l) { return (x.col(l).array().square() + tau_x(l)).eval(); };

    Eigen::ArrayXd later = Eigen::ArrayXd::Zero(n);   // l = 2..L
    Eigen::ArrayXd earlier = Eigen::ArrayXd::Zero(n); // l = 1..L-1
    Eigen::ArrayXd cross = Eigen::ArrayXd::Zero(n);
    for (Index l = 1; l < l_count; ++l) {
        later += energy(l);
        earlier += energy(l - 1);
        cross += x.col(l).array() * x.col(l - 1).array();
    }
    const Eigen::ArrayXd denom = energy(0) + later / one_minus +
                                 alpha * alpha / one_minus * earlier -
                                 2.0 * alpha / one_minus * cross;
    if (!(denom > 0.0).all() || !denom.allFinite())
        throw DivergenceError("precision denominator", 0, x);
    return (static_cast<double>(l_count) * (2.0 * epsilon + 1.0) / denom).matrix();
}

RecoveryResult uamp_tsbl(const TransformedModel& model, double alpha, const MmvOptions& options) {
    if (!(alpha > -1.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (-1,1)");
    if (!(options.stop.delta_x > 0.0)) throw std::invalid_argument("delta_x must be positive");
    const auto start = Clock::now();
    const Index n = model.cols(), l_count = model.num_vectors();
    MmvState st = initial_mmv_state(model, options);
    TsblMessages msg = TsblMessages::initial(n, l_count, alpha);

    double change = kInf;
    while (st.t < options.stop.t_max) {
        const Matrix prev = st.x;
        Matrix p;
        const Matrix tau_p = output_side(st, model, p);
        input_side(st, model, tau_p, p);
        try {
            tsbl_forward(msg, st.q, st.tau_q, st.gamma);
        } catch (const std::domain_error& e) {
            throw DivergenceError(std::string("forward messages: ") + e.what(), st.t + 1, st.x);
        }

        // posterior of each x from three Gaussian messages
        Matrix x_next(n, l_count);
        Vector tau_next(l_count);
        for (Index l = 0; l < l_count; ++l) {
            const Eigen::ArrayXd precision = 1.0 / st.tau_q(l) + msg.phi.col(l).array().inverse() +
                                             msg.psi.col(l).array().inverse();
            const Eigen::ArrayXd var = precision.inverse();
            tau_next(l) = var.mean();
            x_next.col(l) = (var * (st.q.col(l).array() / st.tau_q(l) +
                                    msg.theta.col(l).array() / msg.phi.col(l).array() +
                                    msg.xi.col(l).array() / msg.psi.col(l).array()))
                                .matrix();
        }
        require_finite(x_next, "x", st, st.x);
        st.x = std::move(x_next);
        st.tau_x = std::move(tau_next);

        try {
            tsbl_backward(msg, st.q, st.tau_q, st.gamma);
        } catch (const std::domain_error& e) {
            throw DivergenceError(std::string("backward messages: ") + e.what(), st.t + 1, st.x);
        }

        Vector gamma;
        try {
            gamma = tsbl_precision_update(st.x, st.tau_x, alpha, st.epsilon);
        } catch (const DivergenceError& e) {
            throw DivergenceError(e.where(), st.t + 1, st.x);
        }
        st.gamma = std::move(gamma);
        st.gamma_cap_hits += cap_precisions(st.gamma, options.gamma_cap);
        if (options.auto_epsilon) st.epsilon = epsilon_update(st.gamma);
        ++st.t;

        change = mean_relative_change(st.x, prev);
        if (options.on_iteration) options.on_iteration(st);
        if (change <= options.stop.delta_x) break;
    }
    return finish(st, change, options.stop, start);
}

} // namespace uampsbl
