#include "uampsbl/analysis.hpp"
#include "uampsbl/model.hpp"
#include "uampsbl/random.hpp"
#include "uampsbl/sbl.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace uampsbl;

namespace {

ProblemInstance instance(MatrixKind kind, double snr_db, std::uint64_t seed, double c = 0.0) {
    MatrixSpec m;
    m.kind = kind;
    m.c = c;
    SignalSpec s;
    return make_instance(m, s, snr_db, seed);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

} // namespace

TEST_CASE("shape update") {
    CHECK(epsilon_update(Vector::Constant(7, 3.25)) == 0.0);
    CHECK(epsilon_update(Vector::Constant(1, 1e-300)) == 0.0);

    Vector two(2);
    two << 1.0, std::exp(2.0);
    const double expected = 0.5 * std::sqrt(std::log((1.0 + std::exp(2.0)) / 2.0) - 1.0);
    CHECK(epsilon_update(two) == doctest::Approx(expected).epsilon(1e-14));

    // Jensen: never negative, and invariant to a common scale
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> draw(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        Vector g(10);
        for (auto& v : g) v = draw(rng);
        const double e = epsilon_update(g);
        CHECK(e >= 0.0);
        CHECK(epsilon_update(1e6 * g) == doctest::Approx(e).epsilon(1e-9).scale(1e-12));
    }
    CHECK_THROWS_AS(epsilon_update(Vector::Zero(3)), std::invalid_argument);
    CHECK_THROWS_AS(epsilon_update(Vector()), std::invalid_argument);
}

TEST_CASE("guarded output-side update equals the Gaussian product") {
    const ProblemInstance inst = instance(MatrixKind::iid_gaussian, 40.0, 3);
    const TransformedModel model = unitary_transform(inst.A, inst.Y);
    SblOptions opt;
    SblState st = initial_sbl_state(model, opt);
    for (int k = 0; k < 4; ++k) {
        const double beta = st.beta;
        const Vector tau_p = st.tau_x * model.lambda;
        const Vector p = model.Phi * st.x - tau_p.cwiseProduct(st.s);
        uamp_sbl_sweep(st, model, opt, {false, true, true});
        CHECK(st.beta == beta);
        for (Index m = 0; m < model.rows(); ++m) {
            if (!(tau_p(m) > 0.0)) continue;
            const double v = 1.0 / (1.0 / tau_p(m) + beta);
            const double h = v * (beta * model.r(m, 0) + p(m) / tau_p(m));
            CHECK(st.v_h(m) == doctest::Approx(v).epsilon(1e-12));
            CHECK(st.h_hat(m) == doctest::Approx(h).epsilon(1e-12).scale(1e-12));
        }
    }
}

TEST_CASE("frozen sweep is a UAMP iteration with a Gaussian prior") {
    const ProblemInstance inst = instance(MatrixKind::correlated, 50.0, 4, 0.3);
    const TransformedModel model = unitary_transform(inst.A, inst.Y);
    SblOptions opt;
    SblState st = initial_sbl_state(model, opt);
    st.beta = inst.beta_true;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.5, 50.0);
    for (auto& g : st.gamma) g = u(rng);

    UampState us = UampState::initial(model.cols(), model.rows());
    const GaussianDenoiser prior(st.gamma.cwiseInverse());
    for (int k = 0; k < 10; ++k) {
        uamp_sbl_sweep(st, model, opt, {false, false, false});
        uamp_iteration(us, model, 1.0 / inst.beta_true, prior, UampVariant::v2);
        CHECK((st.x - us.x).norm() <= 1e-12 * us.x.norm());
        CHECK(st.tau_x == doctest::Approx(us.tau_x(0)).epsilon(1e-12));
    }
}

TEST_CASE("UAMP-SBL keeps its hyperparameters valid and improves on its first iterate") {
    for (MatrixKind kind : {MatrixKind::iid_gaussian, MatrixKind::correlated, MatrixKind::low_rank}) {
        const ProblemInstance inst = [&] {
            MatrixSpec m;
            m.kind = kind;
            m.c = 0.3;
            m.rank_ratio = 0.6;
            return make_instance(m, SignalSpec{}, 50.0, 17);
        }();
        const TransformedModel model = unitary_transform(inst.A, inst.Y);
        SblOptions opt;
        bool valid = true;
        double first = 0.0;
        opt.on_iteration = [&](const SblState& st) {
            valid = valid && st.beta > 0.0 && (st.gamma.array() > 0.0).all() && st.epsilon >= 0.0;
            if (st.t == 1) first = nmse(st.x, inst.X.col(0));
        };
        const SblRun run = uamp_sbl(model, opt);
        CHECK(valid);
        CHECK(run.result.converged);
        CHECK(nmse(run.result.x.col(0), inst.X.col(0)) <= first);
        CHECK(to_db(nmse(run.result.x.col(0), inst.X.col(0))) < -40.0);
    }
}

TEST_CASE("both variants recover an iid instance") {
    const ProblemInstance inst = instance(MatrixKind::iid_gaussian, 60.0, 23);
    const TransformedModel model = unitary_transform(inst.A, inst.Y);
    SblOptions opt;
    opt.variant = UampVariant::v1;
    const double v1 = to_db(nmse(uamp_sbl(model, opt).result.x.col(0), inst.X.col(0)));
    opt.variant = UampVariant::v2;
    const double v2 = to_db(nmse(uamp_sbl(model, opt).result.x.col(0), inst.X.col(0)));
    CHECK(v1 < -50.0);
    CHECK(v2 < -50.0);
}

TEST_CASE("reference SBL on an identity matrix follows the scalar map") {
    const Index n = 12;
    const double beta = 3.0, eps = 0.2;
    const Vector y = Vector::LinSpaced(n, -2.5, 2.5);
    TippingOptions opt;
    opt.prior.epsilon = eps;
    opt.stop.t_max = 40;
    opt.stop.delta_x = 1e-300;
    Vector gamma = Vector::Ones(n);
    double worst = 0.0;
    opt.on_iteration = [&](std::size_t, const Vector&, const Vector& g) {
        for (Index i = 0; i < n; ++i) {
            gamma(i) = gamma_map(gamma(i), beta, y(i) * y(i), eps);
            worst = std::max(worst, std::abs(g(i) - gamma(i)) / gamma(i));
        }
    };
    tipping_sbl(Matrix::Identity(n, n), y, beta, opt);
    CHECK(worst < 1e-10);
}

TEST_CASE("reference SBL with the adaptive shape approaches the oracle") {
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ProblemInstance inst = instance(MatrixKind::correlated, 50.0, 100 + seed, 0.3);
        TippingOptions opt;
        opt.auto_epsilon = true;
        const RecoveryResult r = tipping_sbl(inst.A, inst.Y.col(0), inst.beta_true, opt);
        const Vector oracle = support_oracle_mmse(inst.A, inst.Y.col(0), inst.support, inst.beta_true);
        gaps.push_back(to_db(nmse(r.x.col(0), inst.X.col(0))) - to_db(nmse(oracle, inst.X.col(0))));
    }
    CHECK(median(gaps) < 3.0);
}

TEST_CASE("reference SBL input checks") {
    const Matrix a = Matrix::Identity(3, 3);
    const Vector y = Vector::Ones(3);
    CHECK_THROWS_AS(tipping_sbl(a, y, INFINITY), std::invalid_argument);
    CHECK_THROWS_AS(tipping_sbl(a, y, -1.0), std::invalid_argument);
    TippingOptions opt;
    opt.auto_epsilon = true;
    opt.prior.eta = 0.5;
    CHECK_THROWS_AS(tipping_sbl(a, y, 1.0, opt), std::invalid_argument);
}

TEST_CASE("support oracle") {
    MatrixSpec m;
    m.rows = 30;
    m.cols = 30;
    const Matrix a = gen_matrix(m, 2);
    const Vector x = Vector::LinSpaced(30, -1.0, 1.0);
    const Vector y = a * x;

    CHECK(support_oracle_mmse(a, y, {}, 1.0).isZero());

    std::vector<Index> all(30);
    for (Index i = 0; i < 30; ++i) all[i] = i;
    CHECK((support_oracle_mmse(a, y, all, INFINITY) - x).norm() < 1e-9 * x.norm());
    CHECK((support_oracle_mmse(a, y, all, 1e14) - x).norm() < 1e-5 * x.norm());

    // noiseless, |S| < M
    const ProblemInstance inst = instance(MatrixKind::iid_gaussian, INFINITY, 6);
    const Vector est = support_oracle_mmse(inst.A, inst.Y.col(0), inst.support, 1e12);
    CHECK(to_db(nmse(est, inst.X.col(0))) <= -200.0);

    // the restricted estimate solves the LMMSE normal equations
    const std::vector<Index> s{1, 4, 9};
    const Vector e = support_oracle_mmse(a, y, s, 2.0, 0.5);
    Matrix as(30, 3);
    for (int j = 0; j < 3; ++j) as.col(j) = a.col(s[j]);
    Matrix sys = 2.0 * as.transpose() * as;
    sys.diagonal().array() += 2.0;
    const Vector ref = sys.ldlt().solve(2.0 * as.transpose() * y);
    for (int j = 0; j < 3; ++j) CHECK(e(s[j]) == doctest::Approx(ref(j)).epsilon(1e-10));
    CHECK_THROWS_AS(support_oracle_mmse(a, y, {40}, 1.0), std::out_of_range);
}
