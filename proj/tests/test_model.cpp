#include "uampsbl/model.hpp"
#include "uampsbl/random.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>
#include <set>

using namespace uampsbl;

TEST_CASE("derived seeds are distinct and reproducible") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 50; ++a)
        for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(7, {a, b}));
    CHECK(seen.size() == 2500);
    CHECK(derive_seed(7, {3, 4}) == derive_seed(7, {3, 4}));
    CHECK(derive_seed(7, {3, 4}) != derive_seed(8, {3, 4}));
    CHECK(derive_seed(7, {3}) != derive_seed(7, {3, 0}));
}

TEST_CASE("matrix kinds round-trip through their names") {
    for (auto k : {MatrixKind::iid_gaussian, MatrixKind::ill_conditioned, MatrixKind::correlated,
                   MatrixKind::nonzero_mean, MatrixKind::low_rank})
        CHECK(parse_matrix_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_matrix_kind("dense"), std::invalid_argument);
}

TEST_CASE("ill-conditioned matrix has the requested condition number and energy") {
    MatrixSpec s;
    s.kind = MatrixKind::ill_conditioned;
    s.rows = 40;
    s.cols = 50;
    s.kappa = 100.0;
    const Matrix a = gen_matrix(s, 3);
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& sv = svd.singularValues();
    CHECK(sv(0) / sv(sv.size() - 1) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(a.squaredNorm() == doctest::Approx(40.0 * 50.0).epsilon(1e-9));
}

TEST_CASE("low-rank matrix has rank R") {
    MatrixSpec s;
    s.kind = MatrixKind::low_rank;
    s.rows = 40;
    s.cols = 50;
    s.rank_ratio = 0.6;
    Eigen::JacobiSVD<Matrix> svd(gen_matrix(s, 4));
    svd.setThreshold(1e-10);
    CHECK(svd.rank() == 30);

    s.rank_ratio = 0.9; // R = 45 >= M
    CHECK_THROWS_AS(gen_matrix(s, 4), std::invalid_argument);
}

TEST_CASE("nonzero-mean and correlated matrices have the expected moments") {
    MatrixSpec s;
    s.rows = 200;
    s.cols = 250;
    s.kind = MatrixKind::nonzero_mean;
    s.mu = 2.0;
    CHECK(gen_matrix(s, 5).mean() == doctest::Approx(2.0).epsilon(0.01));

    // adjacent rows of one column correlate with coefficient c
    s.kind = MatrixKind::correlated;
    s.c = 0.3;
    const Matrix a = gen_matrix(s, 6);
    const double lag1 = (a.topRows(199).array() * a.bottomRows(199).array()).mean();
    const double var = a.array().square().mean();
    CHECK(lag1 / var == doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("signal has a shared support and AR(1) rows") {
    SignalSpec s;
    s.length = 4000;
    s.sparsity_rate = 0.1;
    s.num_vectors = 3;
    s.temporal_corr = 0.8;
    const Signal sig = gen_signal(s, 9);
    CHECK(static_cast<double>(sig.support.size()) == doctest::Approx(400.0).epsilon(0.15));
    std::set<Index> sup(sig.support.begin(), sig.support.end());
    double cross = 0.0, energy = 0.0;
    for (Index n = 0; n < s.length; ++n) {
        if (!sup.count(n)) {
            CHECK(sig.x.row(n).squaredNorm() == 0.0);
            continue;
        }
        cross += sig.x(n, 0) * sig.x(n, 1);
        energy += sig.x(n, 0) * sig.x(n, 0);
    }
    CHECK(cross / energy == doctest::Approx(0.8).epsilon(0.08));
}

TEST_CASE("noise is scaled to the requested SNR") {
    const Matrix clean = Matrix::Constant(500, 2, 1.5);
    const NoisyObservation obs = add_noise(clean, 20.0, 10);
    const double noise_var = 1.0 / obs.beta_true;
    CHECK(clean.squaredNorm() / (1000.0 * noise_var) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK((obs.y - clean).array().square().mean() == doctest::Approx(noise_var).epsilon(0.15));

    const NoisyObservation exact = add_noise(clean, INFINITY, 10);
    CHECK(std::isinf(exact.beta_true));
    CHECK(exact.y == clean);
    CHECK_THROWS_AS(add_noise(Matrix::Zero(3, 1), 10.0, 1), std::invalid_argument);
}

TEST_CASE("unitary transform preserves the model") {
    for (Index m : {30, 60}) {
        MatrixSpec s;
        s.rows = m;
        s.cols = 45;
        const Matrix a = gen_matrix(s, 12);
        const Matrix y = Matrix::Random(m, 2);
        const TransformedModel t = unitary_transform(a, y);
        CHECK(t.Phi.rows() == m);
        CHECK(t.lambda.size() == m);
        CHECK((t.U.transpose() * t.U - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t.U * t.Phi - a).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((t.U * t.r - y).cwiseAbs().maxCoeff() < 1e-12);
        // ΦΦᵀ = diag(λ)
        const Matrix gram = t.Phi * t.Phi.transpose();
        CHECK((gram - Matrix(t.lambda.asDiagonal())).cwiseAbs().maxCoeff() < 1e-9 * t.lambda.maxCoeff());
    }
}

TEST_CASE("instances are a pure function of the seed") {
    MatrixSpec m;
    SignalSpec s;
    const ProblemInstance a = make_instance(m, s, 40.0, 77);
    const ProblemInstance b = make_instance(m, s, 40.0, 77);
    const ProblemInstance c = make_instance(m, s, 40.0, 78);
    CHECK(a.A == b.A);
    CHECK(a.Y == b.Y);
    CHECK(a.support == b.support);
    CHECK(a.A != c.A);
    m.cols = 150;
    CHECK_THROWS_AS(make_instance(m, s, 40.0, 1), std::invalid_argument);
}

TEST_CASE("psd square root") {
    Matrix c(2, 2);
    c << 2.0, 1.0, 1.0, 2.0;
    const Matrix r = psd_sqrt(c);
    CHECK((r * r - c).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() == 0.0);
}
