#include "uampsbl/analysis.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace uampsbl;

namespace {

/// Iterates the scalar map; returns the last value or +inf past the cutoff.
double iterate(double gamma, double beta, double y_sq, double eps, int steps = 10000) {
    for (int t = 0; t < steps; ++t) {
        gamma = gamma_map(gamma, beta, y_sq, eps);
        if (gamma > 1e9) return INFINITY;
    }
    return gamma;
}

double slope(double gamma, double beta, double y_sq, double eps) {
    const double h = 1e-6 * gamma;
    return (gamma_map(gamma + h, beta, y_sq, eps) - gamma_map(gamma - h, beta, y_sq, eps)) / (2 * h);
}

} // namespace

TEST_CASE("scalar map values") {
    CHECK(gamma_map(1.0, 1.0, 2.0, 0.0) == doctest::Approx(1.0));
    CHECK(gamma_map(1e-300, 1.0, 3.0, 0.0) == doctest::Approx(1.0 / (3.0 + 1.0)));
    // below unit SNR the map grows at least geometrically
    for (double u : {0.1, 0.5, 1.0})
        for (double eps : {0.0, 0.3, 1.5})
            for (double g : {1e-3, 1.0, 1e3}) CHECK(gamma_map(g, 1.0, u, eps) > (2 * eps + 1) * g);
}

TEST_CASE("threshold") {
    CHECK(fixed_point_threshold(0.0) == 1.0);
    CHECK(fixed_point_threshold(1.5) == doctest::Approx(7.0 + 4.0 * std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("classification against iteration") {
    const FixedPointReport a = classify_fixed_points(1.0, 2.0, 0.0);
    CHECK(a.regime == FixedPointRegime::stable_fp);
    CHECK(*a.fp_value == doctest::Approx(1.0));
    CHECK(iterate(1e-3, 1.0, 2.0, 0.0) == doctest::Approx(1.0).epsilon(1e-9));

    const FixedPointReport b = classify_fixed_points(1.0, 0.5, 0.0);
    CHECK(b.regime == FixedPointRegime::diverge);
    CHECK(!b.fp_value);
    // at eps = 0 every step adds at least beta(1 - beta y^2), so the cutoff is reached in finite time
    double g = 1e-3;
    bool growing = true;
    for (int t = 0; t < 10000; ++t) {
        const double next = gamma_map(g, 1.0, 0.5, 0.0);
        growing = growing && next - g >= 0.5 * (1.0 - 1e-12);
        g = next;
    }
    CHECK(growing);
    CHECK(std::isinf(iterate(1e-3, 1e6, 0.5e-6, 0.0)));

    for (double eps : {0.1, 0.5, 1.5})
        for (double u : {2.0, 5.0, 12.0, 20.0, 30.0}) {
            const FixedPointReport r = classify_fixed_points(1.0, u, eps);
            const double it = iterate(1e-3, 1.0, u, eps);
            if (u > r.threshold) {
                REQUIRE(r.regime == FixedPointRegime::stable_fp);
                CHECK(it == doctest::Approx(*r.fp_value).epsilon(1e-8));
                // attracting and repelling roots
                CHECK(gamma_map(*r.fp_value, 1.0, u, eps) == doctest::Approx(*r.fp_value).epsilon(1e-9));
                CHECK(std::abs(slope(*r.fp_value, 1.0, u, eps)) < 1.0);
                REQUIRE(r.unstable_root);
                CHECK(gamma_map(*r.unstable_root, 1.0, u, eps) ==
                      doctest::Approx(*r.unstable_root).epsilon(1e-9));
                CHECK(std::abs(slope(*r.unstable_root, 1.0, u, eps)) > 1.0);
            } else {
                CHECK(r.regime == FixedPointRegime::diverge);
                CHECK(std::isinf(it));
            }
        }
}

TEST_CASE("neutral threshold is reported as neutral") {
    for (double eps : {0.1, 1.5}) {
        const double t = fixed_point_threshold(eps);
        const FixedPointReport r = classify_fixed_points(2.0, t / 2.0, eps);
        CHECK(r.regime == FixedPointRegime::neutral);
        REQUIRE(r.fp_value);
        CHECK(gamma_map(*r.fp_value, 2.0, t / 2.0, eps) == doctest::Approx(*r.fp_value).epsilon(1e-6));
    }
    CHECK(to_string(FixedPointRegime::neutral) == "neutral");
}

TEST_CASE("precision ratio") {
    for (double u : {2.0, 10.0, 1e4}) CHECK(precision_ratio(u, 0.0) == doctest::Approx(1.0));
    CHECK(precision_ratio(1e4, 1.5) == doctest::Approx(4.0).epsilon(0.01));
    // ratio of the two iterated fixed points
    const double with = iterate(1e-3, 1.0, 50.0, 1.5);
    const double without = iterate(1e-3, 1.0, 50.0, 0.0);
    CHECK(precision_ratio(50.0, 1.5) == doctest::Approx(with / without).epsilon(1e-6));
    CHECK_THROWS_AS(precision_ratio(fixed_point_threshold(0.5), 0.5), std::domain_error);
    CHECK_THROWS_AS(precision_ratio(1.0, 0.5), std::domain_error);
}

TEST_CASE("log grid") {
    const auto g = default_tau_grid();
    REQUIRE(g.size() == 60);
    CHECK(g.front() == doctest::Approx(1e-10));
    CHECK(g.back() == doctest::Approx(1e4));
    for (std::size_t i = 1; i < g.size(); ++i)
        CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]).epsilon(1e-12));
}

TEST_CASE("MSE table") {
    SignalSpec s;
    s.sparsity_rate = 0.1;
    MseTableOptions opt;
    opt.samples = 20000;
    std::vector<double> grid{1e-12, 1e-6, 1e-3, 1e-1, 1.0, 10.0, 1e6};
    const MseTable t = build_mse_table(s, grid, 99, opt);
    CHECK(t.mse.front() <= 1e-10);
    CHECK(t.mse.back() == doctest::Approx(0.1).epsilon(0.05));
    // increasing up to tau = 1; beyond that the adapted denoiser keeps some
    // noise-only entries and overshoots rho before pruning everything
    for (std::size_t i = 1; i < 5; ++i) CHECK(t.mse[i] >= t.mse[i - 1]);
    CHECK(t.mse[5] > t.mse.back());

    // thread count does not change the table
    opt.threads = 3;
    const MseTable u = build_mse_table(s, grid, 99, opt);
    CHECK(u.mse == t.mse);

    // save/load round trip and interpolation at the nodes
    std::stringstream ss;
    t.save(ss);
    const MseTable back = MseTable::load(ss);
    CHECK(back.rho == t.rho);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(back(grid[i]) == doctest::Approx(t.mse[i]).epsilon(1e-14));
    bool extrapolated = false;
    back(1e-20, &extrapolated);
    CHECK(extrapolated);
    extrapolated = false;
    back(0.5, &extrapolated);
    CHECK(!extrapolated);
}

TEST_CASE("interpolation is linear in log-log space") {
    MseTable t;
    t.tau = {1e-4, 1e-2};
    t.mse = {1e-6, 1e-2};
    CHECK(t(1e-3) == doctest::Approx(1e-4).epsilon(1e-12));
    bool ext = false;
    CHECK(t(1e0, &ext) == doctest::Approx(1e2).epsilon(1e-9));
    CHECK(ext);
}

TEST_CASE("state evolution") {
    const Vector ones = Vector::Ones(50);
    CHECK(se_psi(ones, 4.0, 0.0, 50) == doctest::Approx(0.25));
    // psi increases with v
    CHECK(se_psi(ones, 4.0, 0.1, 50) > se_psi(ones, 4.0, 0.0, 50));

    SignalSpec s;
    MseTableOptions opt;
    opt.samples = 20000;
    const MseTable table = build_mse_table(s, default_tau_grid(), 5, opt);
    Vector lambda = Vector::LinSpaced(80, 0.5, 2.0);
    const SeTrajectory tr = se_predict(lambda, 1e4, table, 0.1, 200, 100);
    REQUIRE(!tr.points.empty());
    CHECK(tr.converged);
    const SePoint last = tr.points.back();
    CHECK(table(se_psi(lambda, 1e4, last.v_x, 100)) == doctest::Approx(last.v_x).epsilon(1e-6));
    for (std::size_t i = 1; i < tr.points.size(); ++i) CHECK(tr.points[i].v_x <= tr.points[i - 1].v_x);
}

TEST_CASE("nmse and dB") {
    Vector x(3);
    x << 1.0, -2.0, 0.5;
    CHECK(nmse(x, x) == 0.0);
    CHECK(to_db(nmse(x, x)) == kDbFloor);
    CHECK(nmse(Vector::Zero(3), x) == doctest::Approx(1.0));
    CHECK(nmse(2.0 * x, x) == doctest::Approx(1.0));
    CHECK(to_db(0.01) == doctest::Approx(-20.0));
    CHECK_THROWS_AS(nmse(x, Vector::Zero(3)), std::invalid_argument);
    CHECK_THROWS_AS(nmse(x, Vector::Zero(2)), std::invalid_argument);

    Matrix X(3, 2), Xh(3, 2);
    X << 1, 0, 0, 2, 1, 2;
    Xh << 1, 0, 0, 2, 1, 0; // column 1 error 4/8
    CHECK(nmse_mmv(Xh, X) == doctest::Approx(0.25));
}

TEST_CASE("support recovery") {
    Matrix x = Matrix::Zero(6, 1);
    x(1, 0) = 2.0;
    x(4, 0) = -1.0;
    const std::vector<Index> truth{1, 4};
    CHECK(support_recovered(x, truth));
    Matrix complement = Matrix::Ones(6, 1);
    complement(1, 0) = complement(4, 0) = 0.0;
    CHECK(!support_recovered(complement, truth));

    std::vector<SupportTrial> trials{{x, truth}, {complement, truth}, {x, truth}, {complement, truth}};
    CHECK(support_recovery_rate(trials) == 0.5);
    CHECK(support_recovery_rate({{x, truth}}) == 1.0);

    // ties go to the lower index
    const Matrix tied = Matrix::Ones(4, 1);
    CHECK(support_recovered(tied, {0, 1}));
    CHECK(!support_recovered(tied, {2, 3}));
}
