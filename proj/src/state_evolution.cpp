#include "uampsbl/analysis.hpp"
#include "uampsbl/random.hpp"
#include "uampsbl/sbl.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace uampsbl {

namespace {

constexpr double kLogFloor = 1e-300;

double adapted_denoiser_mse(const Vector& x, const Vector& noise, double tau,
                            const MseTableOptions& opt) {
    const Index n = x.size();
    const Vector q = x + std::sqrt(tau) * noise;
    Vector gamma = Vector::Ones(n);
    double epsilon = opt.epsilon0;
    Vector x_hat = Vector::Zero(n);
    for (std::size_t s = 0; s < opt.sweeps; ++s) {
        const Eigen::ArrayXd shrink = 1.0 + tau * gamma.array();
        x_hat = (q.array() / shrink).matrix();
        const double tau_x = tau / static_cast<double>(n) * shrink.inverse().sum();
        gamma = ((2.0 * epsilon + 1.0) / (x_hat.array().square() + tau_x)).matrix();
        gamma = gamma.cwiseMin(opt.gamma_cap);
        epsilon = epsilon_update(gamma);
    }
    return (x_hat - x).squaredNorm() / static_cast<double>(n);
}

} // namespace

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("invalid log grid");
    std::vector<double> g(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> default_tau_grid() { return log_grid(1e-10, 1e4, 60); }

MseTable build_mse_table(const SignalSpec& signal, const std::vector<double>& tau_grid,
                         std::uint64_t seed, const MseTableOptions& options) {
    if (tau_grid.empty()) throw std::invalid_argument("empty tau grid");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] > 0.0)) throw std::invalid_argument("tau grid must be positive");
        if (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))
            throw std::invalid_argument("tau grid must be strictly increasing");
    }
    if (options.samples < 2) throw std::invalid_argument("need at least two samples");

    SignalSpec batch = signal;
    batch.length = static_cast<Index>(options.samples);
    batch.num_vectors = 1;
    const Vector x = gen_signal(batch, derive_seed(seed, {0})).x.col(0);
    Vector noise(x.size());
    {
        Rng rng = make_rng(derive_seed(seed, {1}));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Index i = 0; i < noise.size(); ++i) noise(i) = normal(rng);
    }

    MseTable table;
    table.rho = signal.sparsity_rate;
    table.tau = tau_grid;
    table.mse.assign(tau_grid.size(), 0.0);

    unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(tau_grid.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tau_grid.size();)
            table.mse[i] = adapted_denoiser_mse(x, noise, tau_grid[i], options);
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return table;
}

double MseTable::operator()(double tau_q, bool* extrapolated) const {
    if (tau.empty()) throw std::logic_error("empty MSE table");
    if (tau.size() == 1) {
        if (extrapolated && tau_q != tau[0]) *extrapolated = true;
        return mse[0];
    }
    if (!(tau_q > 0.0)) throw std::invalid_argument("tau must be positive");
    const bool outside = tau_q < tau.front() || tau_q > tau.back();
    if (outside && extrapolated) *extrapolated = true;

    std::size_t hi = std::upper_bound(tau.begin(), tau.end(), tau_q) - tau.begin();
    hi = std::clamp<std::size_t>(hi, 1, tau.size() - 1);
    const std::size_t lo = hi - 1;
    const double lx0 = std::log(tau[lo]), lx1 = std::log(tau[hi]);
    const double ly0 = std::log(std::max(mse[lo], kLogFloor));
    const double ly1 = std::log(std::max(mse[hi], kLogFloor));
    const double w = (std::log(tau_q) - lx0) / (lx1 - lx0);
    return std::exp(ly0 + w * (ly1 - ly0));
}

void MseTable::save(std::ostream& os) const {
    os << "# rho " << std::setprecision(17) << rho << '\n';
    for (std::size_t i = 0; i < tau.size(); ++i)
        os << std::setprecision(17) << tau[i] << ' ' << mse[i] << '\n';
}

MseTable MseTable::load(std::istream& is) {
    MseTable t;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "rho") ls >> t.rho;
            continue;
        }
        double a, b;
        if (!(ls >> a >> b)) throw std::runtime_error("malformed MSE table line: " + line);
        if (!(a > 0.0) || b < 0.0 || (!t.tau.empty() && !(a > t.tau.back())))
            throw std::runtime_error("MSE table must have increasing positive tau");
        t.tau.push_back(a);
        t.mse.push_back(b);
    }
    if (t.tau.empty()) throw std::runtime_error("MSE table is empty");
    return t;
}

double se_psi(const Vector& lambda, double beta, double v_x, Index n) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const double noise_var = 1.0 / beta;
    const double denom = (lambda.array() / (v_x * lambda.array() + noise_var)).sum();
    return static_cast<double>(n) / denom;
}

SeTrajectory se_predict(const Vector& lambda, double beta, const MseTable& table, double v_x_init,
                        std::size_t iterations, Index n) {
    if (!(v_x_init >= 0.0)) throw std::invalid_argument("initial v_x must be nonnegative");
    if (n < 1) throw std::invalid_argument("signal length must be positive");
    SeTrajectory tr;
    double v = v_x_init;
    for (std::size_t it = 0; it < iterations; ++it) {
        const double tau = se_psi(lambda, beta, v, n);
        const double next = table(tau, &tr.extrapolated);
        tr.points.push_back({tau, next});
        const bool done = std::abs(next - v) <= 1e-10 * std::max(v, kLogFloor);
        v = next;
        if (done) {
            tr.converged = true;
            break;
        }
    }
    return tr;
}

} // namespace uampsbl
