#include "uampsbl/model.hpp"

#include "uampsbl/random.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace uampsbl {

std::string to_string(MatrixKind kind) {
    switch (kind) {
    case MatrixKind::iid_gaussian: return "iid_gaussian";
    case MatrixKind::ill_conditioned: return "ill_conditioned";
    case MatrixKind::correlated: return "correlated";
    case MatrixKind::nonzero_mean: return "nonzero_mean";
    case MatrixKind::low_rank: return "low_rank";
    }
    return "unknown";
}

MatrixKind parse_matrix_kind(const std::string& name) {
    for (auto k : {MatrixKind::iid_gaussian, MatrixKind::ill_conditioned, MatrixKind::correlated,
                   MatrixKind::nonzero_mean, MatrixKind::low_rank})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown matrix kind: " + name);
}

void MatrixSpec::validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("matrix dimensions must be positive");
    switch (kind) {
    case MatrixKind::ill_conditioned:
        if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
        break;
    case MatrixKind::correlated:
        if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("c must lie in [0,1]");
        break;
    case MatrixKind::nonzero_mean:
        if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
        break;
    case MatrixKind::low_rank: {
        if (!(rank_ratio > 0.0 && rank_ratio <= 1.0))
            throw std::invalid_argument("rank_ratio must lie in (0,1]");
        const auto inner = static_cast<Index>(std::llround(rank_ratio * static_cast<double>(cols)));
        if (inner < 1) throw std::invalid_argument("low_rank inner dimension rounds to 0");
        if (inner >= rows) throw std::invalid_argument("low_rank requires R < M");
        break;
    }
    case MatrixKind::iid_gaussian: break;
    }
}

void SignalSpec::validate() const {
    if (length < 1) throw std::invalid_argument("signal length must be positive");
    if (num_vectors < 1) throw std::invalid_argument("num_vectors must be positive");
    if (!(sparsity_rate >= 0.0 && sparsity_rate <= 1.0))
        throw std::invalid_argument("sparsity_rate must lie in [0,1]");
    if (num_vectors > 1 && !(temporal_corr > -1.0 && temporal_corr < 1.0))
        throw std::invalid_argument("temporal_corr must lie in (-1,1)");
}

namespace {

Matrix gaussian_matrix(Index rows, Index cols, double mean, Rng& rng) {
    std::normal_distribution<double> normal(mean, 1.0);
    Matrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
    return g;
}

Matrix toeplitz_power(Index n, double c) {
    Matrix C(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            C(i, j) = std::pow(c, static_cast<double>(std::abs(i - j)));
    return C;
}

Matrix ill_conditioned(const MatrixSpec& spec, Rng& rng) {
    const Index m = spec.rows, n = spec.cols;
    const Index k = std::min(m, n);
    Matrix g = gaussian_matrix(m, n, 0.0, rng);
    Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);

    Vector sigma(k);
    const double step = k > 1 ? std::pow(spec.kappa, 1.0 / static_cast<double>(k - 1)) : 1.0;
    sigma(0) = 1.0;
    for (Index i = 1; i < k; ++i) sigma(i) = sigma(i - 1) / step;
    // ‖A‖_F² = MN
    sigma *= std::sqrt(static_cast<double>(m) * static_cast<double>(n) / sigma.squaredNorm());
    return svd.matrixU() * sigma.asDiagonal() * svd.matrixV().transpose();
}

} // namespace

Matrix psd_sqrt(const Matrix& C) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix gen_matrix(const MatrixSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = make_rng(seed);
    switch (spec.kind) {
    case MatrixKind::iid_gaussian: return gaussian_matrix(spec.rows, spec.cols, 0.0, rng);
    case MatrixKind::nonzero_mean: return gaussian_matrix(spec.rows, spec.cols, spec.mu, rng);
    case MatrixKind::ill_conditioned: return ill_conditioned(spec, rng);
    case MatrixKind::correlated: {
        Matrix g = gaussian_matrix(spec.rows, spec.cols, 0.0, rng);
        if (spec.c == 0.0) return g;
        return psd_sqrt(toeplitz_power(spec.rows, spec.c)) * g *
               psd_sqrt(toeplitz_power(spec.cols, spec.c));
    }
    case MatrixKind::low_rank: {
        const auto inner =
            static_cast<Index>(std::llround(spec.rank_ratio * static_cast<double>(spec.cols)));
        Matrix b = gaussian_matrix(spec.rows, inner, 0.0, rng);
        Matrix c = gaussian_matrix(inner, spec.cols, 0.0, rng);
        return b * c;
    }
    }
    throw std::logic_error("unhandled matrix kind");
}

Signal gen_signal(const SignalSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = make_rng(seed);
    std::bernoulli_distribution active(spec.sparsity_rate);
    std::normal_distribution<double> normal(0.0, 1.0);

    Signal out;
    out.x = Matrix::Zero(spec.length, spec.num_vectors);
    for (Index n = 0; n < spec.length; ++n)
        if (active(rng)) out.support.push_back(n);

    const double alpha = spec.num_vectors > 1 ? spec.temporal_corr : 0.0;
    const double innovation = std::sqrt(1.0 - alpha * alpha);
    for (Index n : out.support) {
        out.x(n, 0) = normal(rng);
        for (Index l = 1; l < spec.num_vectors; ++l)
            out.x(n, l) = alpha * out.x(n, l - 1) + innovation * normal(rng);
    }
    return out;
}

NoisyObservation add_noise(const Matrix& clean, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0)
        return {clean, std::numeric_limits<double>::infinity()};
    const double snr = std::pow(10.0, snr_db / 10.0);
    if (!(snr > 0.0) || !std::isfinite(snr)) throw std::invalid_argument("SNR must be positive");
    const double energy = clean.squaredNorm();
    if (!(energy > 0.0)) throw std::invalid_argument("clean signal is zero; SNR undefined");

    const double count = static_cast<double>(clean.size());
    const double beta = count * snr / energy;
    const double sd = 1.0 / std::sqrt(beta);

    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    Matrix y = clean;
    for (Index j = 0; j < y.cols(); ++j)
        for (Index i = 0; i < y.rows(); ++i) y(i, j) += normal(rng);
    return {std::move(y), beta};
}

TransformedModel unitary_transform(const Matrix& A, const Matrix& Y) {
    if (A.rows() != Y.rows()) throw std::invalid_argument("A and Y row counts differ");
    if (A.size() == 0 || A.squaredNorm() == 0.0)
        throw std::invalid_argument("measurement matrix is zero");
    const Index m = A.rows(), n = A.cols();

    TransformedModel out;
    if (m <= n) {
        Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success || !svd.singularValues().allFinite())
            throw std::runtime_error("SVD of measurement matrix failed");
        const Vector& s = svd.singularValues();
        out.U = svd.matrixU();
        out.Phi = s.asDiagonal() * svd.matrixV().transpose();
        out.lambda = s.cwiseAbs2();
    } else {
        Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success || !svd.singularValues().allFinite())
            throw std::runtime_error("SVD of measurement matrix failed");
        const Vector& s = svd.singularValues();
        out.U = svd.matrixU();
        out.Phi = Matrix::Zero(m, n);
        out.Phi.topRows(n) = s.asDiagonal() * svd.matrixV().transpose();
        out.lambda = Vector::Zero(m);
        out.lambda.head(n) = s.cwiseAbs2();
    }
    out.r = out.U.transpose() * Y;
    return out;
}

ProblemInstance make_instance(const MatrixSpec& mspec, const SignalSpec& sspec, double snr_db,
                              std::uint64_t seed) {
    if (mspec.cols != sspec.length)
        throw std::invalid_argument("matrix columns must equal signal length");
    ProblemInstance p;
    p.A = gen_matrix(mspec, derive_seed(seed, {0}));
    Signal sig = gen_signal(sspec, derive_seed(seed, {1}));
    p.X = std::move(sig.x);
    p.support = std::move(sig.support);
    NoisyObservation obs = add_noise(p.A * p.X, snr_db, derive_seed(seed, {2}));
    p.Y = std::move(obs.y);
    p.beta_true = obs.beta_true;
    return p;
}

} // namespace uampsbl
