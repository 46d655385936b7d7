#include "uampsbl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uampsbl {

double nmse(const Vector& x_hat, const Vector& x_true) {
    if (x_hat.size() != x_true.size()) throw std::invalid_argument("nmse: size mismatch");
    const double energy = x_true.squaredNorm();
    if (!(energy > 0.0)) throw std::invalid_argument("nmse: zero-norm truth");
    return (x_hat - x_true).squaredNorm() / energy;
}

double nmse_mmv(const Matrix& x_hat, const Matrix& x_true) {
    if (x_hat.rows() != x_true.rows() || x_hat.cols() != x_true.cols())
        throw std::invalid_argument("nmse_mmv: shape mismatch");
    if (x_true.cols() == 0) throw std::invalid_argument("nmse_mmv: no columns");
    double total = 0.0;
    for (Index l = 0; l < x_true.cols(); ++l) total += nmse(x_hat.col(l), x_true.col(l));
    return total / static_cast<double>(x_true.cols());
}

double to_db(double v) {
    if (!(v > 0.0)) return kDbFloor;
    return std::max(10.0 * std::log10(v), kDbFloor);
}

bool support_recovered(const Matrix& x_hat, const std::vector<Index>& support) {
    const Index n = x_hat.rows();
    const auto k = static_cast<Index>(support.size());
    if (k > n) throw std::invalid_argument("support larger than signal");
    const Vector mag = x_hat.rowwise().norm();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return mag(a) > mag(b); });
    std::vector<Index> top(order.begin(), order.begin() + k), truth = support;
    std::sort(top.begin(), top.end());
    std::sort(truth.begin(), truth.end());
    return top == truth;
}

double support_recovery_rate(const std::vector<SupportTrial>& trials) {
    if (trials.empty()) throw std::invalid_argument("no trials");
    std::size_t hits = 0;
    for (const auto& t : trials) hits += support_recovered(t.x_hat, t.support) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(trials.size());
}

} // namespace uampsbl
