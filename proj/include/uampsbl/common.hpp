#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace uampsbl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when an iterative solver produces a non-finite value or a runaway
/// estimate. Carries the last finite estimate so callers can still score it.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& where, std::size_t iteration, Matrix last_finite)
        : std::runtime_error("divergence at " + where + " (iteration " +
                             std::to_string(iteration) + ")"),
          where_(where), iteration_(iteration), last_finite_(std::move(last_finite)) {}

    const std::string& where() const noexcept { return where_; }
    std::size_t iteration() const noexcept { return iteration_; }
    const Matrix& last_finite() const noexcept { return last_finite_; }

private:
    std::string where_;
    std::size_t iteration_;
    Matrix last_finite_;
};

/// Stopping rule shared by every iterative solver: stop once the relative
/// squared change of the estimate falls to `delta_x` or after `t_max` sweeps.
struct StopCriteria {
    double delta_x = 1e-8;
    std::size_t t_max = 300;
};

/// ‖new − old‖² / ‖new‖², with 0/0 read as "no change".
inline double relative_change(const Eigen::Ref<const Matrix>& next,
                              const Eigen::Ref<const Matrix>& prev) {
    const double diff = (next - prev).squaredNorm();
    const double norm = next.squaredNorm();
    if (norm == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / norm;
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

} // namespace uampsbl
