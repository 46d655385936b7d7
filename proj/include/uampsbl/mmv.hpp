#pragma once

#include "uampsbl/common.hpp"
#include "uampsbl/model.hpp"
#include "uampsbl/sbl.hpp"

#include <functional>

namespace uampsbl {

/// Joint state of the L per-column UAMP blocks plus the shared hyperparameters.
struct MmvState {
    Matrix x;     ///< N×L
    Vector tau_x; ///< one variance per column
    Matrix s;     ///< M×L
    Matrix q;     ///< N×L, last pseudo-observations
    Vector tau_q; ///< per column
    Vector gamma;
    double beta = 1.0;
    double epsilon = 0.001;
    std::size_t t = 0;
    std::size_t gamma_cap_hits = 0;
};

struct MmvOptions {
    StopCriteria stop{};
    double epsilon0 = 0.001;
    bool auto_epsilon = true;
    double gamma_cap = 1e11;
    std::function<void(const MmvState&)> on_iteration;
};

/// Common-support recovery: per-column UAMP blocks, pooled noise precision
/// and pooled prior precisions. With L = 1 it reproduces uamp_sbl exactly.
RecoveryResult uamp_sbl_mmv(const TransformedModel& model, const MmvOptions& options = {});

/// Gaussian messages along the AR(1) chain of each row. Forward messages
/// N(xi, psi) summarize columns before l; backward messages N(theta, phi)
/// summarize columns after l. An absent backward message has phi = +inf.
struct TsblMessages {
    Matrix xi, psi, theta, phi; ///< each N×L
    double alpha = 0.0;

    static TsblMessages initial(Index n, Index l, double alpha);
};

/// Forward recursion. Column 0 takes the prior N(0, 1/gamma); column l uses
/// the column l-1 pseudo-observation (q, tau_q) and forward message.
void tsbl_forward(TsblMessages& msg, const Matrix& q, const Vector& tau_q, const Vector& gamma);

/// Backward recursion from column L-1 down to 0. The last column has no
/// successor; with alpha = 0 the chain factorizes and every backward message
/// is left uninformative.
void tsbl_backward(TsblMessages& msg, const Matrix& q, const Vector& tau_q, const Vector& gamma);

/// Precision update of the temporally correlated model (three-sum form).
/// Throws DivergenceError if a denominator is not strictly positive.
Vector tsbl_precision_update(const Matrix& x, const Vector& tau_x, double alpha, double epsilon);

/// Temporally correlated UAMP-SBL for alpha in (-1, 1).
RecoveryResult uamp_tsbl(const TransformedModel& model, double alpha, const MmvOptions& options = {});

} // namespace uampsbl
