#pragma once

#include "uampsbl/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace uampsbl {

enum class MatrixKind { iid_gaussian, ill_conditioned, correlated, nonzero_mean, low_rank };

std::string to_string(MatrixKind kind);
MatrixKind parse_matrix_kind(const std::string& name);

/// Recipe for a measurement matrix. Only the fields of the selected kind are read.
struct MatrixSpec {
    MatrixKind kind = MatrixKind::iid_gaussian;
    Index rows = 160;
    Index cols = 200;
    double kappa = 1.0;      ///< condition number (ill_conditioned)
    double c = 0.0;          ///< correlation c^{|m-n|} (correlated)
    double mu = 0.0;         ///< entry mean (nonzero_mean)
    double rank_ratio = 1.0; ///< R/N (low_rank)

    void validate() const;
};

/// Bernoulli-Gaussian rows with a shared support; optional AR(1) across columns.
struct SignalSpec {
    Index length = 200;
    double sparsity_rate = 0.1;
    Index num_vectors = 1;
    double temporal_corr = 0.0;

    void validate() const;
};

struct Signal {
    Matrix x;                  ///< N×L
    std::vector<Index> support; ///< sorted row indices
};

struct ProblemInstance {
    Matrix A;
    Matrix X;
    Matrix Y;
    double beta_true = 1.0; ///< +inf when noiseless
    std::vector<Index> support;
};

/// Quantities of the unitarily transformed model r = Φx + ω.
struct TransformedModel {
    Matrix r;      ///< Uᵀ·Y, M×L
    Matrix Phi;    ///< Uᵀ·A = Λ·V, M×N
    Vector lambda; ///< squared singular values padded with zeros to length M
    Matrix U;      ///< M×M orthonormal

    Index rows() const { return Phi.rows(); }
    Index cols() const { return Phi.cols(); }
    Index num_vectors() const { return r.cols(); }
};

Matrix gen_matrix(const MatrixSpec& spec, std::uint64_t seed);

Signal gen_signal(const SignalSpec& spec, std::uint64_t seed);

struct NoisyObservation {
    Matrix y;
    double beta_true;
};

/// Adds white Gaussian noise so that ‖clean‖²/(M·L/β) equals the target
/// linear SNR. snr_db = +inf returns the clean data with β = +inf.
NoisyObservation add_noise(const Matrix& clean, double snr_db, std::uint64_t seed);

/// One economic SVD of A, then r = UᵀY, Φ = UᵀA, λ = ΛΛᵀ1.
TransformedModel unitary_transform(const Matrix& A, const Matrix& Y);

/// Matrix, signal and noise from one seed, each from its own derived stream.
ProblemInstance make_instance(const MatrixSpec& mspec, const SignalSpec& sspec, double snr_db,
                              std::uint64_t seed);

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues clamped.
Matrix psd_sqrt(const Matrix& C);

} // namespace uampsbl
