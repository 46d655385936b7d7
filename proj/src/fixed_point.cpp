#include "uampsbl/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace uampsbl {

std::string to_string(FixedPointRegime regime) {
    switch (regime) {
    case FixedPointRegime::stable_fp: return "stable_fp";
    case FixedPointRegime::diverge: return "diverge";
    case FixedPointRegime::neutral: return "neutral";
    }
    return "unknown";
}

double gamma_map(double gamma, double beta, double y_sq, double epsilon) {
    const double by = beta * beta * y_sq; // (βy)²
    return (2.0 * epsilon + 1.0) * (beta + gamma) * (beta + gamma) / (by + beta + gamma);
}

double fixed_point_threshold(double epsilon) {
    return 1.0 + 4.0 * epsilon + 4.0 * std::sqrt(epsilon * epsilon + 0.5 * epsilon);
}

FixedPointReport classify_fixed_points(double beta, double y_sq, double epsilon) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    FixedPointReport rep;
    rep.threshold = fixed_point_threshold(epsilon);
    const double u = beta * y_sq;

    if (epsilon == 0.0) {
        if (u > 1.0) {
            rep.regime = FixedPointRegime::stable_fp;
            rep.fp_value = beta / (u - 1.0);
        }
        return rep;
    }

    const double gap = u - rep.threshold;
    if (std::abs(gap) <= kNeutralTolerance * rep.threshold) {
        rep.regime = FixedPointRegime::neutral;
        // double root of 2εγ² − β(u−4ε−1)γ + (1+2ε)β²
        rep.fp_value = beta * (u - 4.0 * epsilon - 1.0) / (4.0 * epsilon);
        return rep;
    }
    if (gap < 0.0) return rep;

    const double b = u - 4.0 * epsilon - 1.0;
    const double disc = std::max(u * u - 8.0 * epsilon * u - 2.0 * u + 1.0, 0.0);
    const double ga = 2.0 * beta * (1.0 + 2.0 * epsilon) / (b + std::sqrt(disc));
    rep.regime = FixedPointRegime::stable_fp;
    rep.fp_value = ga;
    // product of the roots is (1+2ε)β²/(2ε)
    rep.unstable_root = beta * beta * (1.0 + 2.0 * epsilon) / (2.0 * epsilon * ga);
    return rep;
}

double precision_ratio(double beta_y_sq, double epsilon) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
    if (!(beta_y_sq > fixed_point_threshold(epsilon)))
        throw std::domain_error("precision ratio is undefined at or below the threshold");
    const double w = beta_y_sq - 1.0;
    const double a = 1.0 - 4.0 * epsilon / w;
    const double inner = std::max(a * a - 8.0 * epsilon * (1.0 + 2.0 * epsilon) / (w * w), 0.0);
    return 2.0 * (1.0 + 2.0 * epsilon) / (a + std::sqrt(inner));
}

} // namespace uampsbl
