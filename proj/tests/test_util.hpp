#pragma once

#include <cmath>

#include "ssdss/bench.hpp"
#include "ssdss/types.hpp"

namespace ssdss::testutil {

inline VectorXd linspace(double lo, double hi, Eigen::Index n) {
    return VectorXd::LinSpaced(n, lo, hi);
}

inline VectorXd log_grid_hz(double f0, double f1, Eigen::Index n) {
    VectorXd g(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
        g(k) = 2.0 * M_PI * f0 * std::pow(f1 / f0, t);
    }
    return g;
}

// Max relative entrywise deviation. Entries of `ref` smaller than
// floor_frac times the matrix scale compare against that floor instead
// (structural zeros would otherwise turn solver noise into huge ratios).
inline double max_rel_err(const MatrixXcd& test, const MatrixXcd& ref,
                          double floor_frac = 1e-12) {
    const double scale = max_abs(ref);
    if (scale == 0.0) return max_abs(test);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < ref.rows(); ++i) {
        for (Eigen::Index j = 0; j < ref.cols(); ++j) {
            const double denom = std::max(std::abs(ref(i, j)), floor_frac * scale);
            worst = std::max(worst, std::abs(test(i, j) - ref(i, j)) / denom);
        }
    }
    return worst;
}

inline double max_rel_err(const FrfSet& test, const FrfSet& ref, double floor_frac = 1e-12) {
    double worst = 0.0;
    for (std::size_t f = 0; f < ref.values.size(); ++f) {
        worst = std::max(worst, max_rel_err(test.values[f], ref.values[f], floor_frac));
    }
    return worst;
}

// Worst absolute deviation relative to the per-frequency matrix scale; the
// right yardstick when FRF entries span many decades.
inline double max_scaled_err(const MatrixXcd& test, const MatrixXcd& ref) {
    const double scale = max_abs(ref);
    if (scale == 0.0) return max_abs(test);
    return (test - ref).cwiseAbs().maxCoeff() / scale;
}

inline double max_scaled_err(const FrfSet& test, const FrfSet& ref) {
    double worst = 0.0;
    for (std::size_t f = 0; f < ref.values.size(); ++f) {
        worst = std::max(worst, max_scaled_err(test.values[f], ref.values[f]));
    }
    return worst;
}

// Two-mass chain: ground -- k1 -- m1 -- k2 -- m2 with damping C = a M + b K
// (proportional) or an extra damper on the first mass (non-proportional).
inline LumpedSystem chain2(bool proportional) {
    MatrixXd m = MatrixXd::Identity(2, 2);
    MatrixXd k(2, 2);
    k << 2.0e4, -1.0e4, -1.0e4, 1.0e4;
    MatrixXd c;
    if (proportional) {
        c = 0.5 * m + 1e-4 * k;
    } else {
        c = 0.5 * m + 1e-4 * k;
        c(0, 0) += 3.0;
    }
    return LumpedSystem(m, c, k);
}

inline LumpedSystem sdof(double f_hz, double xi, double mass = 1.0) {
    const double wn = 2.0 * M_PI * f_hz;
    MatrixXd m(1, 1), c(1, 1), k(1, 1);
    m << mass;
    k << wn * wn * mass;
    c << 2.0 * xi * wn * mass;
    return LumpedSystem(m, c, k);
}

}  // namespace ssdss::testutil
