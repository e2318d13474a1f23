#pragma once

#include "ssdss/types.hpp"

namespace ssdss {

// First-order-hold discrete model: the recursion is
// x[k+1] = Ad x[k] + Bd0 u[k] + Bd1 u[k+1], y[k] = Cd x[k] + Dd u[k].
struct DiscreteModel {
    MatrixXd Ad, Bd0, Bd1, Cd, Dd;
    double fs_hz = 0.0;
    bool rate_warning = false;  // fs below twice the fastest natural frequency

    Eigen::Index n_states() const { return Ad.rows(); }
    Eigen::Index n_outputs() const { return Cd.rows(); }
    Eigen::Index n_inputs() const { return Bd0.cols(); }
};

// FOH discretization via the augmented matrix exponential. Diagonal-complex
// models are converted to real form first so the recursion stays real.
DiscreteModel foh_discretize(const StateSpaceModel& m, double fs_hz);

// Faded sine sweep: linear instantaneous frequency f0 -> f1 over the given
// duration, raised-cosine fades over fade_fraction*duration on each side,
// normalized to unit peak.
VectorXd sweep_signal(double f0_hz, double f1_hz, double duration_s, double fs_hz,
                      double fade_fraction);

struct SimResult {
    MatrixXd outputs;             // n_samples x n_outputs, truncated on divergence
    bool diverged = false;
    Eigen::Index diverged_at = -1;
};

// State recursion with FOH input terms. Any output sample exceeding 1e12 in
// magnitude (or going non-finite) sets the diverged flag and stops the run.
SimResult simulate(const DiscreteModel& dm, const MatrixXd& inputs,
                   const VectorXd& x0 = VectorXd());

}  // namespace ssdss
