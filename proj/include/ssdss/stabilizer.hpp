#pragma once

#include <optional>

#include "ssdss/types.hpp"

namespace ssdss {

// Reflects every pole of an all-unstable diagonal model across the
// imaginary axis: the damping-ratio sign flip, which preserves |lambda| and
// the imaginary part. B and C are untouched.
StateSpaceModel flip_damping(const StateSpaceModel& unstable);

// Least-squares re-estimation problem: mode shapes and residual matrices
// are unknown, poles and participation factors are fixed.
struct LsfdProblem {
    FrfSet target;             // reference FRFs, any domain
    VectorXcd poles;           // stable pair representatives (Re < 0, Im > 0)
    MatrixXcd part_factors;    // n_m x n_i
    Domain weighting = Domain::displacement;

    LsfdProblem(FrfSet target_, VectorXcd poles_, MatrixXcd part_factors_, Domain weighting_);

    Eigen::Index n_modes() const { return poles.size(); }
};

// Real design matrix (2 n_m + 2 n_i) x (2 n_i n_f): per-frequency modal
// blocks from the fixed poles/participation factors, residual rows
// [I/(-w^2); I], real and imaginary column halves. Velocity weighting
// multiplies each frequency block by jw, acceleration by -w^2.
MatrixXd lsfd_design_matrix(const LsfdProblem& p);

struct LsfdSolution {
    MatrixXcd mode_shapes;   // n_o x n_m
    MatrixXd lower_residual; // n_o x n_i
    MatrixXd upper_residual; // n_o x n_i
};

// Solves [Upsilon LR UR] = H~ A~+ in a linear least-squares sense. Exact
// recovery when the target was synthesized from a modal model with the
// same poles and participation factors.
LsfdSolution lsfd_solve(const LsfdProblem& p);

// Target FRFs for LSFD: unstable-model FRFs minus the contribution of the
// stabilized real-pole model.
FrfSet target_frf(const FrfSet& unstable_frf, const FrfSet& real_pole_model_frf);

struct StabilizeOptions {
    Domain weighting = Domain::acceleration;
    // Rebuild RCM frequencies: omega_ur = omega_cb = factor * max |Im(pole)|
    // of the input model; omega_lr defaults to grid_min / 5.
    double rcm_freq_factor = 5.0;
    std::optional<double> omega_lr;
    double xi = 0.1;
};

struct StabilizeDiagnostics {
    Eigen::Index n_poles = 0;
    Eigen::Index n_unstable = 0;
    Eigen::Index n_real_stabilized = 0;
    double frf_rel_rms_deviation = 0.0;
    Eigen::Index n_states_in = 0;
    Eigen::Index n_states_out = 0;
    bool no_op = false;
    bool newton_applied = false;
};

struct StabilizeResult {
    StateSpaceModel model;
    StabilizeDiagnostics diagnostics;
};

// The full pipeline: diagonalize, split stable/unstable, flip the damping
// of the unstable part, split the stabilized part into real poles and
// conjugate pairs, re-estimate the pair mode shapes and residuals with
// LSFD against the unstable-part FRFs, rebuild with fresh RCMs,
// concatenate [stable | rebuilt pairs | stabilized real], and re-impose
// Newton's law when the feed-through calls for it. A model with no
// unstable poles is returned unchanged with the no_op flag set.
StabilizeResult stabilize(const StateSpaceModel& coupled, const VectorXd& grid,
                          const StabilizeOptions& opts = {});

}  // namespace ssdss
