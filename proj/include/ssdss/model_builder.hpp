#pragma once

#include <optional>
#include <vector>

#include "ssdss/types.hpp"

namespace ssdss {

enum class RcmSource { UR, LR, CB };

// Residual compensation modes synthesized from the SVD of a real matrix:
// one underdamped pair per retained singular value.
struct RcmSet {
    VectorXcd poles;      // n_r, Re < 0, Im > 0
    MatrixXcd shapes;     // n_o x n_r
    MatrixXcd factors;    // n_r x n_i
    RcmSource source = RcmSource::UR;

    RcmSet(VectorXcd poles_, MatrixXcd shapes_, MatrixXcd factors_, RcmSource source_);

    Eigen::Index n_modes() const { return poles.size(); }
};

// FRF synthesis of the modal model: pole/residue pairs plus LR/(jw)^2 + UR.
FrfSet modal_frf(const ModalModel& model, const VectorXd& grid);

// Diagonal-complex displacement model from the in-band modal parameters:
// A = diag(L, L*), B = [L; L*], C = [Psi, Psi*], D = 0.
StateSpaceModel build_inband(const ModalModel& model);

// RCM parameters from the SVD of a real matrix M: per retained singular
// value, an underdamped pair at (omega_r, xi_r) whose displacement FRF at
// w = 0 reproduces sigma_r U_r V_r^T exactly. Singular values below
// 1e-12 * sigma_max are dropped.
RcmSet rcm_params(const MatrixXd& m, double omega_r, double xi_r,
                  RcmSource source = RcmSource::UR);

// Diagonal-complex displacement model realizing an RCM set.
StateSpaceModel rcm_model(const RcmSet& rcms, Eigen::Index n_outputs, Eigen::Index n_inputs,
                          std::string provenance = {});

// Upper-residual RCM model: constant UR over the band, rolls off above
// omega_ur.
StateSpaceModel ur_rcm_model(const MatrixXd& ur, const RcmConfig& cfg);

// Lower-residual RCM model built from LR/omega_lr^2: approximates
// LR/(jw)^2 for w >> omega_lr.
StateSpaceModel lr_rcm_model(const MatrixXd& lr, const RcmConfig& cfg);

// Block-diagonal assembly of in-band + LR + UR models into the complete
// displacement model.
StateSpaceModel assemble_full(const StateSpaceModel& inband, const StateSpaceModel& lr_m,
                              const StateSpaceModel& ur_m);

// The velocity feed-through C*B of a displacement model built from
// conjugate pairs. The product is real; the imaginary part is discarded
// after asserting it is numerical noise.
MatrixXd velocity_feedthrough(const StateSpaceModel& m);

// Appends damped RCM pairs that cancel the velocity feed-through so the
// model obeys Newton's second law. No-op when C*B is already negligible.
// `applied` (optional) reports whether modes were added.
StateSpaceModel impose_newton(const StateSpaceModel& full, const RcmConfig& cfg,
                              bool* applied = nullptr);

// Legacy single-state undamped variant (one state at +j*omega per singular
// value). Kept for accuracy comparisons against impose_newton.
StateSpaceModel impose_newton_legacy(const StateSpaceModel& full, double omega_cb_al,
                                     bool* applied = nullptr);

// Closed-form velocity FRF of the Newton RCM block:
// w_cb^2 CB / (-w^2 + 2 j w xi w_cb + w_cb^2) - CB. Oracle for the
// state-space realization.
FrfSet newton_rcm_velocity_frf(const MatrixXd& cb, const RcmConfig& cfg, const VectorXd& grid);

// Similarity transform of a diagonal-complex model to real-valued form:
// one 2x2 block [[Re l, Im l], [-Im l, Re l]] per conjugate pair, real
// rank-one blocks for real poles. FRFs are preserved.
StateSpaceModel to_real_form(const StateSpaceModel& m);

// Complete displacement model from modal parameters: in-band pairs plus
// LR/UR residual compensation modes, optionally Newton-compliant.
StateSpaceModel build_full_model(const ModalModel& model, const RcmConfig& cfg,
                                 bool enforce_newton = true, bool* newton_applied = nullptr);

// Default RCM frequencies from a band of interest (rad/s):
// omega_lr = omega_min/50, omega_ur = omega_cb = 10*omega_max (the
// bottom-limit rule; expect the in-band quality warning at the band edge,
// raise the corners as the diagnostic suggests), all xi = 0.1.
RcmConfig default_rcm_config(double omega_min, double omega_max);

// Per-frequency quality of the RCM approximations over a band: relative
// deviation of each RCM model's FRF from the residual term it stands for.
// Rows align with the grid; deviations are NaN for absent blocks.
struct RcmQualityRow {
    double omega;        // rad/s
    double rel_dev_ur;   // |H_ur(w) - UR| / |UR|
    double rel_dev_lr;   // |H_lr(w) - LR/(jw)^2| / |LR/(jw)^2|
    double rel_dev_cb;   // |first Newton term - CB| / |CB|
};

std::vector<RcmQualityRow> rcm_quality(const MatrixXd& lr, const MatrixXd& ur,
                                       const MatrixXd& cb, const RcmConfig& cfg,
                                       const VectorXd& grid);

}  // namespace ssdss
