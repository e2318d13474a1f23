#pragma once

#include <cstdint>
#include <vector>

#include "ssdss/types.hpp"

namespace ssdss {

// Lumped mass/damper/stiffness system with a direct-inversion FRF oracle
// H(w) = (-w^2 M + jw C + K)^-1.
struct LumpedSystem {
    MatrixXd mass;
    MatrixXd damping;
    MatrixXd stiffness;

    LumpedSystem(MatrixXd mass_, MatrixXd damping_, MatrixXd stiffness_);

    Eigen::Index n_dof() const { return mass.rows(); }

    MatrixXcd frf_at(double omega) const;
    FrfSet frf(const VectorXd& grid) const;
    // FRFs restricted to a collocated output/input DOF subset.
    FrfSet frf(const VectorXd& grid, const std::vector<Eigen::Index>& io_dofs) const;

    // Undamped natural frequencies (rad/s), ascending.
    VectorXd natural_frequencies() const;
};

// Exact modal decomposition of a lumped system: the returned modal model
// reproduces the direct-inversion FRFs with zero residual matrices.
// Throws when a mode is critically damped or overdamped.
ModalModel make_lumped(const LumpedSystem& sys);

// As above with outputs/inputs restricted to a collocated DOF subset.
ModalModel make_lumped(const LumpedSystem& sys, const std::vector<Eigen::Index>& io_dofs);

// Moves out-of-band modes of an exact modal model into residual matrices:
// below-band pairs fold into LR = sum 2 Re(psi l lambda), above-band pairs
// into UR = -sum 2 Re(psi l / lambda). In-band modes are kept verbatim.
ModalModel truncate_to_band(const ModalModel& model, double omega_min, double omega_max);

// Deterministic multiplicative perturbation of mode shapes and
// participation factors (poles untouched). Each complex entry is scaled by
// 1 + rel_level*(u1 + j*u2)/sqrt(2) with u1, u2 uniform in [-1, 1] drawn
// from splitmix64 seeded with `seed` (documented generator so fixtures are
// reproducible across implementations).
ModalModel perturb(const ModalModel& model, double rel_level, std::uint64_t seed);

// splitmix64 PRNG step, exposed so tests can pin the stream.
std::uint64_t splitmix64_next(std::uint64_t& state);

// Substructure analog bundle mirroring the two-crosses-plus-mount test
// campaign: stiff 6-DOF cross blocks, a soft non-proportionally damped
// 12-DOF mount, and the primal-assembled 12-DOF assemblies. Interface maps
// are laid out for the coupling/decoupling pipeline:
//   decouple: [assembly_a | cross_alu_a | cross_alu_b], 12 constraints
//   couple:   [cross_steel_a | mount | cross_steel_b], 12 constraints
struct AssemblyAnalog {
    LumpedSystem cross_alu_a;
    LumpedSystem cross_alu_b;
    LumpedSystem cross_steel_a;
    LumpedSystem cross_steel_b;
    LumpedSystem mount;
    LumpedSystem assembly_a;
    LumpedSystem assembly_b;

    InterfaceMap decouple_map;
    InterfaceMap couple_map;

    double band_min;  // rad/s
    double band_max;  // rad/s
};

AssemblyAnalog make_assembly_analog();

}  // namespace ssdss
