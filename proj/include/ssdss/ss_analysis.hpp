#pragma once

#include <functional>
#include <vector>

#include "ssdss/types.hpp"

namespace ssdss {

// H(jw) = C (jwI - A)^-1 B + D at every grid point. Diagonal models use the
// elementwise resolvent; everything else goes through a per-frequency LU
// solve. Throws NumericalError when jw lands on an eigenvalue of A
// (within 1e-12 relative).
FrfSet eval_frf(const StateSpaceModel& m, const VectorXd& grid);

// Velocity model of a displacement model (or acceleration of a velocity
// one): A'=A, B'=B, C'=CA, D'=CB. Requires the input feed-through to be
// null within tolerance; a displacement model satisfies this by
// construction, a velocity model only after Newton's-law enforcement.
StateSpaceModel differentiate(const StateSpaceModel& m);

// Exact inverse of differentiate where A is nonsingular: C' = C A^-1 with
// the feed-through absorbed (requires D = C A^-1 B within tolerance).
StateSpaceModel integrate(const StateSpaceModel& m);

// Similarity transform to diagonal form. For models with real content the
// spectrum is symmetrized into exact conjugate pairs and states are ordered
// [pair representatives | conjugates | real poles]. Eigenvector columns are
// unit-norm with a deterministic phase. Fails on near-defective A
// (cond(T) > 1e12).
StateSpaceModel diagonalize(const StateSpaceModel& m);

// Splits a diagonal model into (states matching predicate, complement).
// FRF(m) = FRF(first) + FRF(second) holds exactly.
std::pair<StateSpaceModel, StateSpaceModel> partition(
    const StateSpaceModel& m, const std::function<bool(const PoleDescriptor&)>& predicate);

// Block-diagonal concatenation: A block-diag, B stacked, C concatenated,
// D summed. All models must share n_outputs/n_inputs and domain.
StateSpaceModel concat_block(const std::vector<StateSpaceModel>& models);

// Pole descriptors: diagonal entries for diagonal models, eigenvalues
// otherwise.
std::vector<PoleDescriptor> poles_of(const StateSpaceModel& m);

// Instability test with an absolute floor proportional to the model's
// frequency scale. Dual-assembly coupling keeps its redundant constraint
// states, which sit at numerically-split zero eigenvalues; the floor keeps
// them out of the unstable set. scale should be max |pole| of the model.
bool is_unstable_pole(Complex lambda, double scale);

// Largest |pole| of a model, 0 for empty models.
double pole_scale(const StateSpaceModel& m);

// Conjugate-pair layout of a diagonal model: representative state indices
// (Im > 0), their partner indices, and real-pole state indices. Throws when
// a non-real pole has no conjugate partner within 1e-8 relative.
struct PairStructure {
    std::vector<Eigen::Index> representatives;
    std::vector<Eigen::Index> partners;
    std::vector<Eigen::Index> reals;
};

PairStructure pair_structure(const StateSpaceModel& m);

}  // namespace ssdss
