#pragma once

#include <vector>

#include "ssdss/types.hpp"

namespace ssdss {

// Block-diagonal concatenation of FRF sets sharing grid and domain; the
// stacked set is the input shape dual assembly expects.
FrfSet block_frf(const std::vector<FrfSet>& parts);

// Frequency-domain dual assembly: Hc = H - H B^T (B H B^T)^-1 B H applied
// per grid point, outputs and inputs collocated. Redundant rows are kept.
// This is the oracle the state-space coupling is contracted against.
FrfSet dual_assembly_frf(const FrfSet& frfs, const InterfaceMap& map);

// Lagrange-multiplier coupling of displacement state-space models. Every
// model must be Newton-compliant (max |C B| <= 1e-8); the coupled model is
// realized by state feedback through the twice-differentiated constraint
// and keeps the redundant states. Its FRFs match dual_assembly_frf of the
// concatenated component FRFs.
StateSpaceModel lm_couple(const std::vector<StateSpaceModel>& models, const InterfaceMap& map);

// Decoupling: dual assembly with the subtrahend contributions negated.
// The result is frequently unstable; that is expected and accepted.
StateSpaceModel lm_decouple(const StateSpaceModel& assembly,
                            const std::vector<StateSpaceModel>& subtrahends,
                            const InterfaceMap& map);

}  // namespace ssdss
