#pragma once

#include <map>

#include "blockbp/gates.hpp"
#include "blockbp/network.hpp"

namespace blockbp {

// Reference contractions.  Everything here works directly on the full grid
// (raster frontier sweep or the 2^N basis) and shares no machinery with the
// boundary-MPS code it is used to check.  The frontier cap is in tensor
// entries; sizes beyond it throw instead of thrashing.

constexpr index_t kDefaultFrontierCap = index_t(1) << 26;

ScaledScalar exact_contract(const FlatNetwork& net,
                            index_t max_entries = kDefaultFrontierCap);

// Same, with some site tensors swapped out (e.g. classical impurities).
ScaledScalar exact_contract_replaced(
    const FlatNetwork& net, const std::map<int, DenseTensor>& replacements,
    index_t max_entries = kDefaultFrontierCap);

// Full wavefunction, legs [p_site0, ..., p_siteN-1] in row-major site order,
// normalized to unit 2-norm.
DenseTensor exact_statevector(const PepsNetwork& peps,
                              index_t max_entries = kDefaultFrontierCap);

// Two-site reduced density matrix [pa, pb, pa', pb'], trace-normalized.
DenseTensor exact_rdm(const PepsNetwork& peps, std::pair<int, int> a,
                      std::pair<int, int> b,
                      index_t max_entries = kDefaultFrontierCap);

// Ground-state energy in the 2^N basis: dense solver for up to 12 spins,
// Lanczos above (up to ~20 spins).  kAuto picks by size.
enum class EdMethod { kAuto, kDense, kLanczos };
double exact_ground_energy(const ModelSpec& model, const Lattice& lat,
                           EdMethod method = EdMethod::kAuto);

// <psi|H|psi>/<psi|psi> for a small peps, via the exact statevector.
double exact_energy_of_peps(const ModelSpec& model, const PepsNetwork& peps,
                            index_t max_entries = kDefaultFrontierCap);

}  // namespace blockbp
