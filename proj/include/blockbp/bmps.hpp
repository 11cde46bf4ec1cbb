#pragma once

#include "blockbp/network.hpp"
#include "blockbp/zipup.hpp"

namespace blockbp {

// Boundary MPS with its magnitude factored out; the represented object is
// mps * exp(log_scale).  Keeping the scale separate lets partition functions
// of large grids stay in range.
struct BoundaryMps {
  Mps mps;
  double log_scale = 0;
};

struct BmpsStats {
  int zips = 0;
  int unconverged_zips = 0;
  void operator+=(const BmpsStats& o) {
    zips += o.zips;
    unconverged_zips += o.unconverged_zips;
  }
};

// Lines (rows or columns) of the grid are counted from `from` inward:
// line 0 is the row/column touching that side.  Boundary MPS site order is
// top-to-bottom for left/right sides and left-to-right for up/down sides;
// physical legs always face away from `from`.

// The empty boundary outside line 0.  The outward legs on that side must be
// trivial (dimension 1), which holds for embedded open networks and for
// dressed block networks.
BoundaryMps bmps_trivial(const FlatNetwork& net, Side from);

// Absorb lines [first, first+count) into `b` by zip-up MPO application,
// truncating to spec.max_rank.  `b` must currently sit just outside line
// `first`.
BoundaryMps bmps_extend(BoundaryMps b, const FlatNetwork& net, Side from,
                        int first, int count, const TruncationSpec& spec,
                        uint64_t seed, BmpsStats* stats = nullptr);

// Boundary MPS of the `nlines` lines nearest to `from`; nlines == 1 is the
// boundary line itself, nlines == extent contracts the whole grid into an
// MPS over the far side's outward legs.
BoundaryMps bmps_contract(const FlatNetwork& net, Side from, int nlines,
                          const TruncationSpec& spec, uint64_t seed,
                          BmpsStats* stats = nullptr);

// Full contraction value: absorb everything, then close the trivial legs.
ScaledScalar bmps_value(const FlatNetwork& net, const TruncationSpec& spec,
                        uint64_t seed, BmpsStats* stats = nullptr);

// Chain value of an MPS whose physical legs all have dimension 1.
ScaledScalar mps_scalar_value(const Mps& m);

// Reverse site order and exchange left/right legs.
Mps mps_reverse(const Mps& m);

// <top| applied to |bottom> through n MPO lines is not needed here; messages
// and environments both go through bmps_extend.

}  // namespace blockbp
