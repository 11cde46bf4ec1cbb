#pragma once

#include "blockbp/lattice.hpp"
#include "blockbp/tensor.hpp"

namespace blockbp {

// PEPS on a square lattice; site legs [phys, up, left, down, right].
// Open boundaries (and 1-wide periodic directions) use dimension-1 legs.
struct PepsNetwork {
  Lattice lat;
  std::vector<DenseTensor> sites;

  DenseTensor& site(int r, int c) { return sites[lat.site(r, c)]; }
  const DenseTensor& site(int r, int c) const { return sites[lat.site(r, c)]; }
  index_t phys_dim(int r, int c) const { return site(r, c).dim(0); }
  index_t max_bond() const;
  void check() const;
};

// Network of rank-4 tensors [up, left, down, right]; the contraction target.
// For double-layer networks each leg is a fused (ket, bra) pair and `ket`
// records the ket dimension per site leg (ket-major fusion: f = k*kb + b).
struct FlatNetwork {
  Lattice lat;
  std::vector<DenseTensor> sites;
  std::vector<Shape> ket;  // empty for single-layer, else 4 dims per site

  bool double_layer() const { return !ket.empty(); }
  DenseTensor& site(int r, int c) { return sites[lat.site(r, c)]; }
  const DenseTensor& site(int r, int c) const { return sites[lat.site(r, c)]; }
  index_t ket_dim(int r, int c, Side s) const {
    return double_layer() ? ket[lat.site(r, c)][int(s)] : 0;
  }
  void check() const;
};

// sum_p T (x) T*, virtual legs fused ket-major -> rank-4 site [u,l,d,r].
DenseTensor double_layer_site(const DenseTensor& t);
// Same with a single-site operator [out,in] sandwiched on the physical leg.
DenseTensor impurity_site(const DenseTensor& t, const DenseTensor& op);

FlatNetwork build_double_layer(const PepsNetwork& peps);

// View an open-boundary network as periodic: the wrap-around bonds all have
// dimension 1, so every lattice becomes a torus and downstream code handles
// one case.  Periodic inputs pass through unchanged.
PepsNetwork embed_obc_in_pbc(const PepsNetwork& n);
FlatNetwork embed_obc_in_pbc(const FlatNetwork& n);

// Periodic tiling of a periodic unit cell, krows x kcols copies.
PepsNetwork tile_unit_cell(const PepsNetwork& cell, int krows, int kcols);
FlatNetwork tile_unit_cell(const FlatNetwork& cell, int krows, int kcols);

// Open tiling: krows x kcols copies with every outermost virtual leg closed
// against a seeded random unit vector, so interior tensors are exact copies
// of the cell and the result is a finite open-boundary PEPS.
PepsNetwork tile_unit_cell_open(const PepsNetwork& cell, int krows, int kcols,
                                uint64_t seed);

// Quarter-turn clockwise: site (r,c) of an R x C network lands at
// (c, R-1-r); legs map (u,l,d,r) -> (r,u,l,d) read on the new tensor.
FlatNetwork rotate_cw(const FlatNetwork& n);

// Builders.
PepsNetwork random_peps(const Lattice& lat, index_t phys, index_t bond,
                        uint64_t seed);
PepsNetwork product_peps(const Lattice& lat,
                         const std::vector<std::vector<cplx>>& site_vecs);
// Checkerboard |0>,|1> product state (bond dimension 1).
PepsNetwork neel_peps(const Lattice& lat, index_t phys = 2);
// Seeded random product state, entries complex normal, normalized per site.
PepsNetwork random_product_peps(const Lattice& lat, index_t phys, uint64_t seed);

}  // namespace blockbp
