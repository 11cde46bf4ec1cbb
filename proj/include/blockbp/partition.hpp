#pragma once

#include <array>

#include "blockbp/lattice.hpp"

namespace blockbp {

// A rectangular tile of the torus.  r0/c0 are lattice coordinates of the
// top-left site; row i of the block is lattice row (r0+i) mod rows.
struct Block {
  int id = 0;
  int br = 0, bc = 0;  // position in the block grid
  int r0 = 0, c0 = 0;
  int h = 0, w = 0;
};

// The ordered lattice bonds crossing from block_a (through side_a) into
// block_b.  Bonds are listed in block-local order: top to bottom for
// left/right sides, left to right for up/down sides.
struct SuperEdge {
  int id = 0;
  int block_a = 0, block_b = 0;
  Side side_a = Side::kRight;
  Side side_b = Side::kLeft;
  std::vector<Bond> bonds;
};

// Partition of a torus into equal rectangular blocks.  Every block side
// carries exactly one super edge; 1-wide block grids produce self edges
// (block_a == block_b) and directions without lattice edges produce none.
struct BlockPartition {
  Lattice lat;
  int bh = 0, bw = 0;            // block size
  int brows = 0, bcols = 0;      // block grid size
  int offset_r = 0, offset_c = 0;
  std::vector<Block> blocks;     // row-major in the block grid
  std::vector<SuperEdge> super_edges;
  // super edge id per (block, side); -1 where no edge exists
  std::vector<std::array<int, 4>> edge_at;

  int nblocks() const { return brows * bcols; }
  int block_id(int br, int bc) const {
    return ((br % brows + brows) % brows) * bcols + ((bc % bcols + bcols) % bcols);
  }
  int block_of_site(int r, int c) const;
  int neighbor(int b, Side s) const;
  bool has_edge(int b, Side s) const { return edge_at[b][int(s)] >= 0; }
  const SuperEdge& edge(int b, Side s) const {
    return super_edges[edge_at[b][int(s)]];
  }
  // Lattice coords of block-local cell (i,j) of block b.
  std::pair<int, int> cell(int b, int i, int j) const;
};

// rows % bh == 0 and cols % bw == 0 are required; the offset shifts the
// tiling origin on the torus.
BlockPartition partition_blocks(const Lattice& lat, int bh, int bw,
                                int offset_r = 0, int offset_c = 0);

}  // namespace blockbp
