#include "blockbp/partition.hpp"

namespace blockbp {

int BlockPartition::block_of_site(int r, int c) const {
  int rr = ((r - offset_r) % lat.rows + lat.rows) % lat.rows;
  int cc = ((c - offset_c) % lat.cols + lat.cols) % lat.cols;
  return block_id(rr / bh, cc / bw);
}

int BlockPartition::neighbor(int b, Side s) const {
  const Block& blk = blocks[b];
  switch (s) {
    case Side::kUp: return block_id(blk.br - 1, blk.bc);
    case Side::kDown: return block_id(blk.br + 1, blk.bc);
    case Side::kLeft: return block_id(blk.br, blk.bc - 1);
    case Side::kRight: return block_id(blk.br, blk.bc + 1);
  }
  fail("neighbor: bad side");
}

std::pair<int, int> BlockPartition::cell(int b, int i, int j) const {
  const Block& blk = blocks[b];
  return {lat.wrap_r(blk.r0 + i), lat.wrap_c(blk.c0 + j)};
}

BlockPartition partition_blocks(const Lattice& lat, int bh, int bw,
                                int offset_r, int offset_c) {
  BBP_CHECK(lat.periodic(),
            "partition_blocks: works on the torus; embed open networks first");
  BBP_CHECK(bh >= 1 && bw >= 1, "partition_blocks: block size must be positive");
  BBP_CHECK(lat.rows % bh == 0 && lat.cols % bw == 0,
            "partition_blocks: lattice ", lat.rows, "x", lat.cols,
            " not divisible by block ", bh, "x", bw);
  BlockPartition p;
  p.lat = lat;
  p.bh = bh;
  p.bw = bw;
  p.brows = lat.rows / bh;
  p.bcols = lat.cols / bw;
  p.offset_r = ((offset_r % lat.rows) + lat.rows) % lat.rows;
  p.offset_c = ((offset_c % lat.cols) + lat.cols) % lat.cols;
  for (int br = 0; br < p.brows; ++br)
    for (int bc = 0; bc < p.bcols; ++bc) {
      Block b;
      b.id = p.block_id(br, bc);
      b.br = br;
      b.bc = bc;
      b.r0 = lat.wrap_r(p.offset_r + br * bh);
      b.c0 = lat.wrap_c(p.offset_c + bc * bw);
      b.h = bh;
      b.w = bw;
      p.blocks.push_back(b);
    }
  p.edge_at.assign(p.nblocks(), {-1, -1, -1, -1});
  const bool h_edges = lat.periodic() && lat.cols > 1;
  const bool v_edges = lat.periodic() && lat.rows > 1;
  for (const Block& b : p.blocks) {
    if (h_edges) {
      SuperEdge e;
      e.id = static_cast<int>(p.super_edges.size());
      e.block_a = b.id;
      e.block_b = p.neighbor(b.id, Side::kRight);
      e.side_a = Side::kRight;
      e.side_b = Side::kLeft;
      for (int i = 0; i < bh; ++i)
        e.bonds.push_back(
            {lat.wrap_r(b.r0 + i), lat.wrap_c(b.c0 + bw - 1), Side::kRight});
      p.edge_at[e.block_a][int(Side::kRight)] = e.id;
      p.edge_at[e.block_b][int(Side::kLeft)] = e.id;
      p.super_edges.push_back(std::move(e));
    }
    if (v_edges) {
      SuperEdge e;
      e.id = static_cast<int>(p.super_edges.size());
      e.block_a = b.id;
      e.block_b = p.neighbor(b.id, Side::kDown);
      e.side_a = Side::kDown;
      e.side_b = Side::kUp;
      for (int j = 0; j < bw; ++j)
        e.bonds.push_back(
            {lat.wrap_r(b.r0 + bh - 1), lat.wrap_c(b.c0 + j), Side::kDown});
      p.edge_at[e.block_a][int(Side::kDown)] = e.id;
      p.edge_at[e.block_b][int(Side::kUp)] = e.id;
      p.super_edges.push_back(std::move(e));
    }
  }
  return p;
}

}  // namespace blockbp
