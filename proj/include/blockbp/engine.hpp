#pragma once

#include <array>
#include <functional>
#include <string>

#include "blockbp/bmps.hpp"
#include "blockbp/partition.hpp"
#include "blockbp/pool.hpp"

namespace blockbp {

// MPS messages between blocks, stored on the receiving end: incoming[b][s]
// arrives at block b through its side s.  Site order follows the super edge
// bond order (top to bottom for left/right sides, left to right for up/down);
// physical legs carry the (fused) lattice bonds crossing the super edge.
// Sides without a super edge hold an empty MPS.
struct MessageSet {
  std::vector<std::array<Mps, 4>> incoming;

  const Mps& at(int b, Side s) const { return incoming[b][int(s)]; }
  Mps& at(int b, Side s) { return incoming[b][int(s)]; }
};

struct EngineConfig {
  TruncationSpec msg_trunc;  // message bond cap (chi_m) and cutoff
  double tol = 1e-5;         // convergence threshold on eps_l / eps_1
  int max_rounds = 10;
  uint64_t seed = 0;
  ThreadPool* pool = nullptr;                       // optional; serial if null
  std::function<void(const std::string&)> log;      // JSONL sink, optional
};

struct ConvergenceStats {
  int rounds = 0;
  bool converged = false;
  std::vector<double> distances;  // mean message distance per round
  BmpsStats bmps;
};

// Block b dressed with its incoming messages: the h x w tile bordered by one
// message site per boundary bond, scalar corners, and nothing on sides that
// have no super edge.  r_off/c_off translate block cell (0,0) into dressed
// grid coordinates.
struct DressedBlock {
  FlatNetwork net;
  int r_off = 0, c_off = 0;
};

// skip = side whose message line is left out (open legs there); pass kNoSkip
// to dress all sides.
inline constexpr int kNoSkip = -1;
DressedBlock dressed_block(const FlatNetwork& net, const BlockPartition& part,
                           const MessageSet& msgs, int b, int skip = kNoSkip);

// Contract first/last sites (which must have trivial physical legs) into
// their neighbors; used to drop the corner contributions of a dressed grid.
Mps mps_strip_ends(Mps m, bool first, bool last);

// Outgoing message of block b through side s: the dressed grid without the
// side-s line, contracted into a unit-norm MPS over the crossing bonds.
Mps block_message(const FlatNetwork& net, const BlockPartition& part,
                  const MessageSet& msgs, int b, Side s,
                  const TruncationSpec& spec, uint64_t seed,
                  BmpsStats* stats = nullptr);

// Unit-norm product-state start; the stream for the message leaving block
// (r0,c0) through side s is derived from (r0, c0, s), so a 1x1 partition
// reproduces the site-level BP start bit for bit.
MessageSet random_messages(const FlatNetwork& net, const BlockPartition& part,
                           uint64_t seed);

// One Jacobi round: every directed super edge recomputed from the previous
// round's messages, then swapped in together.  Returns the mean message
// distance between old and new (2 - 2|<old,new>|, averaged over edges).
double blockbp_round(const FlatNetwork& net, const BlockPartition& part,
                     MessageSet& msgs, const EngineConfig& cfg, int round,
                     BmpsStats* stats = nullptr);

// Rounds until the distance drops below tol relative to the first round's
// distance, or max_rounds.  Non-convergence is reported, not fatal.
ConvergenceStats run_to_fixed_point(const FlatNetwork& net,
                                    const BlockPartition& part,
                                    MessageSet& msgs, const EngineConfig& cfg);

// Full contraction of a dressed block (block belief normalization).
ScaledScalar block_value(const DressedBlock& d, const TruncationSpec& spec,
                         uint64_t seed, BmpsStats* stats = nullptr);

// --- site-level belief propagation (blocks of one site) ------------------

// incoming[site][s] is a vector over the fused bond entering through side s.
struct PlainMessages {
  std::vector<std::array<DenseTensor, 4>> incoming;
};

PlainMessages random_plain_messages(const FlatNetwork& net, uint64_t seed);

// Jacobi round of m_{a->b} = T_a . (incoming on the other three sides),
// hermitized (double layer) and normalized.  Returns the mean distance.
double plain_bp_round(const FlatNetwork& net, PlainMessages& msgs);

// --- environments inside a dressed block ----------------------------------

// Row transfer environments along dressed row di, between boundary MPS
// `above` (rows < di, physical legs facing down) and `below` (rows > di,
// facing up).  Envs have legs [above bond, row bond, below bond]; left[c]
// covers columns < c, right[c] covers columns >= c.
DenseTensor row_env_boundary();
DenseTensor row_env_step_left(const DenseTensor& env, const DenseTensor& a,
                              const DenseTensor& t, const DenseTensor& b);
DenseTensor row_env_step_right(const DenseTensor& env, const DenseTensor& a,
                               const DenseTensor& t, const DenseTensor& b);

struct RowEnvs {
  std::vector<DenseTensor> left, right;
};
RowEnvs row_environments(const FlatNetwork& g, const Mps& above,
                         const Mps& below, int di);

// Environment of the horizontal pair at (di, c0)-(di, c0+1): everything but
// the two site tensors, legs [u_a, l_a, d_a, u_b, d_b, r_b], normalized to
// unit Frobenius norm (the overall scale carries no information here).
DenseTensor pair_environment(const DenseTensor& lenv, const DenseTensor& renv,
                             const Mps& above, const Mps& below, int c0);

// Convenience: boundary MPS stacks plus the pair environment in one call.
DenseTensor horizontal_bond_env(const FlatNetwork& g, int di, int c0,
                                const TruncationSpec& spec, uint64_t seed,
                                BmpsStats* stats = nullptr);

}  // namespace blockbp
