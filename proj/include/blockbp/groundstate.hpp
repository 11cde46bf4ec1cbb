#pragma once

#include "blockbp/engine.hpp"
#include "blockbp/gates.hpp"
#include "blockbp/observables.hpp"

namespace blockbp {

// Imaginary-time ground-state search: per sweep, every nearest-neighbor gate
// is applied once (first-order splitting).  Bonds are owned by the first
// offset whose block contains both endpoints; each offset gets fresh random
// messages driven to their fixed point before its gates run.  Blocks of one
// site fall back to separable message environments with interleaved bond
// groups.
struct EvolutionConfig {
  ModelSpec model = ModelSpec::heisenberg();
  double dtau = 0.01;
  int sweeps = 100;
  index_t bond_dim = 2;       // PEPS bond cap (D)
  TruncationSpec msg_trunc;   // message cap (chi_m)
  TruncationSpec env_trunc;   // environment cap (chi)
  double svd_cutoff = 1e-12;  // relative cutoff when splitting pairs
  int block_h = 2, block_w = 2;
  std::vector<std::pair<int, int>> offsets;  // empty: (0,0) and the half shift
  double bp_tol = 1e-5;
  int bp_max_rounds = 10;
  int als_max_iters = 20;
  double als_rtol = 1e-10;
  double ridge = 1e-12;
  int measure_every = 1;  // sweeps between energy evaluations; 0 = final only
  uint64_t seed = 0;
  ThreadPool* pool = nullptr;
  std::function<void(const std::string&)> log;  // JSONL sink
};

struct SweepRecord {
  int sweep = 0;  // 0 is the initial state
  double energy = 0;
  double per_site = 0;
};

// One message fixed-point run during a sweep (per offset, or per gate group
// when blocks are single sites).
struct BpRecord {
  int sweep = 0;
  int offset = 0;
  int rounds = 0;
  bool converged = false;
  double ratio = 0;  // last round's distance over the first round's
};

struct EnergyReport {
  double total = 0;
  double per_site = 0;
  int bonds = 0;
  int bp_runs = 0;
  int unconverged_bp = 0;
};

struct EvolutionResult {
  PepsNetwork peps;
  std::vector<SweepRecord> trace;
  std::vector<BpRecord> bp_trace;
  double energy = 0;
  int unconverged_bp = 0;
};

// <H> of the state by blockBP bond density matrices; `tag` separates the
// seed streams of repeated measurements.
EnergyReport measure_energy(const PepsNetwork& peps, const EvolutionConfig& cfg,
                            long tag = 0);

// <H> from full-lattice boundary-MPS environments, no message passing; open
// boundaries only.
EnergyReport measure_energy_bmps(const PepsNetwork& peps,
                                 const EvolutionConfig& cfg);
// Same machinery restricted to bonds whose first site lies in the h x w
// window at (r0, c0); total sums those bonds only.
EnergyReport measure_energy_bmps_window(const PepsNetwork& peps,
                                        const EvolutionConfig& cfg, int r0,
                                        int c0, int h, int w);

EvolutionResult run_ground_state(const PepsNetwork& init,
                                 const EvolutionConfig& cfg);

// --- infinite lattice -------------------------------------------------------
// A translation-invariant state is carried as its periodic unit cell.  Tiling
// the cell k times per axis onto a torus and keeping one block turns the four
// block sides into directed self edges, which reproduces the infinite-lattice
// message equations; energies come from one representative bond per cell bond
// class next to the block center.  Reported totals are per unit cell.
EnergyReport measure_energy_infinite(const PepsNetwork& cell,
                                     const EvolutionConfig& cfg, int k,
                                     long tag = 0);

// Crosscheck route: the cell tiled (k+1) times per axis into an open network
// with random boundary vectors, the central cell-sized window evaluated by
// boundary MPS alone.
EnergyReport measure_energy_tiled_bmps(const PepsNetwork& cell,
                                       const EvolutionConfig& cfg, int k,
                                       long tag = 0);

// Imaginary-time evolution of the unit cell.  Per sweep and offset the cell
// is tiled onto a single block of cfg.block_h x cfg.block_w sites, messages
// are re-converged, the offset's gates act on the central cell-sized window
// through dressed environments, and the window becomes the new cell.  Offsets
// shift the cell embedding; the defaults cover every bond class.
EvolutionResult run_ground_state_infinite(const PepsNetwork& init,
                                          const EvolutionConfig& cfg);

// ALS fit of gate applied to the pair a--b under the fused 6-leg environment
// [u_a,l_a,d_a,u_b,d_b,r_b]; the pair is replaced in place, its bond capped
// at dmax, and rescaled to unit environment norm.
struct PairUpdate {
  int iters = 0;
  bool converged = false;
  double loss = 0;
  bool ridge_used = false;
  double clipped = 0;  // weight removed projecting the environment to psd
};
PairUpdate full_update_pair(const DenseTensor& env6, DenseTensor& a,
                            DenseTensor& b, const DenseTensor& gate,
                            index_t dmax, const EvolutionConfig& cfg);

// Product environment of one-site-block messages around a horizontal pair.
DenseTensor separable_pair_env(const DenseTensor& ua, const DenseTensor& la,
                               const DenseTensor& da, const DenseTensor& ub,
                               const DenseTensor& db, const DenseTensor& rb);

}  // namespace blockbp
