#pragma once

#include "blockbp/engine.hpp"
#include "blockbp/gates.hpp"

namespace blockbp {

// rho[pa, pb, pa', pb'] of the pair from its fused 6-leg environment
// [u_a, l_a, d_a, u_b, d_b, r_b] and the two single-layer site tensors
// [p, u, l, d, r]; hermitized and trace-normalized.
DenseTensor rdm_from_environment(const DenseTensor& env, const DenseTensor& pa,
                                 const DenseTensor& pb);

// A nearest-neighbor bond named by its first site; the partner is the right
// (or down) neighbor.
struct BondRef {
  int r = 0, c = 0;
  bool vertical = false;
};

// Reduced density matrix of a bond interior to its block, built from the
// dressed block of the converged messages.  pa is site (r,c), pb the partner.
DenseTensor bond_rdm(const PepsNetwork& peps, const FlatNetwork& dl,
                     const BlockPartition& part, const MessageSet& msgs,
                     BondRef bond, const TruncationSpec& spec, uint64_t seed,
                     BmpsStats* stats = nullptr);

// (1/2) sum |eig(rho - sigma)| for two hermitian [pa,pb,pa',pb'] matrices.
double trace_distance(const DenseTensor& rho, const DenseTensor& sigma);

// Tr(rho h); real part (both operands hermitian up to rounding).
double bond_energy(const DenseTensor& rho, const DenseTensor& h);

// Site (r,c) of a PEPS rotated a quarter turn clockwise, [p,u,l,d,r] legs.
DenseTensor rotate_site_cw(const DenseTensor& t);

// --- classical Ising --------------------------------------------------------

// Tensor network for Z = sum_s exp(-beta H), H = sum_<ij> s_i s_j with
// s = +-1 (antiferromagnet) plus a staggered field h: the on-site weight is
// exp(beta * h * (-1)^{r+c} * s).  Bond weights sit on the down/right legs.
FlatNetwork classical_ising_network(const Lattice& lat, double beta,
                                    double staggered_field = 0.0);

// Same site tensor with an extra factor s (or (-1)^{r+c} s when staggered),
// so Z_imp / Z is the (staggered) magnetization at (r,c).
DenseTensor classical_ising_impurity(const Lattice& lat, int r, int c,
                                     double beta, double staggered_field,
                                     bool staggered_sign);

// Spontaneous magnetization of the square-lattice Ising model; zero above
// the critical point sinh(2 beta) = 1.
double onsager_magnetization(double beta);

// Staggered magnetization at the message fixed point: Z_imp / Z of the
// dressed central block, averaged over the block's sites.  The staggered
// field picks the + branch of the broken symmetry below the critical point.
struct ClassicalResult {
  double m = 0;
  ConvergenceStats stats;
};
ClassicalResult classical_magnetization(const Lattice& lat, double beta,
                                        int bh, int bw, const EngineConfig& cfg,
                                        double staggered_field = 1e-6);

}  // namespace blockbp
