#pragma once

#include "blockbp/lattice.hpp"
#include "blockbp/tensor.hpp"

namespace blockbp {

enum class ModelKind { kTransverseIsing, kHeisenbergAF };

struct ModelSpec {
  ModelKind kind = ModelKind::kHeisenbergAF;
  double coupling = 1.0;  // J
  double field = 0.0;     // transverse field B (Ising only)

  index_t phys_dim() const { return 2; }
  static ModelSpec transverse_ising(double b) {
    return {ModelKind::kTransverseIsing, 1.0, b};
  }
  static ModelSpec heisenberg() { return {ModelKind::kHeisenbergAF, 1.0, 0.0}; }
};

// 2x2 single-site operators.
DenseTensor pauli_x();
DenseTensor pauli_y();
DenseTensor pauli_z();
DenseTensor identity2();
DenseTensor identity_op(index_t d);

// Bond term h_ij as [pi_out, pj_out, pi_in, pj_in], with the single-site
// field split onto bonds by the given endpoint weights (1/coordination):
//   Ising:      -J sz.sz - B (wi sx x 1 + wj 1 x sx)
//   Heisenberg:  J (S.S)                         (antiferromagnetic, J > 0)
DenseTensor bond_hamiltonian(const ModelSpec& model, double wi, double wj);

// exp(-dtau * h) of a hermitian two-site term, same leg layout.
DenseTensor bond_exponential(const DenseTensor& h, double dtau);

// Number of lattice edges touching (r,c).
int coordination(const Lattice& lat, int r, int c);

struct TwoSiteGate {
  Bond bond;          // site (r,c) and direction kRight or kDown
  DenseTensor gate;   // [pi_out, pj_out, pi_in, pj_in]
  DenseTensor hterm;  // the bond hamiltonian it exponentiates
};

// One imaginary-time gate per lattice edge; field terms are absorbed into
// the bonds with 1/coordination weights so each site's field sums to B.
std::vector<TwoSiteGate> trotter_gates(const ModelSpec& model,
                                       const Lattice& lat, double dtau);

}  // namespace blockbp
