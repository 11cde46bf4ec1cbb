#pragma once

#include <vector>

#include "blockbp/tensor.hpp"

namespace blockbp {

// Open-boundary matrix product state; site legs [left, phys, right].
// End sites carry explicit dimension-1 outer legs.
struct Mps {
  std::vector<DenseTensor> sites;

  Mps() = default;
  explicit Mps(std::vector<DenseTensor> s) : sites(std::move(s)) {}

  int length() const { return static_cast<int>(sites.size()); }
  index_t phys_dim(int i) const { return sites[i].dim(1); }
  index_t bond_dim(int i) const { return sites[i].dim(2); }  // right bond of i
  index_t max_bond() const;
  void check() const;  // leg count + bond matching

  // Full contraction into a tensor with legs [p_0, ..., p_{L-1}]
  // (outer dim-1 legs traced away).  Test/oracle sized inputs only.
  DenseTensor to_dense() const;
};

// Matrix product operator; site legs [left, out, in, right].
struct Mpo {
  std::vector<DenseTensor> sites;

  Mpo() = default;
  explicit Mpo(std::vector<DenseTensor> s) : sites(std::move(s)) {}

  int length() const { return static_cast<int>(sites.size()); }
  void check() const;
};

// <a|b> (a conjugated) with per-site rescaling; safe for long chains.
ScaledScalar mps_overlap(const Mps& a, const Mps& b);
double mps_log_norm2(const Mps& a);
// Scales every site by the same factor so the state has unit norm.
void mps_normalize(Mps& a);

// 2 - 2|<a,b>| for unit-normalized inputs; the phase is aligned away.
double mps_mean_square_error(const Mps& a, const Mps& b);

// Bond-dimension-1 initial message.  If ket_dims is nonempty the message is a
// double-layer object: site i has phys dim ket_dims[i]^2 holding the (ket,bra)
// fusion of M M^dag for a random square M, so it starts positive semidefinite.
// Otherwise entries are uniform in [0,1).  The result has unit norm.
Mps random_message(const Shape& phys_dims, const Shape& ket_dims, uint64_t seed);

// Reinterpret a fused double-layer MPS as an MPO (phys -> out,in per site).
Mpo mps_as_mpo(const Mps& m, const Shape& ket_dims);
Mps mpo_as_mps(const Mpo& m);

// Exact MPO application: bond dims multiply.  Oracle and small-case path.
Mps mpo_apply_exact(const Mpo& op, const Mps& x);

}  // namespace blockbp
