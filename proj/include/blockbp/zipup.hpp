#pragma once

#include "blockbp/mps.hpp"

namespace blockbp {

// Left/right environment stacks for the alternating-least-squares fit of
// |y> ~= op|x>.  left[l] covers sites < l, right[l] covers sites > l; both
// boundary entries are scalar 1 tensors of shape [1,1,1] with legs
// (y bond, op bond, x bond).  The y tensors enter conjugated.
struct ZipUpEnvs {
  std::vector<DenseTensor> left, right;

  static DenseTensor boundary();
  // env extended across one site: y (conjugated inside), o, x as stored.
  static DenseTensor step_left(const DenseTensor& env, const DenseTensor& y,
                               const DenseTensor& o, const DenseTensor& x);
  static DenseTensor step_right(const DenseTensor& env, const DenseTensor& y,
                                const DenseTensor& o, const DenseTensor& x);
  // Optimal local tensor A_l . O_l X_l . B_l given both environments.
  static DenseTensor local_update(const DenseTensor& lenv, const DenseTensor& o,
                                  const DenseTensor& x, const DenseTensor& renv);
};

struct ZipUpReport {
  int sweeps = 0;          // full (left-right plus right-left) passes
  bool converged = false;
  std::vector<double> loss;  // -|y_l|^2 after every local update, in order
};

// Fits op|x> by an MPS whose bond dimension is capped by spec.max_rank,
// sweeping until the loss stabilizes (relative spread below tol) or
// max_sweeps is hit.  The seed controls the random starting state.
Mps zip_up_apply(const Mpo& op, const Mps& x, const TruncationSpec& spec,
                 uint64_t seed, ZipUpReport* report = nullptr,
                 double tol = 1e-6, int max_sweeps = 10);

}  // namespace blockbp
