#include <cstdarg>
#include <cstdio>

#include "blockbp/rng.hpp"
#include "harness.hpp"

namespace accept {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

blockbp::PepsNetwork xpol_peps(const blockbp::Lattice& lat) {
  double s = 1.0 / std::sqrt(2.0);
  std::vector<std::vector<blockbp::cplx>> vecs(lat.nsites(),
                                               {blockbp::cplx(s), blockbp::cplx(s)});
  return product_peps(lat, vecs);
}

blockbp::PepsNetwork evolve_phases(blockbp::PepsNetwork peps,
                                   blockbp::EvolutionConfig cfg,
                                   const std::vector<Phase>& phases,
                                   bool infinite) {
  uint64_t base = cfg.seed;
  for (size_t i = 0; i < phases.size(); ++i) {
    cfg.dtau = phases[i].dtau;
    cfg.sweeps = phases[i].sweeps;
    cfg.seed = blockbp::derive_seed(base, "phase", {(long)i});
    blockbp::EvolutionResult r = infinite
                                     ? run_ground_state_infinite(peps, cfg)
                                     : run_ground_state(peps, cfg);
    peps = std::move(r.peps);
  }
  return peps;
}

}  // namespace accept
