// Criterion 4: classical Ising magnetization through the dressed central
// block.  Deep in the ordered phase the 10x10 torus with 5x5 blocks must
// match the closed-form value, the disordered phase must give zero, and near
// the critical point the bias must shrink as blocks grow.

#include <cmath>

#include "blockbp/observables.hpp"
#include "harness.hpp"

namespace accept {

using namespace blockbp;

Outcome criterion4() {
  EngineConfig cfg;
  cfg.msg_trunc = {32, 1e-12};
  cfg.tol = 1e-8;
  cfg.max_rounds = 60;
  cfg.seed = 17;

  Lattice torus{10, 10, Boundary::kPeriodic};
  ClassicalResult ordered = classical_magnetization(torus, 0.6, 5, 5, cfg);
  double dev_ordered = std::abs(ordered.m - onsager_magnetization(0.6));
  if (!ordered.stats.converged || dev_ordered > 1e-3)
    return {Verdict::kFail,
            fmt("beta 0.6: |m - closed form| = %.2e (budget 1e-3, converged "
                "%d)",
                dev_ordered, ordered.stats.converged)};

  ClassicalResult disordered = classical_magnetization(torus, 0.2, 5, 5, cfg);
  if (!disordered.stats.converged || std::abs(disordered.m) > 1e-4)
    return {Verdict::kFail,
            fmt("beta 0.2: |m| = %.2e (budget 1e-4, converged %d)",
                std::abs(disordered.m), disordered.stats.converged)};

  // near criticality the closed form vanishes, so the deviation is the
  // magnetization itself; larger blocks must reduce it monotonically
  struct Geo {
    int lr, lc, bh, bw;
  };
  double prev = 2;
  std::string trend;
  for (const Geo& g : {Geo{12, 12, 3, 3}, Geo{10, 10, 5, 5}, Geo{14, 14, 7, 7}}) {
    Lattice lat{g.lr, g.lc, Boundary::kPeriodic};
    ClassicalResult res = classical_magnetization(lat, 0.44, g.bh, g.bw, cfg);
    double dev = std::abs(res.m - onsager_magnetization(0.44));
    trend += fmt("%s%.4f", trend.empty() ? "" : " > ", dev);
    if (!res.stats.converged || dev >= prev)
      return {Verdict::kFail,
              fmt("beta 0.44 deviation not decreasing: %s (blocks %dx%d)",
                  trend.c_str(), g.bh, g.bw)};
    prev = dev;
  }
  return {Verdict::kPass,
          fmt("beta 0.6 dev %.1e, beta 0.2 |m| %.1e, beta 0.44 deviation %s",
              dev_ordered, std::abs(disordered.m), trend.c_str())};
}

}  // namespace accept
