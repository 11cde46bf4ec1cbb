#pragma once

// Acceptance checks: one self-contained criterion per function, each
// returning a verdict plus the measured numbers that justify it.  The
// binary prints exactly one line per criterion and exits nonzero if any
// executed criterion fails.

#include <string>

#include "blockbp/groundstate.hpp"

namespace accept {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict = Verdict::kFail;
  std::string detail;  // measured numbers backing the verdict
};

// printf-style convenience for detail strings
std::string fmt(const char* f, ...);

// |+>^N product state, the natural transverse-field start
blockbp::PepsNetwork xpol_peps(const blockbp::Lattice& lat);

// one imaginary-time phase per (dtau, sweeps) entry, seeds re-derived per
// phase; returns the evolved state
struct Phase {
  double dtau;
  int sweeps;
};
blockbp::PepsNetwork evolve_phases(blockbp::PepsNetwork peps,
                                   blockbp::EvolutionConfig cfg,
                                   const std::vector<Phase>& phases,
                                   bool infinite = false);

Outcome criterion1();
Outcome criterion2();
Outcome criterion3();
Outcome criterion4();
Outcome criterion5();
Outcome criterion6();
Outcome criterion7();
Outcome criterion8();
Outcome criterion9();
Outcome criterion10();

}  // namespace accept
