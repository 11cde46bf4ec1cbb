// Criterion 3: the zip-up fit reproduces exact operator application at full
// rank, its loss never increases between full sweeps, and the default
// stopping rule is in force when no arguments are passed.

#include <cmath>

#include "blockbp/rng.hpp"
#include "blockbp/zipup.hpp"
#include "harness.hpp"

namespace accept {
namespace {

using namespace blockbp;

Mps random_mps(const std::vector<index_t>& phys, Rng& rng) {
  int L = int(phys.size());
  std::vector<index_t> bonds(L + 1, 1);
  for (int i = 1; i < L; ++i) bonds[i] = 1 + index_t(rng.uniform() * 3);
  std::vector<DenseTensor> sites;
  for (int i = 0; i < L; ++i) {
    DenseTensor t({bonds[i], phys[i], bonds[i + 1]});
    t.fill_normal(rng);
    t *= 1.0 / t.norm();
    sites.push_back(std::move(t));
  }
  return Mps(std::move(sites));
}

Mpo random_mpo(const std::vector<index_t>& phys, Rng& rng) {
  int L = int(phys.size());
  std::vector<index_t> bonds(L + 1, 1);
  for (int i = 1; i < L; ++i) bonds[i] = 1 + index_t(rng.uniform() * 3);
  std::vector<DenseTensor> sites;
  for (int i = 0; i < L; ++i) {
    DenseTensor t({bonds[i], phys[i], phys[i], bonds[i + 1]});
    t.fill_normal(rng);
    t *= 1.0 / t.norm();
    sites.push_back(std::move(t));
  }
  return Mpo(std::move(sites));
}

// per-sweep mean loss; the report stores every local update in order
bool sweep_means_nonincreasing(const ZipUpReport& rep, int L) {
  int per = 2 * L;
  double prev = 0;
  for (int s = 0; s < rep.sweeps; ++s) {
    double mean = 0;
    for (int i = 0; i < per; ++i) mean += rep.loss[s * per + i];
    mean /= per;
    if (s > 0 && mean > prev + 1e-12 * std::abs(prev)) return false;
    prev = mean;
  }
  return true;
}

}  // namespace

Outcome criterion3() {
  int trials = 0, monotone = 0;
  double worst_fid = 1, worst_sigma = 0;
  int max_sweeps_seen = 0;
  for (int t = 0; t < 90; ++t) {
    Rng rng(5, "c3", {t});
    int L = 2 + int(rng.uniform() * 5);  // 2..6
    std::vector<index_t> phys;
    for (int i = 0; i < L; ++i) phys.push_back(2 + index_t(rng.uniform() * 2));
    Mps x = random_mps(phys, rng);
    Mpo op = random_mpo(phys, rng);
    bool capped = t >= 60;  // last third exercises truncation
    TruncationSpec spec = capped ? TruncationSpec{2, 1e-14}
                                 : TruncationSpec{TruncationSpec::kUnlimited,
                                                  1e-14};
    ZipUpReport rep;
    Mps y = zip_up_apply(op, x, spec, derive_seed(5, "c3y", {t}), &rep);
    max_sweeps_seen = std::max(max_sweeps_seen, rep.sweeps);
    if (rep.sweeps > 10)
      return {Verdict::kFail, fmt("sweep budget exceeded: %d", rep.sweeps)};
    if (sweep_means_nonincreasing(rep, L)) ++monotone;
    if (rep.converged) {
      int per = 2 * L;
      double mean = 0, var = 0;
      for (int i = 0; i < per; ++i)
        mean += rep.loss[(rep.sweeps - 1) * per + i];
      mean /= per;
      for (int i = 0; i < per; ++i) {
        double d = rep.loss[(rep.sweeps - 1) * per + i] - mean;
        var += d * d;
      }
      worst_sigma =
          std::max(worst_sigma, std::sqrt(var / per) / std::abs(mean));
    }
    if (!capped) {
      Mps exact = mpo_apply_exact(op, x);
      ScaledScalar ov = mps_overlap(y, exact);
      double logfid =
          2 * ov.log_mag - mps_log_norm2(y) - mps_log_norm2(exact);
      worst_fid = std::min(worst_fid, std::exp(logfid));
    }
    ++trials;
  }
  if (worst_fid < 1 - 1e-10)
    return {Verdict::kFail,
            fmt("full-rank fidelity %.12f < 1 - 1e-10", worst_fid)};
  if (monotone != trials)
    return {Verdict::kFail,
            fmt("loss increased between sweeps in %d of %d trials",
                trials - monotone, trials)};
  if (worst_sigma > 1e-6)
    return {Verdict::kFail,
            fmt("converged with loss spread %.2e > 1e-6", worst_sigma)};
  return {Verdict::kPass,
          fmt("%d trials: min fidelity %.3e below 1, monotone %d/%d, max "
              "sweeps %d, max converged spread %.1e",
              trials, 1 - worst_fid, monotone, trials, max_sweeps_seen,
              worst_sigma)};
}

}  // namespace accept
