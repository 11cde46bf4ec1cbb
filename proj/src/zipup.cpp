#include "blockbp/zipup.hpp"

#include <cmath>

namespace blockbp {

DenseTensor ZipUpEnvs::boundary() {
  DenseTensor b({1, 1, 1});
  b[0] = 1;
  return b;
}

DenseTensor ZipUpEnvs::step_left(const DenseTensor& env, const DenseTensor& y,
                                 const DenseTensor& o, const DenseTensor& x) {
  DenseTensor t = contract(env, y.conj(), {{0, 0}});   // [ol, xl, pout, yr]
  t = contract(t, o, {{0, 0}, {2, 1}});                // [xl, yr, pin, or]
  return contract(t, x, {{0, 0}, {2, 1}});             // [yr, or, xr]
}

DenseTensor ZipUpEnvs::step_right(const DenseTensor& env, const DenseTensor& y,
                                  const DenseTensor& o, const DenseTensor& x) {
  DenseTensor t = contract(y.conj(), env, {{2, 0}});   // [yl, pout, or, xr]
  t = contract(t, o, {{1, 1}, {2, 3}});                // [yl, xr, ol, pin]
  return contract(t, x, {{1, 2}, {3, 1}});             // [yl, ol, xl]
}

DenseTensor ZipUpEnvs::local_update(const DenseTensor& lenv, const DenseTensor& o,
                                    const DenseTensor& x, const DenseTensor& renv) {
  DenseTensor t = contract(lenv, x, {{2, 0}});         // [yl, ol, pin, xr]
  t = contract(t, o, {{1, 0}, {2, 2}});                // [yl, xr, pout, or]
  return contract(t, renv, {{1, 2}, {3, 1}});          // [yl, pout, yr]
}

namespace {

constexpr index_t kDimClamp = index_t(1) << 40;

index_t clamped_mul(index_t a, index_t b) {
  if (a > kDimClamp / b) return kDimClamp;
  return a * b;
}

}  // namespace

Mps zip_up_apply(const Mpo& op, const Mps& x, const TruncationSpec& spec,
                 uint64_t seed, ZipUpReport* report, double tol, int max_sweeps) {
  BBP_CHECK(op.length() == x.length(), "zip_up: length mismatch");
  const int L = x.length();
  Shape d(L);  // output physical dims
  for (int l = 0; l < L; ++l) {
    BBP_CHECK(op.sites[l].dim(2) == x.sites[l].dim(1),
              "zip_up: phys dim mismatch at site ", l);
    d[l] = op.sites[l].dim(1);
  }
  // Bond caps: requested rank, exact rank of op|x>, and the dimensions
  // reachable from either chain end.  All four caps are QR/LQ-consistent.
  Shape b(L + 1, 1);
  index_t run = 1;
  for (int l = 1; l < L; ++l) {
    run = clamped_mul(run, d[l - 1]);
    index_t ox = op.sites[l - 1].dim(3) * x.sites[l - 1].dim(2);
    b[l] = std::min(run, ox);
  }
  run = 1;
  for (int l = L - 1; l >= 1; --l) {
    run = clamped_mul(run, d[l]);
    b[l] = std::min(b[l], run);
    if (spec.max_rank > 0) b[l] = std::min(b[l], spec.max_rank);
  }

  Mps y;
  Rng rng(seed);
  for (int l = 0; l < L; ++l) {
    DenseTensor s({b[l], d[l], b[l + 1]});
    s.fill_normal(rng);
    y.sites.push_back(std::move(s));
  }
  // Right-canonicalize so every local update is an orthogonal projection.
  for (int l = L - 1; l >= 1; --l) {
    auto [lo, q] = lq_split(y.sites[l], {0});
    y.sites[l] = std::move(q);
    y.sites[l - 1] = contract(y.sites[l - 1], lo, {{2, 0}});
  }

  ZipUpEnvs envs;
  envs.left.assign(L + 1, DenseTensor());
  envs.right.assign(L + 1, DenseTensor());
  envs.left[0] = ZipUpEnvs::boundary();
  envs.right[L] = ZipUpEnvs::boundary();
  for (int l = L - 1; l >= 1; --l)
    envs.right[l] = ZipUpEnvs::step_right(envs.right[l + 1], y.sites[l],
                                          op.sites[l], x.sites[l]);

  ZipUpReport local;
  ZipUpReport& rep = report ? *report : local;
  rep = ZipUpReport{};

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    std::vector<double> sweep_loss;
    for (int l = 0; l < L; ++l) {
      DenseTensor yt = ZipUpEnvs::local_update(envs.left[l], op.sites[l],
                                               x.sites[l], envs.right[l + 1]);
      sweep_loss.push_back(-yt.norm2());
      if (l + 1 < L) {
        auto [q, r] = qr_split(yt, {0, 1});
        y.sites[l] = std::move(q);
        envs.left[l + 1] = ZipUpEnvs::step_left(envs.left[l], y.sites[l],
                                                op.sites[l], x.sites[l]);
      } else {
        y.sites[l] = std::move(yt);
      }
    }
    for (int l = L - 1; l >= 0; --l) {
      DenseTensor yt = ZipUpEnvs::local_update(envs.left[l], op.sites[l],
                                               x.sites[l], envs.right[l + 1]);
      sweep_loss.push_back(-yt.norm2());
      if (l > 0) {
        auto [lo, q] = lq_split(yt, {0});
        y.sites[l] = std::move(q);
        envs.right[l] = ZipUpEnvs::step_right(envs.right[l + 1], y.sites[l],
                                              op.sites[l], x.sites[l]);
      } else {
        y.sites[l] = std::move(yt);
      }
    }
    rep.loss.insert(rep.loss.end(), sweep_loss.begin(), sweep_loss.end());
    rep.sweeps = sweep + 1;
    double mean = 0;
    for (double v : sweep_loss) mean += v;
    mean /= sweep_loss.size();
    double var = 0;
    for (double v : sweep_loss) var += (v - mean) * (v - mean);
    var /= sweep_loss.size();
    if (std::sqrt(var) <= tol * std::abs(mean)) {
      rep.converged = true;
      break;
    }
  }
  return y;
}

}  // namespace blockbp
