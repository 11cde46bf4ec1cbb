#include "blockbp/bmps.hpp"

namespace blockbp {

namespace {

// rotations taking `from` to the left side of the working grid
int turns_for(Side from) {
  switch (from) {
    case Side::kLeft: return 0;
    case Side::kDown: return 1;
    case Side::kRight: return 2;
    case Side::kUp: return 3;
  }
  fail("bmps: bad side");
}

// after rotating, the working grid rows run in the canonical order of the
// original side except for these two, which come out reversed
bool needs_reverse(Side from) {
  return from == Side::kRight || from == Side::kUp;
}

FlatNetwork rotated(const FlatNetwork& net, int turns) {
  FlatNetwork out = net;
  for (int i = 0; i < turns; ++i) out = rotate_cw(out);
  return out;
}

// column c as an MPO running top to bottom: in legs face left, out right
Mpo column_mpo(const FlatNetwork& net, int c) {
  Mpo o;
  for (int r = 0; r < net.lat.rows; ++r)
    o.sites.push_back(net.site(r, c).permute({0, 3, 1, 2}));
  return o;
}

}  // namespace

Mps mps_reverse(const Mps& m) {
  Mps out;
  for (int i = m.length() - 1; i >= 0; --i)
    out.sites.push_back(m.sites[i].permute({2, 1, 0}));
  return out;
}

BoundaryMps bmps_trivial(const FlatNetwork& net, Side from) {
  FlatNetwork work = rotated(net, turns_for(from));
  BoundaryMps b;
  for (int r = 0; r < work.lat.rows; ++r) {
    index_t l = work.site(r, 0).dim(1);
    BBP_CHECK(l == 1, "bmps: side ", side_name(from),
              " has a nontrivial outward leg at line position ", r);
    DenseTensor s({1, 1, 1});
    s[0] = 1;
    b.mps.sites.push_back(std::move(s));
  }
  if (needs_reverse(from)) b.mps = mps_reverse(b.mps);
  return b;
}

BoundaryMps bmps_extend(BoundaryMps b, const FlatNetwork& net, Side from,
                        int first, int count, const TruncationSpec& spec,
                        uint64_t seed, BmpsStats* stats) {
  FlatNetwork work = rotated(net, turns_for(from));
  BBP_CHECK(first >= 0 && first + count <= work.lat.cols,
            "bmps: line range [", first, ",", first + count, ") out of ",
            work.lat.cols);
  Mps cur = needs_reverse(from) ? mps_reverse(b.mps) : std::move(b.mps);
  for (int c = first; c < first + count; ++c) {
    Mpo col = column_mpo(work, c);
    ZipUpReport rep;
    cur = zip_up_apply(col, cur, spec, derive_seed(seed, "zip_line", {c}), &rep);
    if (stats) {
      ++stats->zips;
      if (!rep.converged) ++stats->unconverged_zips;
    }
    double ln2 = mps_log_norm2(cur);
    BBP_CHECK(std::isfinite(ln2), "bmps: boundary collapsed to zero at line ", c);
    double per_site = std::exp(-ln2 / (2.0 * cur.length()));
    for (auto& s : cur.sites) s *= per_site;
    b.log_scale += ln2 / 2.0;
  }
  b.mps = needs_reverse(from) ? mps_reverse(cur) : std::move(cur);
  return b;
}

BoundaryMps bmps_contract(const FlatNetwork& net, Side from, int nlines,
                          const TruncationSpec& spec, uint64_t seed,
                          BmpsStats* stats) {
  return bmps_extend(bmps_trivial(net, from), net, from, 0, nlines, spec, seed,
                     stats);
}

ScaledScalar mps_scalar_value(const Mps& m) {
  DenseTensor env({1});
  env[0] = 1;
  double log_acc = 0;
  for (const auto& s : m.sites) {
    BBP_CHECK(s.dim(1) == 1, "mps_scalar_value: open physical leg");
    env = contract(env, s.reshape({s.dim(0), s.dim(2)}), {{0, 0}});
    double n = env.norm();
    if (n == 0) return ScaledScalar::from(0);
    env *= cplx(1.0 / n, 0);
    log_acc += std::log(n);
  }
  ScaledScalar out = ScaledScalar::from(env[0]);
  out.log_mag += log_acc;
  return out;
}

ScaledScalar bmps_value(const FlatNetwork& net, const TruncationSpec& spec,
                        uint64_t seed, BmpsStats* stats) {
  BoundaryMps b = bmps_contract(net, Side::kLeft, net.lat.cols, spec, seed, stats);
  ScaledScalar v = mps_scalar_value(b.mps);
  v.log_mag += b.log_scale;
  return v;
}

}  // namespace blockbp
