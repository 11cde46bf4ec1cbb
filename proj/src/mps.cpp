#include "blockbp/mps.hpp"

#include <cmath>

namespace blockbp {

index_t Mps::max_bond() const {
  index_t m = 1;
  for (const auto& s : sites) m = std::max(m, s.dim(2));
  return m;
}

void Mps::check() const {
  BBP_CHECK(!sites.empty(), "mps: empty");
  BBP_CHECK(sites.front().dim(0) == 1 && sites.back().dim(2) == 1,
            "mps: outer legs must have dimension 1");
  for (const auto& s : sites)
    BBP_CHECK(s.rank() == 3, "mps: site rank ", s.rank(), " != 3");
  for (int i = 0; i + 1 < length(); ++i)
    BBP_CHECK(sites[i].dim(2) == sites[i + 1].dim(0), "mps: bond mismatch at ", i);
}

DenseTensor Mps::to_dense() const {
  DenseTensor acc = sites[0];  // [l, p0, r]
  for (int i = 1; i < length(); ++i)
    acc = contract(acc, sites[i], {{acc.rank() - 1, 0}});
  // legs now [l, p0, ..., p_{L-1}, r] with l = r = 1
  Shape sh(acc.shape().begin() + 1, acc.shape().end() - 1);
  return acc.reshape(sh);
}

void Mpo::check() const {
  BBP_CHECK(!sites.empty(), "mpo: empty");
  BBP_CHECK(sites.front().dim(0) == 1 && sites.back().dim(3) == 1,
            "mpo: outer legs must have dimension 1");
  for (const auto& s : sites)
    BBP_CHECK(s.rank() == 4, "mpo: site rank ", s.rank(), " != 4");
  for (int i = 0; i + 1 < length(); ++i)
    BBP_CHECK(sites[i].dim(3) == sites[i + 1].dim(0), "mpo: bond mismatch at ", i);
}

ScaledScalar mps_overlap(const Mps& a, const Mps& b) {
  BBP_CHECK(a.length() == b.length(), "overlap: length mismatch");
  DenseTensor env({1, 1});
  env.at({0, 0}) = 1;
  double log_acc = 0;
  for (int i = 0; i < a.length(); ++i) {
    // env [la*, lb] ; conj(A)[la*, p, ra*] ; B[lb, p, rb]
    DenseTensor t = contract(env, a.sites[i].conj(), {{0, 0}});  // [lb, p, ra*]
    env = contract(t, b.sites[i], {{0, 0}, {1, 1}});             // [ra*, rb]
    double s = env.norm();
    if (s == 0) return ScaledScalar::from(0);
    env *= cplx(1.0 / s, 0);
    log_acc += std::log(s);
  }
  ScaledScalar out = ScaledScalar::from(env.at({0, 0}));
  out.log_mag += log_acc;
  return out;
}

double mps_log_norm2(const Mps& a) {
  ScaledScalar s = mps_overlap(a, a);
  if (s.is_zero()) return -std::numeric_limits<double>::infinity();
  return s.log_mag;
}

void mps_normalize(Mps& a) {
  double ln2 = mps_log_norm2(a);
  BBP_CHECK(std::isfinite(ln2), "normalize: zero mps");
  double per_site = std::exp(-ln2 / (2.0 * a.length()));
  for (auto& s : a.sites) s *= per_site;
}

double mps_mean_square_error(const Mps& a, const Mps& b) {
  double la = mps_log_norm2(a), lb = mps_log_norm2(b);
  bool za = !std::isfinite(la), zb = !std::isfinite(lb);
  if (za && zb) return 0.0;
  if (za || zb) return 2.0;
  ScaledScalar ov = mps_overlap(a, b);
  if (ov.is_zero()) return 2.0;
  double cosang = std::exp(ov.log_mag - 0.5 * la - 0.5 * lb);
  return std::max(0.0, 2.0 - 2.0 * std::min(1.0, cosang));
}

Mps random_message(const Shape& phys_dims, const Shape& ket_dims, uint64_t seed) {
  const bool dbl = !ket_dims.empty();
  BBP_CHECK(!dbl || ket_dims.size() == phys_dims.size(),
            "random_message: ket/phys size mismatch");
  std::vector<DenseTensor> sites;
  Rng rng(seed);
  for (size_t i = 0; i < phys_dims.size(); ++i) {
    index_t p = phys_dims[i];
    DenseTensor s({1, p, 1});
    if (dbl) {
      index_t d = ket_dims[i];
      BBP_CHECK(d * d == p, "random_message: phys dim ", p, " not ", d, "^2");
      DenseTensor m({d, d});
      m.fill_normal(rng);
      DenseTensor rho = contract(m, m.conj(), {{1, 1}});  // [ket, bra], psd
      for (index_t k = 0; k < p; ++k) s[k] = rho[k];
    } else {
      s.fill_uniform(rng);
    }
    double n = s.norm();
    if (n > 0) s *= cplx(1.0 / n, 0);
    sites.push_back(std::move(s));
  }
  Mps out(std::move(sites));
  return out;
}

Mpo mps_as_mpo(const Mps& m, const Shape& ket_dims) {
  BBP_CHECK(ket_dims.size() == static_cast<size_t>(m.length()),
            "mps_as_mpo: size mismatch");
  std::vector<DenseTensor> sites;
  for (int i = 0; i < m.length(); ++i) {
    index_t d = ket_dims[i];
    const DenseTensor& s = m.sites[i];
    BBP_CHECK(s.dim(1) == d * d, "mps_as_mpo: phys dim mismatch at ", i);
    sites.push_back(s.reshape({s.dim(0), d, d, s.dim(2)}));
  }
  return Mpo(std::move(sites));
}

Mps mpo_as_mps(const Mpo& m) {
  std::vector<DenseTensor> sites;
  for (const auto& s : m.sites)
    sites.push_back(s.reshape({s.dim(0), s.dim(1) * s.dim(2), s.dim(3)}));
  return Mps(std::move(sites));
}

Mps mpo_apply_exact(const Mpo& op, const Mps& x) {
  BBP_CHECK(op.length() == x.length(), "mpo_apply_exact: length mismatch");
  std::vector<DenseTensor> sites;
  for (int i = 0; i < x.length(); ++i) {
    const DenseTensor& o = op.sites[i];  // [lo, out, in, ro]
    const DenseTensor& s = x.sites[i];   // [lx, p, rx]
    DenseTensor y = contract(o, s, {{2, 1}});   // [lo, out, ro, lx, rx]
    y = y.permute({0, 3, 1, 2, 4});             // [lo, lx, out, ro, rx]
    sites.push_back(
        y.reshape({o.dim(0) * s.dim(0), o.dim(1), o.dim(3) * s.dim(2)}));
  }
  return Mps(std::move(sites));
}

}  // namespace blockbp
