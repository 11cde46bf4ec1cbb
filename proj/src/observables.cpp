#include "blockbp/observables.hpp"

#include <Eigen/Dense>

#include "blockbp/rng.hpp"

namespace blockbp {

DenseTensor rdm_from_environment(const DenseTensor& env, const DenseTensor& pa,
                                 const DenseTensor& pb) {
  BBP_CHECK(env.rank() == 6 && pa.rank() == 5 && pb.rank() == 5,
            "rdm: bad ranks");
  index_t au = pa.dim(1), al = pa.dim(2), ad = pa.dim(3);
  index_t bu = pb.dim(1), bd = pb.dim(3), br = pb.dim(4);
  BBP_CHECK(env.dim(0) == au * au && env.dim(1) == al * al &&
                env.dim(2) == ad * ad && env.dim(3) == bu * bu &&
                env.dim(4) == bd * bd && env.dim(5) == br * br &&
                pa.dim(4) == pb.dim(2),
            "rdm: environment does not match the sites");
  DenseTensor e =
      env.reshape({au, au, al, al, ad, ad, bu, bu, bd, bd, br, br});
  DenseTensor x = contract(e, pa, {{0, 1}, {2, 2}, {4, 3}});
  // [uab, lab, dab, ubk, ubb, dbk, dbb, rbk, rbb, pa, m]
  x = contract(x, pa.conj(), {{0, 1}, {1, 2}, {2, 3}});
  // [ubk, ubb, dbk, dbb, rbk, rbb, pa, m, pa', m']
  x = contract(x, pb, {{0, 1}, {2, 3}, {4, 4}, {7, 2}});
  // [ubb, dbb, rbb, pa, pa', m', pb]
  x = contract(x, pb.conj(), {{0, 1}, {1, 3}, {2, 4}, {5, 2}});
  // [pa, pa', pb, pb']
  DenseTensor rho = x.permute({0, 2, 1, 3});
  DenseTensor dag = rho.conj().permute({2, 3, 0, 1});
  rho += dag;
  rho *= cplx(0.5, 0);
  cplx tr(0, 0);
  for (index_t p = 0; p < rho.dim(0); ++p)
    for (index_t q = 0; q < rho.dim(1); ++q) tr += rho.at({p, q, p, q});
  BBP_CHECK(std::abs(tr) > 0, "rdm: zero trace");
  rho *= cplx(1, 0) / tr;
  return rho;
}

DenseTensor rotate_site_cw(const DenseTensor& t) {
  return t.permute({0, 2, 3, 4, 1});
}

DenseTensor bond_rdm(const PepsNetwork& peps, const FlatNetwork& dl,
                     const BlockPartition& part, const MessageSet& msgs,
                     BondRef bond, const TruncationSpec& spec, uint64_t seed,
                     BmpsStats* stats) {
  const Lattice& lat = dl.lat;
  int b = part.block_of_site(bond.r, bond.c);
  const Block& blk = part.blocks[b];
  int i = lat.wrap_r(bond.r - blk.r0), j = lat.wrap_c(bond.c - blk.c0);
  DressedBlock d = dressed_block(dl, part, msgs, b);
  if (!bond.vertical) {
    BBP_CHECK(j + 1 < blk.w, "bond_rdm: bond (", bond.r, ",", bond.c,
              ")-right crosses blocks");
    DenseTensor env = horizontal_bond_env(d.net, d.r_off + i, d.c_off + j,
                                          spec, seed, stats);
    return rdm_from_environment(
        env, peps.site(bond.r, bond.c),
        peps.site(bond.r, lat.wrap_c(bond.c + 1)));
  }
  BBP_CHECK(i + 1 < blk.h, "bond_rdm: bond (", bond.r, ",", bond.c,
            ")-down crosses blocks");
  // quarter turn makes the vertical pair horizontal: left = lower site
  FlatNetwork rot = rotate_cw(d.net);
  int H = d.net.lat.rows;
  DenseTensor env = horizontal_bond_env(rot, d.c_off + j,
                                        H - 2 - (d.r_off + i), spec, seed,
                                        stats);
  DenseTensor lower = rotate_site_cw(peps.site(lat.wrap_r(bond.r + 1), bond.c));
  DenseTensor upper = rotate_site_cw(peps.site(bond.r, bond.c));
  DenseTensor rho = rdm_from_environment(env, lower, upper);
  return rho.permute({1, 0, 3, 2});
}

namespace {

Eigen::MatrixXcd as_matrix(const DenseTensor& t) {
  index_t n = t.dim(0) * t.dim(1);
  Eigen::MatrixXcd m(n, n);
  for (index_t r = 0; r < n; ++r)
    for (index_t c = 0; c < n; ++c)
      m(r, c) = t.at({r / t.dim(1), r % t.dim(1), c / t.dim(3), c % t.dim(3)});
  return m;
}

}  // namespace

double trace_distance(const DenseTensor& rho, const DenseTensor& sigma) {
  Eigen::MatrixXcd d = as_matrix(rho) - as_matrix(sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double bond_energy(const DenseTensor& rho, const DenseTensor& h) {
  DenseTensor s = contract(rho, h, {{0, 2}, {1, 3}, {2, 0}, {3, 1}});
  return s[0].real();
}

namespace {

double spin_of(index_t k) { return k == 0 ? 1.0 : -1.0; }

// impurity: 0 none, 1 factor s, 2 factor (-1)^{r+c} s
DenseTensor ising_site(const Lattice& lat, int r, int c, double beta,
                       double field, int impurity) {
  bool eu = lat.has_v_edge(r - 1, c), ed = lat.has_v_edge(r, c);
  bool el = lat.has_h_edge(r, c - 1), er = lat.has_h_edge(r, c);
  index_t du = eu ? 2 : 1, dd = ed ? 2 : 1;
  index_t dl = el ? 2 : 1, dr = er ? 2 : 1;
  double sgn = (r + c) % 2 == 0 ? 1.0 : -1.0;
  DenseTensor t({du, dl, dd, dr});
  for (index_t s = 0; s < 2; ++s) {
    double base = std::exp(beta * field * sgn * spin_of(s));
    if (impurity == 1) base *= spin_of(s);
    if (impurity == 2) base *= sgn * spin_of(s);
    index_t iu = eu ? s : 0, il = el ? s : 0;
    for (index_t d = 0; d < dd; ++d)
      for (index_t rr = 0; rr < dr; ++rr) {
        double w = base;
        if (ed) w *= std::exp(-beta * spin_of(s) * spin_of(d));
        if (er) w *= std::exp(-beta * spin_of(s) * spin_of(rr));
        t.at({iu, il, d, rr}) += w;
      }
  }
  return t;
}

}  // namespace

FlatNetwork classical_ising_network(const Lattice& lat, double beta,
                                    double staggered_field) {
  FlatNetwork net;
  net.lat = lat;
  net.sites.resize(lat.nsites());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c)
      net.site(r, c) = ising_site(lat, r, c, beta, staggered_field, 0);
  return net;
}

DenseTensor classical_ising_impurity(const Lattice& lat, int r, int c,
                                     double beta, double staggered_field,
                                     bool staggered_sign) {
  return ising_site(lat, r, c, beta, staggered_field, staggered_sign ? 2 : 1);
}

double onsager_magnetization(double beta) {
  double sh = std::sinh(2.0 * beta);
  if (sh <= 1.0) return 0.0;
  return std::pow(1.0 - std::pow(sh, -4.0), 0.125);
}

namespace {

// Product-state message start polarized along the + staggered branch.  Every
// leg of a bond indexes the spin of the bond's head site (the site weights
// put s on up/left legs and the neighbor's spin on down/right legs), so one
// tilted vector per bond serves both directions.  The disordered phase
// forgets the tilt; the ordered phase keeps the branch it names.
MessageSet polarized_messages(const FlatNetwork& net,
                              const BlockPartition& part) {
  MessageSet ms;
  ms.incoming.resize(part.nblocks());
  for (int b = 0; b < part.nblocks(); ++b)
    for (int si = 0; si < 4; ++si) {
      Side s{si};
      if (!part.has_edge(b, s)) continue;
      std::vector<DenseTensor> sites;
      for (const Bond& bond : part.edge(b, s).bonds) {
        int hr = bond.dir == Side::kDown ? net.lat.wrap_r(bond.r + 1) : bond.r;
        int hc = bond.dir == Side::kRight ? net.lat.wrap_c(bond.c + 1) : bond.c;
        index_t d = net.site(bond.r, bond.c).dim(int(bond.dir));
        DenseTensor v({1, d, 1});
        if (d == 2) {
          double t = (hr + hc) % 2 == 0 ? 1.0 : -1.0;
          double n = std::sqrt(std::exp(2.0 * t) + std::exp(-2.0 * t));
          v.at({0, 0, 0}) = std::exp(t) / n;
          v.at({0, 1, 0}) = std::exp(-t) / n;
        } else {
          for (index_t k = 0; k < d; ++k)
            v.at({0, k, 0}) = 1.0 / std::sqrt(double(d));
        }
        sites.push_back(std::move(v));
      }
      ms.at(b, s) = Mps(std::move(sites));
    }
  return ms;
}

}  // namespace

ClassicalResult classical_magnetization(const Lattice& lat, double beta,
                                        int bh, int bw, const EngineConfig& cfg,
                                        double staggered_field) {
  FlatNetwork net = classical_ising_network(lat, beta, staggered_field);
  BlockPartition part = partition_blocks(lat, bh, bw);
  MessageSet msgs = polarized_messages(net, part);
  ClassicalResult res;
  res.stats = run_to_fixed_point(net, part, msgs, cfg);
  int b = part.block_id(part.brows / 2, part.bcols / 2);
  DressedBlock d = dressed_block(net, part, msgs, b);
  uint64_t vseed = derive_seed(cfg.seed, "classical_value", {b});
  ScaledScalar z = block_value(d, cfg.msg_trunc, vseed);
  BBP_CHECK(!z.is_zero(), "classical: dressed block contracts to zero");
  double sum = 0;
  for (int i = 0; i < part.blocks[b].h; ++i)
    for (int j = 0; j < part.blocks[b].w; ++j) {
      auto [r, c] = part.cell(b, i, j);
      DressedBlock imp = d;
      imp.net.site(d.r_off + i, d.c_off + j) =
          classical_ising_impurity(lat, r, c, beta, staggered_field,
                                   /*staggered_sign=*/true);
      sum += (block_value(imp, cfg.msg_trunc, vseed) / z).value().real();
    }
  res.m = sum / (part.blocks[b].h * part.blocks[b].w);
  return res;
}

}  // namespace blockbp
