#include "blockbp/groundstate.hpp"

#include <Eigen/Dense>
#include <map>

#include "json.hpp"

namespace blockbp {

namespace {

using RowMat =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Environment as an operator ket -> bra: hermitize and clip negative
// eigenvalues; returns the rank-12 form with (ket, bra) interleaved per leg.
DenseTensor psd_project_env(const DenseTensor& env6, const Shape& kets,
                            double* clipped) {
  Shape unf;
  index_t n = 1;
  for (index_t k : kets) {
    unf.push_back(k);
    unf.push_back(k);
    n *= k;
  }
  DenseTensor e = env6.reshape(unf).permute(
      {0, 2, 4, 6, 8, 10, 1, 3, 5, 7, 9, 11});  // [kets..., bras...]
  Eigen::Map<const RowMat> m(e.data(), n, n);
  Eigen::MatrixXcd h = 0.5 * (Eigen::MatrixXcd(m) + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  double total = ev.cwiseAbs().sum(), removed = 0;
  for (index_t i = 0; i < n; ++i)
    if (ev(i) < 0) {
      removed += -ev(i);
      ev(i) = 0;
    }
  if (clipped) *clipped = total > 0 ? removed / total : 0.0;
  Eigen::MatrixXcd g =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  DenseTensor out(e.shape());
  Eigen::Map<RowMat>(out.data(), n, n) = g;
  return out.permute({0, 6, 1, 7, 2, 8, 3, 9, 4, 10, 5, 11});
}

// Solve sum_ket N[ket,bra] x[p,ket] = rhs[p,bra] for every p; N given as the
// rank-8 tensor [ket legs, bra legs] flattened to n x n.
void solve_blocks(const DenseTensor& nten, const DenseTensor& rhs,
                  DenseTensor* out, double ridge, bool* ridge_used) {
  index_t n = 1;
  for (int l = 1; l < rhs.rank(); ++l) n *= rhs.dim(l);
  index_t p = rhs.dim(0);
  // column-major map puts the bra index on rows: M(bra, ket) = N[ket*n + bra]
  Eigen::Map<const Eigen::MatrixXcd> nm(nten.data(), n, n);

  auto attempt = [&](const Eigen::MatrixXcd& mat) {
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(mat);
    if (ldlt.info() != Eigen::Success) return false;
    for (index_t k = 0; k < p; ++k) {
      Eigen::Map<const Eigen::VectorXcd> b(rhs.data() + k * n, n);
      Eigen::VectorXcd x = ldlt.solve(b);
      if (!x.allFinite()) return false;
      Eigen::Map<Eigen::VectorXcd>(out->data() + k * n, n) = x;
    }
    return true;
  };
  if (attempt(nm)) return;
  double scale = nm.diagonal().cwiseAbs().mean();
  if (!(scale > 0)) scale = 1.0;
  Eigen::MatrixXcd reg =
      Eigen::MatrixXcd(nm) +
      ridge * scale * Eigen::MatrixXcd::Identity(n, n);
  *ridge_used = true;
  BBP_CHECK(attempt(reg), "full update: environment system is singular");
}

double inner_re(const DenseTensor& a, const DenseTensor& b) {
  cplx s(0, 0);
  for (index_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s.real();
}

}  // namespace

DenseTensor separable_pair_env(const DenseTensor& ua, const DenseTensor& la,
                               const DenseTensor& da, const DenseTensor& ub,
                               const DenseTensor& db, const DenseTensor& rb) {
  DenseTensor e = contract(ua, la, {});
  e = contract(e, da, {});
  e = contract(e, ub, {});
  e = contract(e, db, {});
  e = contract(e, rb, {});
  return e;
}

PairUpdate full_update_pair(const DenseTensor& env6, DenseTensor& a,
                            DenseTensor& b, const DenseTensor& gate,
                            index_t dmax, const EvolutionConfig& cfg) {
  BBP_CHECK(env6.rank() == 6 && a.rank() == 5 && b.rank() == 5 &&
                gate.rank() == 4,
            "full update: bad ranks");
  PairUpdate rep;
  Shape kets{a.dim(1), a.dim(2), a.dim(3), b.dim(1), b.dim(3), b.dim(4)};
  DenseTensor e12 = psd_project_env(env6, kets, &rep.clipped);

  // gate applied to the pair, bond summed out
  DenseTensor pair = contract(a, b, {{4, 2}});
  // [pa', au, al, ad, pb', bu, bd, br]
  DenseTensor theta = contract(gate, pair, {{2, 0}, {3, 4}});
  // [pa, pb, au, al, ad, bu, bd, br]

  TruncationSpec pspec{dmax, cfg.svd_cutoff};
  SvdResult sv = svd_truncate(theta, {0, 2, 3, 4}, pspec);
  std::vector<double> rt(sv.values.size());
  for (size_t i = 0; i < rt.size(); ++i) rt[i] = std::sqrt(sv.values[i]);
  DenseTensor na = scale_cols(sv.u, rt);  // [pa, au, al, ad, m]
  DenseTensor nb = scale_rows(sv.vh, rt).permute({1, 2, 0, 3, 4});
  // [pb, bu, m, bd, br]

  DenseTensor y = contract(
      e12, theta, {{0, 2}, {2, 3}, {4, 4}, {6, 5}, {8, 6}, {10, 7}});
  // [au_b, al_b, ad_b, bu_b, bd_b, br_b, pa, pb]
  DenseTensor c0t = contract(y, theta.conj(),
                             {{0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 7},
                              {6, 0}, {7, 1}});
  double c0 = c0t[0].real();
  double scale0 = std::max(std::abs(c0), 1e-300);

  double prev = 0, n2 = 0;
  bool have_prev = false;
  for (int it = 1; it <= cfg.als_max_iters; ++it) {
    rep.iters = it;
    // optimal a given b
    DenseTensor x = contract(e12, nb, {{6, 1}, {8, 3}, {10, 4}});
    x = contract(x, nb.conj(), {{6, 1}, {7, 3}, {8, 4}, {9, 0}});
    DenseTensor nmat_a = x.permute({0, 2, 4, 6, 1, 3, 5, 7});
    DenseTensor rhs_a = contract(y, nb.conj(), {{3, 1}, {4, 3}, {5, 4}, {7, 0}})
                            .permute({3, 0, 1, 2, 4});
    solve_blocks(nmat_a, rhs_a, &na, cfg.ridge, &rep.ridge_used);

    // optimal b given a
    x = contract(e12, na, {{0, 1}, {2, 2}, {4, 3}});
    x = contract(x, na.conj(), {{0, 1}, {1, 2}, {2, 3}, {9, 0}});
    DenseTensor nmat_b = x.permute({0, 6, 2, 4, 1, 7, 3, 5});
    DenseTensor rhs_b = contract(y, na.conj(), {{0, 1}, {1, 2}, {2, 3}, {6, 0}})
                            .permute({3, 0, 4, 1, 2});
    solve_blocks(nmat_b, rhs_b, &nb, cfg.ridge, &rep.ridge_used);

    n2 = inner_re(nb, rhs_b);  // = <pair, E pair> at the solve point
    double loss = c0 - n2;
    rep.loss = loss;
    if (have_prev && std::abs(loss - prev) <= cfg.als_rtol * scale0) {
      rep.converged = true;
      break;
    }
    prev = loss;
    have_prev = true;
  }
  BBP_CHECK(n2 > 0, "full update: pair has zero environment norm");
  double s = std::pow(n2, -0.25);
  na *= cplx(s, 0);
  nb *= cplx(s, 0);
  a = std::move(na);
  b = std::move(nb);
  return rep;
}

namespace {

// ---------------------------------------------------------------------------
// sweeping machinery over one dressed block

struct PairHook {
  std::function<bool(int di, int c)> want;
  std::function<void(int di, int c, const DenseTensor& env, DenseTensor* left,
                     DenseTensor* right)>
      act;
};

// Visit interior horizontal pairs row by row (top to bottom, left to right).
// After act the grid copies behind left/right may change; later environments
// in the same pass see the update.
void horizontal_pass(FlatNetwork& g, const TruncationSpec& spec, uint64_t seed,
                     BmpsStats* stats, const PairHook& hook) {
  int H = g.lat.rows, W = g.lat.cols;
  std::vector<BoundaryMps> below(H);
  below[H - 1] = bmps_trivial(g, Side::kDown);
  for (int i = H - 2; i >= 0; --i)
    below[i] = bmps_extend(below[i + 1], g, Side::kDown, H - 2 - i, 1, spec,
                           derive_seed(seed, "below", {i}), stats);
  BoundaryMps above = bmps_trivial(g, Side::kUp);
  for (int di = 0; di < H; ++di) {
    bool any = false;
    for (int c = 0; c + 1 < W && !any; ++c) any = hook.want(di, c);
    if (any) {
      const Mps& am = above.mps;
      const Mps& bm = below[di].mps;
      std::vector<DenseTensor> right(W + 1);
      right[W] = row_env_boundary();
      for (int c = W - 1; c >= 0; --c)
        right[c] = row_env_step_right(right[c + 1], am.sites[c], g.site(di, c),
                                      bm.sites[c]);
      DenseTensor left = row_env_boundary();
      for (int c = 0; c + 1 < W; ++c) {
        if (hook.want(di, c)) {
          DenseTensor env = pair_environment(left, right[c + 2], am, bm, c);
          hook.act(di, c, env, &g.site(di, c), &g.site(di, c + 1));
        }
        left = row_env_step_left(left, am.sites[c], g.site(di, c),
                                 bm.sites[c]);
      }
    }
    if (di + 1 < H)
      above = bmps_extend(above, g, Side::kUp, di, 1, spec,
                          derive_seed(seed, "above", {di}), stats);
  }
}

bool bond_interior(const BlockPartition& part, const Bond& bd) {
  int b = part.block_of_site(bd.r, bd.c);
  const Block& blk = part.blocks[b];
  int i = part.lat.wrap_r(bd.r - blk.r0);
  int j = part.lat.wrap_c(bd.c - blk.c0);
  return bd.dir == Side::kRight ? j + 1 < blk.w : i + 1 < blk.h;
}

// The second offset shifts only directions with more than one block: shifting
// a single-block direction buys no new interior bonds but wraps an embedded
// open boundary into real self-edge loops.
std::vector<std::pair<int, int>> default_offsets(const Lattice& lat, int bh,
                                                 int bw) {
  int sr = lat.rows / bh > 1 ? (bh + 1) / 2 : 0;
  int sc = lat.cols / bw > 1 ? (bw + 1) / 2 : 0;
  if (sr == 0 && sc == 0) return {{0, 0}};
  return {{0, 0}, {sr, sc}};
}

EngineConfig engine_config(const EvolutionConfig& cfg, uint64_t seed) {
  EngineConfig e;
  e.msg_trunc = cfg.msg_trunc;
  e.tol = cfg.bp_tol;
  e.max_rounds = cfg.bp_max_rounds;
  e.seed = seed;
  e.pool = cfg.pool;
  e.log = cfg.log;
  return e;
}

void log_json(const EvolutionConfig& cfg, const nlohmann::json& j) {
  if (cfg.log) cfg.log(j.dump());
}

// message as a plain vector; sides without a super edge contribute a scalar 1
DenseTensor msg_vec(const MessageSet& msgs, const BlockPartition& part, int b,
                    Side s, index_t dim) {
  if (!part.has_edge(b, s)) {
    BBP_CHECK(dim == 1, "message: missing side with a nontrivial leg");
    DenseTensor v({1});
    v[0] = 1;
    return v;
  }
  const DenseTensor& site = msgs.at(b, s).sites[0];
  return site.reshape({site.dim(1)});
}

// environment of a one-site-block pair from the six surrounding messages;
// vertical pairs are given in the rotated frame (left = lower site)
DenseTensor plain_pair_env(const FlatNetwork& dl, const BlockPartition& part,
                           const MessageSet& msgs, const Bond& bond) {
  const Lattice& lat = dl.lat;
  if (bond.dir == Side::kRight) {
    int a = lat.site(bond.r, bond.c), b = lat.site(bond.r, bond.c + 1);
    auto leg = [&](int site, Side s) {
      int r = site / lat.cols, c = site % lat.cols;
      return msg_vec(msgs, part, site, s, dl.site(r, c).dim(int(s)));
    };
    return separable_pair_env(leg(a, Side::kUp), leg(a, Side::kLeft),
                              leg(a, Side::kDown), leg(b, Side::kUp),
                              leg(b, Side::kDown), leg(b, Side::kRight));
  }
  int upper = lat.site(bond.r, bond.c), lower = lat.site(bond.r + 1, bond.c);
  auto leg = [&](int site, Side s) {
    int r = site / lat.cols, c = site % lat.cols;
    return msg_vec(msgs, part, site, s, dl.site(r, c).dim(int(s)));
  };
  return separable_pair_env(leg(lower, Side::kLeft), leg(lower, Side::kDown),
                            leg(lower, Side::kRight), leg(upper, Side::kLeft),
                            leg(upper, Side::kRight), leg(upper, Side::kUp));
}

void refresh_pair_tables(PepsNetwork& peps, FlatNetwork& dl, const Bond& bond,
                         const DenseTensor& a, const DenseTensor& b) {
  const Lattice& lat = peps.lat;
  int ra = bond.r, ca = bond.c;
  int rb = bond.dir == Side::kDown ? lat.wrap_r(bond.r + 1) : bond.r;
  int cb = bond.dir == Side::kRight ? lat.wrap_c(bond.c + 1) : bond.c;
  peps.site(ra, ca) = a;
  peps.site(rb, cb) = b;
  dl.site(ra, ca) = double_layer_site(a);
  dl.site(rb, cb) = double_layer_site(b);
  index_t m = bond.dir == Side::kRight ? a.dim(4) : a.dim(3);
  Side sa = bond.dir, sb = opposite(bond.dir);
  dl.ket[lat.site(ra, ca)][int(sa)] = m;
  dl.ket[lat.site(rb, cb)][int(sb)] = m;
}

// one gate on sites held in the lattice frame; vertical pairs go through the
// rotated frame internally
PairUpdate apply_gate_sites(PepsNetwork& peps, FlatNetwork& dl,
                            const TwoSiteGate& g, const DenseTensor& env,
                            const EvolutionConfig& cfg) {
  const Lattice& lat = peps.lat;
  if (g.bond.dir == Side::kRight) {
    DenseTensor a = peps.site(g.bond.r, g.bond.c);
    DenseTensor b = peps.site(g.bond.r, lat.wrap_c(g.bond.c + 1));
    PairUpdate pu = full_update_pair(env, a, b, g.gate, cfg.bond_dim, cfg);
    refresh_pair_tables(peps, dl, g.bond, a, b);
    return pu;
  }
  int rt = g.bond.r, ct = g.bond.c, rl = lat.wrap_r(g.bond.r + 1);
  DenseTensor a = rotate_site_cw(peps.site(rl, ct));  // lower is the left site
  DenseTensor b = rotate_site_cw(peps.site(rt, ct));
  DenseTensor gswap = g.gate.permute({1, 0, 3, 2});
  PairUpdate pu = full_update_pair(env, a, b, gswap, cfg.bond_dim, cfg);
  refresh_pair_tables(peps, dl, g.bond, b.permute({0, 4, 1, 2, 3}),
                      a.permute({0, 4, 1, 2, 3}));
  return pu;
}

double bp_ratio(const ConvergenceStats& st) {
  if (st.distances.size() < 2 || !(st.distances.front() > 0)) return 0;
  return st.distances.back() / st.distances.front();
}

// energies of the listed bonds of block b, read from dressed environments
double block_bond_energies(const PepsNetwork& peps, const FlatNetwork& dl,
                           const BlockPartition& part, const MessageSet& msgs,
                           int b, const std::vector<const TwoSiteGate*>& hg,
                           const std::vector<const TwoSiteGate*>& vg,
                           const EvolutionConfig& cfg, uint64_t hseed,
                           uint64_t vseed) {
  const Block& blk = part.blocks[b];
  const Lattice& lat = dl.lat;
  auto local = [&](int r, int c) {
    return std::pair<int, int>{lat.wrap_r(r - blk.r0), lat.wrap_c(c - blk.c0)};
  };
  double acc = 0;
  if (!hg.empty()) {
    DressedBlock d = dressed_block(dl, part, msgs, b);
    std::map<std::pair<int, int>, const TwoSiteGate*> at;
    for (const TwoSiteGate* g : hg) {
      auto [i, j] = local(g->bond.r, g->bond.c);
      at[{d.r_off + i, d.c_off + j}] = g;
    }
    PairHook hook;
    hook.want = [&](int di, int c) { return at.count({di, c}) > 0; };
    hook.act = [&](int di, int c, const DenseTensor& env, DenseTensor*,
                   DenseTensor*) {
      const TwoSiteGate& g = *at.at({di, c});
      DenseTensor rho = rdm_from_environment(
          env, peps.site(g.bond.r, g.bond.c),
          peps.site(g.bond.r, lat.wrap_c(g.bond.c + 1)));
      acc += bond_energy(rho, g.hterm);
    };
    horizontal_pass(d.net, cfg.env_trunc, hseed, nullptr, hook);
  }
  if (!vg.empty()) {
    DressedBlock d = dressed_block(dl, part, msgs, b);
    FlatNetwork rot = rotate_cw(d.net);
    int H = d.net.lat.rows;
    std::map<std::pair<int, int>, const TwoSiteGate*> at;
    for (const TwoSiteGate* g : vg) {
      auto [i, j] = local(g->bond.r, g->bond.c);
      at[{d.c_off + j, H - 2 - (d.r_off + i)}] = g;
    }
    PairHook hook;
    hook.want = [&](int di, int c) { return at.count({di, c}) > 0; };
    hook.act = [&](int di, int c, const DenseTensor& env, DenseTensor*,
                   DenseTensor*) {
      const TwoSiteGate& g = *at.at({di, c});
      DenseTensor lower =
          rotate_site_cw(peps.site(lat.wrap_r(g.bond.r + 1), g.bond.c));
      DenseTensor upper = rotate_site_cw(peps.site(g.bond.r, g.bond.c));
      DenseTensor rho =
          rdm_from_environment(env, lower, upper).permute({1, 0, 3, 2});
      acc += bond_energy(rho, g.hterm);
    };
    horizontal_pass(rot, cfg.env_trunc, vseed, nullptr, hook);
  }
  return acc;
}

void log_anomaly(const EvolutionConfig& cfg, const char* where, int sweep,
                 const Bond& bond, const PairUpdate& pu) {
  if (!cfg.log || (pu.converged && !pu.ridge_used)) return;
  log_json(cfg, {{"event", "pair_update"},
                 {"where", where},
                 {"sweep", sweep},
                 {"bond", {bond.r, bond.c, side_name(bond.dir)}},
                 {"iters", pu.iters},
                 {"converged", pu.converged},
                 {"ridge", pu.ridge_used},
                 {"loss", pu.loss},
                 {"clipped", pu.clipped}});
}

// gates of one block applied through dressed environments
void apply_block_gates(PepsNetwork& peps, FlatNetwork& dl,
                       const BlockPartition& part, const MessageSet& msgs,
                       int b, const std::vector<const TwoSiteGate*>& hg,
                       const std::vector<const TwoSiteGate*>& vg,
                       const EvolutionConfig& cfg, int sweep, long oi) {
  const Block& blk = part.blocks[b];
  const Lattice& lat = part.lat;
  auto local = [&](int r, int c) {
    return std::pair<int, int>{lat.wrap_r(r - blk.r0), lat.wrap_c(c - blk.c0)};
  };
  if (!hg.empty()) {
    DressedBlock d = dressed_block(dl, part, msgs, b);
    std::map<std::pair<int, int>, const TwoSiteGate*> at;
    for (const TwoSiteGate* g : hg) {
      auto [i, j] = local(g->bond.r, g->bond.c);
      at[{d.r_off + i, d.c_off + j}] = g;
    }
    PairHook hook;
    hook.want = [&](int di, int c) { return at.count({di, c}) > 0; };
    hook.act = [&](int di, int c, const DenseTensor& env, DenseTensor* l,
                   DenseTensor* r) {
      const TwoSiteGate& g = *at.at({di, c});
      PairUpdate pu = apply_gate_sites(peps, dl, g, env, cfg);
      *l = dl.site(g.bond.r, g.bond.c);
      *r = dl.site(g.bond.r, lat.wrap_c(g.bond.c + 1));
      log_anomaly(cfg, "block", sweep, g.bond, pu);
    };
    horizontal_pass(d.net, cfg.env_trunc,
                    derive_seed(cfg.seed, "pass_h", {sweep, oi, b}), nullptr,
                    hook);
  }
  if (!vg.empty()) {
    DressedBlock d = dressed_block(dl, part, msgs, b);
    FlatNetwork rot = rotate_cw(d.net);
    int H = d.net.lat.rows;
    std::map<std::pair<int, int>, const TwoSiteGate*> at;
    for (const TwoSiteGate* g : vg) {
      auto [i, j] = local(g->bond.r, g->bond.c);  // upper site
      at[{d.c_off + j, H - 2 - (d.r_off + i)}] = g;
    }
    PairHook hook;
    hook.want = [&](int di, int c) { return at.count({di, c}) > 0; };
    hook.act = [&](int di, int c, const DenseTensor& env, DenseTensor* l,
                   DenseTensor* r) {
      const TwoSiteGate& g = *at.at({di, c});
      PairUpdate pu = apply_gate_sites(peps, dl, g, env, cfg);
      // the pass grid holds rotated copies; rotating the double layer is the
      // same leg cycle as rotating the single-layer site
      *l = dl.site(lat.wrap_r(g.bond.r + 1), g.bond.c).permute({1, 2, 3, 0});
      *r = dl.site(g.bond.r, g.bond.c).permute({1, 2, 3, 0});
      log_anomaly(cfg, "block", sweep, g.bond, pu);
    };
    horizontal_pass(rot, cfg.env_trunc,
                    derive_seed(cfg.seed, "pass_v", {sweep, oi, b}), nullptr,
                    hook);
  }
}

}  // namespace

EnergyReport measure_energy(const PepsNetwork& input,
                            const EvolutionConfig& cfg, long tag) {
  PepsNetwork peps = embed_obc_in_pbc(input);
  std::vector<TwoSiteGate> gates = trotter_gates(cfg.model, input.lat, cfg.dtau);
  EnergyReport er;
  er.bonds = static_cast<int>(gates.size());
  bool plain = cfg.block_h == 1 && cfg.block_w == 1;
  FlatNetwork dl = build_double_layer(peps);

  if (plain) {
    BlockPartition part = partition_blocks(dl.lat, 1, 1);
    MessageSet msgs = random_messages(
        dl, part, derive_seed(cfg.seed, "energy_msgs", {tag}));
    ConvergenceStats st = run_to_fixed_point(
        dl, part, msgs, engine_config(cfg, derive_seed(cfg.seed, "energy_bp",
                                                       {tag})));
    er.bp_runs = 1;
    if (!st.converged) ++er.unconverged_bp;
    const Lattice& lat = peps.lat;
    for (const TwoSiteGate& g : gates) {
      DenseTensor env = plain_pair_env(dl, part, msgs, g.bond);
      DenseTensor rho;
      if (g.bond.dir == Side::kRight) {
        rho = rdm_from_environment(env, peps.site(g.bond.r, g.bond.c),
                                   peps.site(g.bond.r,
                                             lat.wrap_c(g.bond.c + 1)));
      } else {
        DenseTensor lower =
            rotate_site_cw(peps.site(lat.wrap_r(g.bond.r + 1), g.bond.c));
        DenseTensor upper = rotate_site_cw(peps.site(g.bond.r, g.bond.c));
        rho = rdm_from_environment(env, lower, upper).permute({1, 0, 3, 2});
      }
      er.total += bond_energy(rho, g.hterm);
    }
    er.per_site = er.total / input.lat.nsites();
    return er;
  }

  auto offsets = cfg.offsets.empty()
                     ? default_offsets(dl.lat, cfg.block_h, cfg.block_w)
                     : cfg.offsets;
  std::vector<char> done(gates.size(), 0);
  for (size_t oi = 0; oi < offsets.size(); ++oi) {
    BlockPartition part = partition_blocks(dl.lat, cfg.block_h, cfg.block_w,
                                           offsets[oi].first,
                                           offsets[oi].second);
    // bonds measured under this offset
    std::map<int, std::pair<std::vector<const TwoSiteGate*>,
                            std::vector<const TwoSiteGate*>>>
        per_block;
    for (size_t gi = 0; gi < gates.size(); ++gi) {
      if (done[gi] || !bond_interior(part, gates[gi].bond)) continue;
      done[gi] = 1;
      int b = part.block_of_site(gates[gi].bond.r, gates[gi].bond.c);
      auto& bucket = per_block[b];
      (gates[gi].bond.dir == Side::kRight ? bucket.first : bucket.second)
          .push_back(&gates[gi]);
    }
    if (per_block.empty()) continue;
    MessageSet msgs = random_messages(
        dl, part, derive_seed(cfg.seed, "energy_msgs", {tag, (long)oi}));
    ConvergenceStats st = run_to_fixed_point(
        dl, part, msgs,
        engine_config(cfg, derive_seed(cfg.seed, "energy_bp", {tag, (long)oi})));
    ++er.bp_runs;
    if (!st.converged) ++er.unconverged_bp;

    std::vector<int> ids;
    for (auto& kv : per_block) ids.push_back(kv.first);
    std::vector<double> partial(ids.size(), 0.0);
    auto work = [&](int t) {
      int b = ids[t];
      const auto& bucket = per_block.at(b);
      partial[t] = block_bond_energies(
          peps, dl, part, msgs, b, bucket.first, bucket.second, cfg,
          derive_seed(cfg.seed, "energy_h", {tag, (long)oi, b}),
          derive_seed(cfg.seed, "energy_v", {tag, (long)oi, b}));
    };
    int n = static_cast<int>(ids.size());
    if (cfg.pool)
      cfg.pool->parallel_for(n, work);
    else
      for (int t = 0; t < n; ++t) work(t);
    for (double v : partial) er.total += v;
  }
  for (size_t gi = 0; gi < gates.size(); ++gi)
    BBP_CHECK(done[gi], "energy: bond (", gates[gi].bond.r, ",",
              gates[gi].bond.c, ",", side_name(gates[gi].bond.dir),
              ") not interior to any offset's blocks");
  er.per_site = er.total / input.lat.nsites();
  return er;
}

EnergyReport measure_energy_bmps_window(const PepsNetwork& peps,
                                        const EvolutionConfig& cfg, int r0,
                                        int c0, int h, int w) {
  BBP_CHECK(!peps.lat.periodic(), "bmps energy: open boundaries only");
  BBP_CHECK(r0 >= 0 && c0 >= 0 && h >= 1 && w >= 1 &&
                r0 + h <= peps.lat.rows && c0 + w <= peps.lat.cols,
            "bmps energy: bad window");
  std::vector<TwoSiteGate> gates = trotter_gates(cfg.model, peps.lat, cfg.dtau);
  auto wanted = [&](const Bond& b) {
    return b.r >= r0 && b.r < r0 + h && b.c >= c0 && b.c < c0 + w;
  };
  EnergyReport er;
  FlatNetwork dl = build_double_layer(peps);
  {
    std::map<std::pair<int, int>, const TwoSiteGate*> at;
    for (const TwoSiteGate& g : gates)
      if (g.bond.dir == Side::kRight && wanted(g.bond))
        at[{g.bond.r, g.bond.c}] = &g;
    er.bonds += static_cast<int>(at.size());
    PairHook hook;
    hook.want = [&](int di, int c) { return at.count({di, c}) > 0; };
    hook.act = [&](int di, int c, const DenseTensor& env, DenseTensor*,
                   DenseTensor*) {
      const TwoSiteGate& g = *at.at({di, c});
      DenseTensor rho = rdm_from_environment(env, peps.site(di, c),
                                             peps.site(di, c + 1));
      er.total += bond_energy(rho, g.hterm);
    };
    if (!at.empty())
      horizontal_pass(dl, cfg.env_trunc, derive_seed(cfg.seed, "bme_h", {}),
                      nullptr, hook);
  }
  {
    FlatNetwork rot = rotate_cw(dl);
    int H = dl.lat.rows;
    std::map<std::pair<int, int>, const TwoSiteGate*> at;
    for (const TwoSiteGate& g : gates)
      if (g.bond.dir == Side::kDown && wanted(g.bond))
        at[{g.bond.c, H - 2 - g.bond.r}] = &g;
    er.bonds += static_cast<int>(at.size());
    PairHook hook;
    hook.want = [&](int di, int c) { return at.count({di, c}) > 0; };
    hook.act = [&](int di, int c, const DenseTensor& env, DenseTensor*,
                   DenseTensor*) {
      const TwoSiteGate& g = *at.at({di, c});
      DenseTensor lower = rotate_site_cw(peps.site(g.bond.r + 1, g.bond.c));
      DenseTensor upper = rotate_site_cw(peps.site(g.bond.r, g.bond.c));
      DenseTensor rho =
          rdm_from_environment(env, lower, upper).permute({1, 0, 3, 2});
      er.total += bond_energy(rho, g.hterm);
    };
    if (!at.empty())
      horizontal_pass(rot, cfg.env_trunc, derive_seed(cfg.seed, "bme_v", {}),
                      nullptr, hook);
  }
  er.per_site = er.total / peps.lat.nsites();
  return er;
}

EnergyReport measure_energy_bmps(const PepsNetwork& peps,
                                 const EvolutionConfig& cfg) {
  return measure_energy_bmps_window(peps, cfg, 0, 0, peps.lat.rows,
                                    peps.lat.cols);
}

EnergyReport measure_energy_infinite(const PepsNetwork& cell,
                                     const EvolutionConfig& cfg, int k,
                                     long tag) {
  BBP_CHECK(cell.lat.periodic(), "infinite: the unit cell must be periodic");
  BBP_CHECK(k >= 2, "infinite: need at least 2x2 cells per block");
  const int cr = cell.lat.rows, cc = cell.lat.cols;
  PepsNetwork peps = tile_unit_cell(cell, k, k);
  FlatNetwork dl = build_double_layer(peps);
  BlockPartition part = partition_blocks(dl.lat, dl.lat.rows, dl.lat.cols);
  MessageSet msgs =
      random_messages(dl, part, derive_seed(cfg.seed, "inf_msgs", {k, tag}));
  ConvergenceStats st = run_to_fixed_point(
      dl, part, msgs,
      engine_config(cfg, derive_seed(cfg.seed, "inf_bp", {k, tag})));
  EnergyReport er;
  er.bp_runs = 1;
  if (!st.converged) er.unconverged_bp = 1;

  std::vector<TwoSiteGate> cgates =
      trotter_gates(cfg.model, cell.lat, cfg.dtau);
  er.bonds = static_cast<int>(cgates.size());
  const int mr = (dl.lat.rows - cr) / 2, mc = (dl.lat.cols - cc) / 2;
  // one bond per cell bond class, all next to the block center
  std::vector<TwoSiteGate> reps;
  reps.reserve(cgates.size());
  for (const TwoSiteGate& g : cgates) {
    Bond at{mr + (((g.bond.r - mr) % cr) + cr) % cr,
            mc + (((g.bond.c - mc) % cc) + cc) % cc, g.bond.dir};
    reps.push_back({at, g.gate, g.hterm});
  }
  std::vector<const TwoSiteGate*> hg, vg;
  for (const TwoSiteGate& g : reps)
    (g.bond.dir == Side::kRight ? hg : vg).push_back(&g);
  er.total = block_bond_energies(peps, dl, part, msgs, 0, hg, vg, cfg,
                                 derive_seed(cfg.seed, "inf_h", {k, tag}),
                                 derive_seed(cfg.seed, "inf_v", {k, tag}));
  er.per_site = er.total / cell.lat.nsites();
  return er;
}

EnergyReport measure_energy_tiled_bmps(const PepsNetwork& cell,
                                       const EvolutionConfig& cfg, int k,
                                       long tag) {
  BBP_CHECK(cell.lat.periodic(), "infinite: the unit cell must be periodic");
  BBP_CHECK(k >= 1, "infinite: tile factor must be positive");
  const int cr = cell.lat.rows, cc = cell.lat.cols;
  PepsNetwork peps = tile_unit_cell_open(
      cell, k + 1, k + 1, derive_seed(cfg.seed, "tile_bnd", {k, tag}));
  const int mr = (peps.lat.rows - cr) / 2, mc = (peps.lat.cols - cc) / 2;
  EnergyReport er = measure_energy_bmps_window(peps, cfg, mr, mc, cr, cc);
  er.per_site = er.total / cell.lat.nsites();
  return er;
}

namespace {

void plain_sweep(PepsNetwork& peps, FlatNetwork& dl,
                 const std::vector<TwoSiteGate>& gates,
                 const EvolutionConfig& cfg, int sweep, EvolutionResult* res) {
  // interleaved groups keep every environment leg away from bonds updated in
  // the same group: horizontal even/odd columns, vertical even/odd rows
  auto group_of = [](const Bond& b) {
    return b.dir == Side::kRight ? (b.c % 2) : 2 + (b.r % 2);
  };
  if (peps.lat.periodic()) {
    // parity grouping needs even wrap distances where real wrap bonds exist
    bool wrap_h = false, wrap_v = false;
    for (const TwoSiteGate& g : gates) {
      wrap_h |= g.bond.dir == Side::kRight && g.bond.c + 1 == peps.lat.cols;
      wrap_v |= g.bond.dir == Side::kDown && g.bond.r + 1 == peps.lat.rows;
    }
    BBP_CHECK((!wrap_h || peps.lat.cols % 2 == 0) &&
                  (!wrap_v || peps.lat.rows % 2 == 0),
              "one-site blocks need even periodic extents");
  }
  for (int grp = 0; grp < 4; ++grp) {
    std::vector<const TwoSiteGate*> glist;
    for (const TwoSiteGate& g : gates)
      if (group_of(g.bond) == grp) glist.push_back(&g);
    if (glist.empty()) continue;
    BlockPartition part = partition_blocks(dl.lat, 1, 1);
    MessageSet msgs = random_messages(
        dl, part, derive_seed(cfg.seed, "group_msgs", {sweep, grp}));
    ConvergenceStats st = run_to_fixed_point(
        dl, part, msgs,
        engine_config(cfg, derive_seed(cfg.seed, "group_bp", {sweep, grp})));
    if (!st.converged) ++res->unconverged_bp;
    res->bp_trace.push_back({sweep, grp, st.rounds, st.converged, bp_ratio(st)});
    for (const TwoSiteGate* g : glist) {
      DenseTensor env = plain_pair_env(dl, part, msgs, g->bond);
      PairUpdate pu = apply_gate_sites(peps, dl, *g, env, cfg);
      log_anomaly(cfg, "plain", sweep, g->bond, pu);
    }
  }
}

}  // namespace

EvolutionResult run_ground_state(const PepsNetwork& init,
                                 const EvolutionConfig& cfg) {
  BBP_CHECK(cfg.block_h >= 1 && cfg.block_w >= 1 && cfg.sweeps >= 0 &&
                cfg.bond_dim >= 1,
            "ground state: bad configuration");
  Lattice orig = init.lat;
  PepsNetwork peps = embed_obc_in_pbc(init);
  FlatNetwork dl = build_double_layer(peps);
  std::vector<TwoSiteGate> gates = trotter_gates(cfg.model, orig, cfg.dtau);
  bool plain = cfg.block_h == 1 && cfg.block_w == 1;
  auto offsets = cfg.offsets.empty()
                     ? default_offsets(dl.lat, cfg.block_h, cfg.block_w)
                     : cfg.offsets;

  std::vector<std::vector<const TwoSiteGate*>> owned(offsets.size());
  if (!plain) {
    std::vector<BlockPartition> parts;
    for (auto [r, c] : offsets)
      parts.push_back(
          partition_blocks(peps.lat, cfg.block_h, cfg.block_w, r, c));
    for (const TwoSiteGate& g : gates) {
      bool placed = false;
      for (size_t oi = 0; oi < parts.size() && !placed; ++oi)
        if (bond_interior(parts[oi], g.bond)) {
          owned[oi].push_back(&g);
          placed = true;
        }
      BBP_CHECK(placed, "ground state: bond (", g.bond.r, ",", g.bond.c, ",",
                side_name(g.bond.dir),
                ") is not interior to any offset's blocks");
    }
  }

  EvolutionResult res;
  auto measure = [&](int sweep) {
    // hand measure_energy the caller's boundary so no wrap bonds are counted
    peps.lat.boundary = orig.boundary;
    EnergyReport er = measure_energy(peps, cfg, sweep);
    peps.lat.boundary = Boundary::kPeriodic;
    res.energy = er.total;
    res.unconverged_bp += er.unconverged_bp;
    res.trace.push_back({sweep, er.total, er.per_site});
    log_json(cfg, {{"event", "sweep_energy"},
                   {"sweep", sweep},
                   {"energy", er.total},
                   {"per_site", er.per_site},
                   {"bp_runs", er.bp_runs},
                   {"unconverged_bp", er.unconverged_bp}});
  };
  if (cfg.measure_every > 0) measure(0);

  for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
    if (plain) {
      plain_sweep(peps, dl, gates, cfg, sweep, &res);
    } else {
      for (size_t oi = 0; oi < offsets.size(); ++oi) {
        if (owned[oi].empty()) continue;
        BlockPartition part =
            partition_blocks(dl.lat, cfg.block_h, cfg.block_w,
                             offsets[oi].first, offsets[oi].second);
        MessageSet msgs = random_messages(
            dl, part,
            derive_seed(cfg.seed, "sweep_msgs", {sweep, (long)oi}));
        ConvergenceStats st = run_to_fixed_point(
            dl, part, msgs,
            engine_config(cfg,
                          derive_seed(cfg.seed, "sweep_bp", {sweep, (long)oi})));
        if (!st.converged) ++res.unconverged_bp;
        res.bp_trace.push_back(
            {sweep, (int)oi, st.rounds, st.converged, bp_ratio(st)});

        std::map<int, std::pair<std::vector<const TwoSiteGate*>,
                                std::vector<const TwoSiteGate*>>>
            per_block;
        for (const TwoSiteGate* g : owned[oi]) {
          int b = part.block_of_site(g->bond.r, g->bond.c);
          auto& bucket = per_block[b];
          (g->bond.dir == Side::kRight ? bucket.first : bucket.second)
              .push_back(g);
        }
        std::vector<int> ids;
        for (auto& kv : per_block) ids.push_back(kv.first);
        auto work = [&](int t) {
          int b = ids[t];
          const auto& bucket = per_block.at(b);
          apply_block_gates(peps, dl, part, msgs, b, bucket.first,
                            bucket.second, cfg, sweep, (long)oi);
        };
        int n = static_cast<int>(ids.size());
        if (cfg.pool)
          cfg.pool->parallel_for(n, work);
        else
          for (int t = 0; t < n; ++t) work(t);
      }
    }
    if (cfg.measure_every > 0 && sweep % cfg.measure_every == 0)
      measure(sweep);
  }
  if (res.trace.empty() || res.trace.back().sweep != cfg.sweeps)
    measure(cfg.sweeps);

  peps.lat.boundary = orig.boundary;
  res.peps = std::move(peps);
  return res;
}

EvolutionResult run_ground_state_infinite(const PepsNetwork& init,
                                          const EvolutionConfig& cfg) {
  BBP_CHECK(init.lat.periodic(), "infinite: the unit cell must be periodic");
  const int cr = init.lat.rows, cc = init.lat.cols;
  BBP_CHECK(cfg.block_h % cr == 0 && cfg.block_w % cc == 0,
            "infinite: block must tile the unit cell");
  const int kr = cfg.block_h / cr, kc = cfg.block_w / cc;
  BBP_CHECK(kr >= 2 && kc >= 2, "infinite: block needs >= 2 cells per axis");
  BBP_CHECK(cfg.sweeps >= 0 && cfg.bond_dim >= 1,
            "infinite: bad configuration");
  const int mr = (cfg.block_h - cr) / 2, mc = (cfg.block_w - cc) / 2;

  PepsNetwork cell = init;
  std::vector<TwoSiteGate> gates = trotter_gates(cfg.model, cell.lat, cfg.dtau);
  std::vector<std::pair<int, int>> offsets = cfg.offsets;
  if (offsets.empty()) {
    offsets.push_back({0, 0});
    int sr = (cr + 1) / 2 % cr, sc = (cc + 1) / 2 % cc;
    if (sr || sc) offsets.push_back({sr, sc});
  }

  // a gate is owned by the first offset that embeds its bond class strictly
  // inside the central window
  struct Placed {
    const TwoSiteGate* g;
    Bond at;  // tiled coordinates
  };
  std::vector<std::vector<Placed>> owned(offsets.size());
  for (const TwoSiteGate& g : gates) {
    bool placed = false;
    for (size_t oi = 0; oi < offsets.size() && !placed; ++oi) {
      auto [orow, ocol] = offsets[oi];
      int r = mr + (((g.bond.r - orow - mr) % cr) + cr) % cr;
      int c = mc + (((g.bond.c - ocol - mc) % cc) + cc) % cc;
      bool ok = g.bond.dir == Side::kRight ? c + 1 < mc + cc : r + 1 < mr + cr;
      if (ok) {
        owned[oi].push_back({&g, Bond{r, c, g.bond.dir}});
        placed = true;
      }
    }
    BBP_CHECK(placed, "infinite: bond class (", g.bond.r, ",", g.bond.c, ",",
              side_name(g.bond.dir),
              ") is not interior to any offset's window");
  }

  EvolutionResult res;
  auto measure = [&](int sweep) {
    EnergyReport er =
        measure_energy_infinite(cell, cfg, std::max(kr, kc), sweep);
    res.energy = er.total;
    res.unconverged_bp += er.unconverged_bp;
    res.trace.push_back({sweep, er.total, er.per_site});
    log_json(cfg, {{"event", "sweep_energy"},
                   {"sweep", sweep},
                   {"energy", er.total},
                   {"per_site", er.per_site},
                   {"bp_runs", er.bp_runs},
                   {"unconverged_bp", er.unconverged_bp}});
  };
  if (cfg.measure_every > 0) measure(0);

  for (int sweep = 1; sweep <= cfg.sweeps; ++sweep) {
    for (size_t oi = 0; oi < offsets.size(); ++oi) {
      if (owned[oi].empty()) continue;
      auto [orow, ocol] = offsets[oi];
      PepsNetwork scell = cell;  // the cell embedded with the offset shift
      for (int r = 0; r < cr; ++r)
        for (int c = 0; c < cc; ++c)
          scell.site(r, c) = cell.site((r + orow) % cr, (c + ocol) % cc);
      PepsNetwork tiled = tile_unit_cell(scell, kr, kc);
      FlatNetwork dl = build_double_layer(tiled);
      BlockPartition part = partition_blocks(dl.lat, cfg.block_h, cfg.block_w);
      MessageSet msgs = random_messages(
          dl, part, derive_seed(cfg.seed, "sweep_msgs", {sweep, (long)oi}));
      ConvergenceStats st = run_to_fixed_point(
          dl, part, msgs,
          engine_config(cfg,
                        derive_seed(cfg.seed, "sweep_bp", {sweep, (long)oi})));
      if (!st.converged) ++res.unconverged_bp;
      res.bp_trace.push_back(
          {sweep, (int)oi, st.rounds, st.converged, bp_ratio(st)});

      std::vector<TwoSiteGate> local;
      local.reserve(owned[oi].size());
      for (const Placed& p : owned[oi])
        local.push_back({p.at, p.g->gate, p.g->hterm});
      std::vector<const TwoSiteGate*> hg, vg;
      for (const TwoSiteGate& g : local)
        (g.bond.dir == Side::kRight ? hg : vg).push_back(&g);
      apply_block_gates(tiled, dl, part, msgs, 0, hg, vg, cfg, sweep,
                        (long)oi);
      // the updated window is the new cell
      for (int i = 0; i < cr; ++i)
        for (int j = 0; j < cc; ++j)
          cell.site((mr + i + orow) % cr, (mc + j + ocol) % cc) =
              tiled.site(mr + i, mc + j);
    }
    if (cfg.measure_every > 0 && sweep % cfg.measure_every == 0)
      measure(sweep);
  }
  if (res.trace.empty() || res.trace.back().sweep != cfg.sweeps)
    measure(cfg.sweeps);
  res.peps = std::move(cell);
  return res;
}

}  // namespace blockbp
