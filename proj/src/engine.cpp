#include "blockbp/engine.hpp"

#include "json.hpp"

namespace blockbp {

namespace {

// Does site (r,c) have a lattice edge through side s?
bool site_has_edge(const Lattice& lat, int r, int c, Side s) {
  switch (s) {
    case Side::kUp: return lat.has_v_edge(r - 1, c);
    case Side::kDown: return lat.has_v_edge(r, c);
    case Side::kLeft: return lat.has_h_edge(r, c - 1);
    case Side::kRight: return lat.has_h_edge(r, c);
  }
  fail("site_has_edge: bad side");
}

int site_neighbor(const Lattice& lat, int r, int c, Side s) {
  switch (s) {
    case Side::kUp: return lat.site(r - 1, c);
    case Side::kDown: return lat.site(r + 1, c);
    case Side::kLeft: return lat.site(r, c - 1);
    case Side::kRight: return lat.site(r, c + 1);
  }
  fail("site_neighbor: bad side");
}

// Bond dims (and ket dims when double layer) crossing the super edge, in
// canonical order.
void edge_dims(const FlatNetwork& net, const SuperEdge& e, Shape* phys,
               Shape* ket) {
  for (const Bond& bd : e.bonds) {
    phys->push_back(net.site(bd.r, bd.c).dim(int(bd.dir)));
    if (net.double_layer()) ket->push_back(net.ket_dim(bd.r, bd.c, bd.dir));
  }
}

}  // namespace

DressedBlock dressed_block(const FlatNetwork& net, const BlockPartition& part,
                           const MessageSet& msgs, int b, int skip) {
  const Block& blk = part.blocks[b];
  bool inc[4];
  for (int s = 0; s < 4; ++s)
    inc[s] = s != skip && part.has_edge(b, Side(s));

  DressedBlock d;
  d.r_off = inc[int(Side::kUp)] ? 1 : 0;
  d.c_off = inc[int(Side::kLeft)] ? 1 : 0;
  int H = blk.h + d.r_off + (inc[int(Side::kDown)] ? 1 : 0);
  int W = blk.w + d.c_off + (inc[int(Side::kRight)] ? 1 : 0);
  d.net.lat = Lattice{H, W, Boundary::kOpen};
  DenseTensor one({1, 1, 1, 1});
  one[0] = 1;
  d.net.sites.assign(H * W, one);  // corners stay scalar 1

  for (int i = 0; i < blk.h; ++i)
    for (int j = 0; j < blk.w; ++j) {
      auto [r, c] = part.cell(b, i, j);
      d.net.site(d.r_off + i, d.c_off + j) = net.site(r, c);
    }

  auto line = [&](Side s) -> const Mps& {
    const Mps& m = msgs.at(b, s);
    int want = (s == Side::kUp || s == Side::kDown) ? blk.w : blk.h;
    BBP_CHECK(m.length() == want, "dressed_block: ", side_name(s),
              " message has ", m.length(), " sites, block needs ", want);
    return m;
  };
  if (inc[int(Side::kUp)]) {
    const Mps& m = line(Side::kUp);
    for (int j = 0; j < blk.w; ++j) {
      const DenseTensor& s = m.sites[j];
      d.net.site(0, d.c_off + j) =
          s.reshape({1, s.dim(0), s.dim(1), s.dim(2)});
    }
  }
  if (inc[int(Side::kDown)]) {
    const Mps& m = line(Side::kDown);
    for (int j = 0; j < blk.w; ++j) {
      DenseTensor s = m.sites[j].permute({1, 0, 2});  // [p, bl, br]
      Shape sh = s.shape();
      d.net.site(d.r_off + blk.h, d.c_off + j) =
          s.reshape({sh[0], sh[1], 1, sh[2]});
    }
  }
  if (inc[int(Side::kLeft)]) {
    const Mps& m = line(Side::kLeft);
    for (int i = 0; i < blk.h; ++i) {
      DenseTensor s = m.sites[i].permute({0, 2, 1});  // [bl, br, p]
      Shape sh = s.shape();
      d.net.site(d.r_off + i, 0) = s.reshape({sh[0], 1, sh[1], sh[2]});
    }
  }
  if (inc[int(Side::kRight)]) {
    const Mps& m = line(Side::kRight);
    for (int i = 0; i < blk.h; ++i) {
      const DenseTensor& s = m.sites[i];
      d.net.site(d.r_off + i, d.c_off + blk.w) =
          s.reshape({s.dim(0), s.dim(1), s.dim(2), 1});
    }
  }
  return d;
}

Mps mps_strip_ends(Mps m, bool first, bool last) {
  if (first) {
    BBP_CHECK(m.length() >= 2, "strip_ends: too short");
    const DenseTensor& s0 = m.sites.front();
    BBP_CHECK(s0.dim(1) == 1, "strip_ends: first site is not trivial");
    DenseTensor v = s0.reshape({s0.dim(0), s0.dim(2)});
    m.sites[1] = contract(v, m.sites[1], {{1, 0}});
    m.sites.erase(m.sites.begin());
  }
  if (last) {
    BBP_CHECK(m.length() >= 2, "strip_ends: too short");
    const DenseTensor& sn = m.sites.back();
    BBP_CHECK(sn.dim(1) == 1, "strip_ends: last site is not trivial");
    DenseTensor v = sn.reshape({sn.dim(0), sn.dim(2)});
    int n = m.length();
    m.sites[n - 2] = contract(m.sites[n - 2], v, {{2, 0}});
    m.sites.pop_back();
  }
  return m;
}

Mps block_message(const FlatNetwork& net, const BlockPartition& part,
                  const MessageSet& msgs, int b, Side s,
                  const TruncationSpec& spec, uint64_t seed,
                  BmpsStats* stats) {
  BBP_CHECK(part.has_edge(b, s), "block_message: block ", b, " has no ",
            side_name(s), " super edge");
  DressedBlock d = dressed_block(net, part, msgs, b, int(s));
  Side from = opposite(s);
  bool horizontal = s == Side::kLeft || s == Side::kRight;
  int nlines = horizontal ? d.net.lat.cols : d.net.lat.rows;
  BoundaryMps bm = bmps_contract(d.net, from, nlines, spec, seed, stats);
  bool first = part.has_edge(b, horizontal ? Side::kUp : Side::kLeft);
  bool last = part.has_edge(b, horizontal ? Side::kDown : Side::kRight);
  Mps out = mps_strip_ends(std::move(bm.mps), first, last);
  mps_normalize(out);
  return out;
}

MessageSet random_messages(const FlatNetwork& net, const BlockPartition& part,
                           uint64_t seed) {
  MessageSet ms;
  ms.incoming.resize(part.nblocks());
  for (int a = 0; a < part.nblocks(); ++a) {
    const Block& blk = part.blocks[a];
    for (int si = 0; si < 4; ++si) {
      Side s{si};
      if (!part.has_edge(a, s)) continue;
      Shape phys, ket;
      edge_dims(net, part.edge(a, s), &phys, &ket);
      Mps m = random_message(phys, ket,
                             derive_seed(seed, "msg0", {blk.r0, blk.c0, si}));
      ms.at(part.neighbor(a, s), opposite(s)) = std::move(m);
    }
  }
  return ms;
}

double blockbp_round(const FlatNetwork& net, const BlockPartition& part,
                     MessageSet& msgs, const EngineConfig& cfg, int round,
                     BmpsStats* stats) {
  struct Task {
    int b;
    Side s;
  };
  std::vector<Task> tasks;
  for (int b = 0; b < part.nblocks(); ++b)
    for (int si = 0; si < 4; ++si)
      if (part.has_edge(b, Side(si))) tasks.push_back({b, Side(si)});
  int n = static_cast<int>(tasks.size());
  BBP_CHECK(n > 0, "blockbp_round: partition has no super edges");

  std::vector<Mps> outs(n);
  std::vector<BmpsStats> tstats(n);
  auto work = [&](int t) {
    outs[t] = block_message(
        net, part, msgs, tasks[t].b, tasks[t].s, cfg.msg_trunc,
        derive_seed(cfg.seed, "msg", {round, tasks[t].b, int(tasks[t].s)}),
        &tstats[t]);
  };
  if (cfg.pool)
    cfg.pool->parallel_for(n, work);
  else
    for (int t = 0; t < n; ++t) work(t);

  double dist = 0;
  for (int t = 0; t < n; ++t) {
    int nb = part.neighbor(tasks[t].b, tasks[t].s);
    Side in = opposite(tasks[t].s);
    dist += mps_mean_square_error(msgs.at(nb, in), outs[t]);
    if (stats) *stats += tstats[t];
    msgs.at(nb, in) = std::move(outs[t]);
  }
  return dist / n;
}

ConvergenceStats run_to_fixed_point(const FlatNetwork& net,
                                    const BlockPartition& part,
                                    MessageSet& msgs,
                                    const EngineConfig& cfg) {
  ConvergenceStats st;
  double first = 0;
  for (int r = 1; r <= cfg.max_rounds; ++r) {
    double eps = blockbp_round(net, part, msgs, cfg, r, &st.bmps);
    st.distances.push_back(eps);
    st.rounds = r;
    if (r == 1) first = eps;
    double ratio = first > 0 ? eps / first : 0.0;
    if (cfg.log) {
      nlohmann::json j{{"event", "bp_round"},
                       {"round", r},
                       {"eps", eps},
                       {"eps_ratio", ratio}};
      cfg.log(j.dump());
    }
    // distances at rounding noise mean the fixed point was hit exactly
    // (product states); the relative test would chase noise forever
    if (ratio < cfg.tol || eps < 1e-13) {
      st.converged = true;
      break;
    }
  }
  return st;
}

ScaledScalar block_value(const DressedBlock& d, const TruncationSpec& spec,
                         uint64_t seed, BmpsStats* stats) {
  return bmps_value(d.net, spec, seed, stats);
}

PlainMessages random_plain_messages(const FlatNetwork& net, uint64_t seed) {
  const Lattice& lat = net.lat;
  PlainMessages ms;
  ms.incoming.resize(lat.nsites());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c)
      for (int si = 0; si < 4; ++si) {
        Side s{si};
        if (!site_has_edge(lat, r, c, s)) continue;
        Shape phys{net.site(r, c).dim(si)};
        Shape ket;
        if (net.double_layer()) ket.push_back(net.ket_dim(r, c, s));
        Mps m =
            random_message(phys, ket, derive_seed(seed, "msg0", {r, c, si}));
        const DenseTensor& site = m.sites[0];
        ms.incoming[site_neighbor(lat, r, c, s)][int(opposite(s))] =
            site.reshape({site.dim(1)});
      }
  return ms;
}

namespace {

double vec_mse(const DenseTensor& a, const DenseTensor& b) {
  cplx ov(0, 0);
  for (index_t i = 0; i < a.size(); ++i) ov += std::conj(a[i]) * b[i];
  double cosang = std::min(1.0, std::abs(ov));
  return std::max(0.0, 2.0 - 2.0 * cosang);
}

}  // namespace

double plain_bp_round(const FlatNetwork& net, PlainMessages& msgs) {
  const Lattice& lat = net.lat;
  std::vector<std::array<DenseTensor, 4>> fresh(lat.nsites());
  double dist = 0;
  int count = 0;
  DenseTensor ones({1});
  ones[0] = 1;
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c)
      for (int si = 0; si < 4; ++si) {
        Side s{si};
        if (!site_has_edge(lat, r, c, s)) continue;
        DenseTensor cur = net.site(r, c);
        std::vector<int> legs{0, 1, 2, 3};
        for (int t = 0; t < 4; ++t) {
          if (t == si) continue;
          int pos = 0;
          while (legs[pos] != t) ++pos;
          const DenseTensor& v = site_has_edge(lat, r, c, Side(t))
                                     ? msgs.incoming[lat.site(r, c)][t]
                                     : ones;
          cur = contract(cur, v, {{pos, 0}});
          legs.erase(legs.begin() + pos);
        }
        if (net.double_layer()) {
          index_t k = net.ket_dim(r, c, s);
          DenseTensor m = cur.reshape({k, k});
          DenseTensor mh = m.conj().permute({1, 0});
          m += mh;
          m *= cplx(0.5, 0);
          cur = m.reshape({k * k});
        }
        double nrm = cur.norm();
        BBP_CHECK(nrm > 0, "plain bp: message from (", r, ",", c,
                  ") collapsed to zero");
        cur *= cplx(1.0 / nrm, 0);
        int nb = site_neighbor(lat, r, c, s);
        dist += vec_mse(msgs.incoming[nb][int(opposite(s))], cur);
        ++count;
        fresh[nb][int(opposite(s))] = std::move(cur);
      }
  msgs.incoming = std::move(fresh);
  return dist / count;
}

DenseTensor row_env_boundary() {
  DenseTensor e({1, 1, 1});
  e[0] = 1;
  return e;
}

DenseTensor row_env_step_left(const DenseTensor& env, const DenseTensor& a,
                              const DenseTensor& t, const DenseTensor& b) {
  DenseTensor x = contract(env, a, {{0, 0}});     // [t, b, ap, ar]
  x = contract(x, t, {{0, 1}, {2, 0}});           // [b, ar, d, r]
  x = contract(x, b, {{0, 0}, {2, 1}});           // [ar, r, br]
  return x;
}

DenseTensor row_env_step_right(const DenseTensor& env, const DenseTensor& a,
                               const DenseTensor& t, const DenseTensor& b) {
  DenseTensor x = contract(env, a, {{0, 2}});     // [t, b, al, ap]
  x = contract(x, t, {{0, 3}, {3, 0}});           // [b, al, l, d]
  x = contract(x, b, {{0, 2}, {3, 1}});           // [al, l, bl]
  return x;
}

RowEnvs row_environments(const FlatNetwork& g, const Mps& above,
                         const Mps& below, int di) {
  int W = g.lat.cols;
  BBP_CHECK(above.length() == W && below.length() == W,
            "row_environments: boundary length mismatch");
  RowEnvs re;
  re.left.resize(W + 1);
  re.right.resize(W + 1);
  re.left[0] = row_env_boundary();
  for (int c = 0; c < W; ++c)
    re.left[c + 1] = row_env_step_left(re.left[c], above.sites[c],
                                       g.site(di, c), below.sites[c]);
  re.right[W] = row_env_boundary();
  for (int c = W - 1; c >= 0; --c)
    re.right[c] = row_env_step_right(re.right[c + 1], above.sites[c],
                                     g.site(di, c), below.sites[c]);
  return re;
}

DenseTensor pair_environment(const DenseTensor& lenv, const DenseTensor& renv,
                             const Mps& above, const Mps& below, int c0) {
  DenseTensor x = contract(lenv, above.sites[c0], {{0, 0}});
  // [t, ap_a, ar_a, bp_a, br_a]
  x = contract(x, below.sites[c0], {{1, 0}});
  // [t, ap_a, bp_a, br_a, ap_b, ar_b]
  x = contract(x, above.sites[c0 + 1], {{2, 0}});
  // [t, ap_a, bp_a, ap_b, ar_b, bp_b, br_b]
  x = contract(x, below.sites[c0 + 1], {{3, 0}});
  // [l_a, u_a, d_a, u_b, d_b, r_b]
  x = contract(x, renv, {{4, 0}, {6, 2}});
  x = x.permute({1, 0, 2, 3, 4, 5});
  double nrm = x.norm();
  BBP_CHECK(nrm > 0, "pair_environment: zero environment");
  x *= cplx(1.0 / nrm, 0);
  return x;
}

DenseTensor horizontal_bond_env(const FlatNetwork& g, int di, int c0,
                                const TruncationSpec& spec, uint64_t seed,
                                BmpsStats* stats) {
  int H = g.lat.rows;
  BBP_CHECK(di >= 0 && di < H && c0 >= 0 && c0 + 1 < g.lat.cols,
            "horizontal_bond_env: pair out of range");
  BoundaryMps above = bmps_contract(g, Side::kUp, di, spec,
                                    derive_seed(seed, "env_above", {di}), stats);
  BoundaryMps below =
      bmps_contract(g, Side::kDown, H - 1 - di, spec,
                    derive_seed(seed, "env_below", {di}), stats);
  RowEnvs re = row_environments(g, above.mps, below.mps, di);
  return pair_environment(re.left[c0], re.right[c0 + 2], above.mps, below.mps,
                          c0);
}

}  // namespace blockbp
