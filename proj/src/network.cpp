#include "blockbp/network.hpp"

namespace blockbp {

namespace {

// bond-consistency for rank-4 views; `leg` adds 1 for the peps phys leg
void check_grid(const Lattice& lat, const std::vector<DenseTensor>& sites,
                int leg0, int expect_rank) {
  BBP_CHECK(static_cast<int>(sites.size()) == lat.nsites(),
            "network: wrong site count");
  auto dim = [&](int r, int c, Side s) {
    return sites[lat.site(r, c)].dim(leg0 + int(s));
  };
  for (const auto& t : sites)
    BBP_CHECK(t.rank() == expect_rank, "network: site rank ", t.rank());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c) {
      if (lat.has_h_edge(r, c)) {
        BBP_CHECK(dim(r, c, Side::kRight) == dim(r, c + 1, Side::kLeft),
                  "network: bond mismatch right of (", r, ",", c, ")");
      } else {
        BBP_CHECK(!lat.periodic() || lat.cols == 1, "network: internal");
        if (!lat.periodic())
          BBP_CHECK(dim(r, c, Side::kRight) == 1,
                    "network: open right leg at (", r, ",", c, ") must be 1");
        else
          BBP_CHECK(dim(r, c, Side::kRight) == 1 && dim(r, c, Side::kLeft) == 1,
                    "network: 1-wide periodic row needs trivial l/r legs");
      }
      if (!lat.periodic() && c == 0)
        BBP_CHECK(dim(r, c, Side::kLeft) == 1, "network: open left leg");
      if (lat.has_v_edge(r, c)) {
        BBP_CHECK(dim(r, c, Side::kDown) == dim(r + 1, c, Side::kUp),
                  "network: bond mismatch below (", r, ",", c, ")");
      } else {
        if (!lat.periodic())
          BBP_CHECK(dim(r, c, Side::kDown) == 1, "network: open bottom leg");
        else
          BBP_CHECK(dim(r, c, Side::kDown) == 1 && dim(r, c, Side::kUp) == 1,
                    "network: 1-tall periodic column needs trivial u/d legs");
      }
      if (!lat.periodic() && r == 0)
        BBP_CHECK(dim(r, c, Side::kUp) == 1, "network: open top leg");
    }
}

}  // namespace

index_t PepsNetwork::max_bond() const {
  index_t m = 1;
  for (const auto& t : sites)
    for (int l = 1; l <= 4; ++l) m = std::max(m, t.dim(l));
  return m;
}

void PepsNetwork::check() const { check_grid(lat, sites, 1, 5); }

void FlatNetwork::check() const {
  check_grid(lat, sites, 0, 4);
  if (double_layer()) {
    BBP_CHECK(ket.size() == sites.size(), "network: ket table size");
    for (size_t i = 0; i < sites.size(); ++i)
      for (int l = 0; l < 4; ++l)
        BBP_CHECK(ket[i][l] * ket[i][l] == sites[i].dim(l),
                  "network: fused leg ", l, " of site ", i,
                  " is not a ket square");
  }
}

DenseTensor double_layer_site(const DenseTensor& t) {
  DenseTensor f = contract(t, t.conj(), {{0, 0}});  // [u,l,d,r, u*,l*,d*,r*]
  f = f.permute({0, 4, 1, 5, 2, 6, 3, 7});
  const Shape& s = f.shape();
  return f.reshape({s[0] * s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7]});
}

DenseTensor impurity_site(const DenseTensor& t, const DenseTensor& op) {
  DenseTensor to = contract(op, t, {{1, 0}});       // [out,u,l,d,r]
  DenseTensor f = contract(to, t.conj(), {{0, 0}});
  f = f.permute({0, 4, 1, 5, 2, 6, 3, 7});
  const Shape& s = f.shape();
  return f.reshape({s[0] * s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7]});
}

FlatNetwork build_double_layer(const PepsNetwork& peps) {
  FlatNetwork out;
  out.lat = peps.lat;
  out.sites.reserve(peps.sites.size());
  out.ket.reserve(peps.sites.size());
  for (const auto& t : peps.sites) {
    out.sites.push_back(double_layer_site(t));
    out.ket.push_back({t.dim(1), t.dim(2), t.dim(3), t.dim(4)});
  }
  return out;
}

PepsNetwork embed_obc_in_pbc(const PepsNetwork& n) {
  PepsNetwork out = n;
  out.lat.boundary = Boundary::kPeriodic;
  return out;
}

FlatNetwork embed_obc_in_pbc(const FlatNetwork& n) {
  FlatNetwork out = n;
  out.lat.boundary = Boundary::kPeriodic;
  return out;
}

namespace {
template <class Net>
Net tile_impl(const Net& cell, int krows, int kcols) {
  BBP_CHECK(cell.lat.periodic(), "tile_unit_cell: cell must be periodic");
  BBP_CHECK(krows >= 1 && kcols >= 1, "tile_unit_cell: bad factors");
  Net out;
  out.lat = {cell.lat.rows * krows, cell.lat.cols * kcols, Boundary::kPeriodic};
  out.sites.resize(out.lat.nsites());
  for (int r = 0; r < out.lat.rows; ++r)
    for (int c = 0; c < out.lat.cols; ++c)
      out.sites[out.lat.site(r, c)] =
          cell.sites[cell.lat.site(r % cell.lat.rows, c % cell.lat.cols)];
  return out;
}
}  // namespace

PepsNetwork tile_unit_cell(const PepsNetwork& cell, int krows, int kcols) {
  return tile_impl(cell, krows, kcols);
}

FlatNetwork tile_unit_cell(const FlatNetwork& cell, int krows, int kcols) {
  FlatNetwork out = tile_impl(cell, krows, kcols);
  if (cell.double_layer()) {
    out.ket.resize(out.lat.nsites());
    for (int r = 0; r < out.lat.rows; ++r)
      for (int c = 0; c < out.lat.cols; ++c)
        out.ket[out.lat.site(r, c)] =
            cell.ket[cell.lat.site(r % cell.lat.rows, c % cell.lat.cols)];
  }
  return out;
}

PepsNetwork tile_unit_cell_open(const PepsNetwork& cell, int krows, int kcols,
                                uint64_t seed) {
  PepsNetwork out = tile_unit_cell(cell, krows, kcols);
  out.lat.boundary = Boundary::kOpen;
  const int R = out.lat.rows, C = out.lat.cols;
  // close virtual leg `l` (1..4 on a peps site) with a random unit vector
  auto close = [](DenseTensor& t, int l, Rng& rng) {
    DenseTensor v({t.dim(l)});
    v.fill_normal(rng);
    v *= cplx(1.0 / v.norm(), 0);
    Shape sh = t.shape();
    sh[l] = 1;
    t = contract(t, v, {{l, 0}}).reshape(sh);
  };
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      if (r != 0 && c != 0 && r != R - 1 && c != C - 1) continue;
      Rng rng(seed, "tile_boundary", {r, c});
      DenseTensor& t = out.site(r, c);
      if (r == 0) close(t, 1, rng);
      if (c == 0) close(t, 2, rng);
      if (r == R - 1) close(t, 3, rng);
      if (c == C - 1) close(t, 4, rng);
    }
  out.check();
  return out;
}

FlatNetwork rotate_cw(const FlatNetwork& n) {
  FlatNetwork out;
  out.lat = {n.lat.cols, n.lat.rows, n.lat.boundary};
  out.sites.resize(n.sites.size());
  if (n.double_layer()) out.ket.resize(n.sites.size());
  const int R = n.lat.rows;
  for (int r = 0; r < n.lat.rows; ++r)
    for (int c = 0; c < n.lat.cols; ++c) {
      // new legs (u,l,d,r) read from old (l,d,r,u)
      out.sites[out.lat.site(c, R - 1 - r)] =
          n.site(r, c).permute({1, 2, 3, 0});
      if (n.double_layer()) {
        const Shape& k = n.ket[n.lat.site(r, c)];
        out.ket[out.lat.site(c, R - 1 - r)] = {k[1], k[2], k[3], k[0]};
      }
    }
  return out;
}

PepsNetwork random_peps(const Lattice& lat, index_t phys, index_t bond,
                        uint64_t seed) {
  PepsNetwork out;
  out.lat = lat;
  out.sites.resize(lat.nsites());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c) {
      index_t u = lat.has_v_edge(r - 1, c) ? bond : 1;
      index_t d = lat.has_v_edge(r, c) ? bond : 1;
      index_t l = lat.has_h_edge(r, c - 1) ? bond : 1;
      index_t rr = lat.has_h_edge(r, c) ? bond : 1;
      DenseTensor t({phys, u, l, d, rr});
      Rng rng(seed, "peps_site", {r, c});
      t.fill_normal(rng);
      t *= cplx(1.0 / t.norm(), 0);
      out.sites[lat.site(r, c)] = std::move(t);
    }
  return out;
}

PepsNetwork product_peps(const Lattice& lat,
                         const std::vector<std::vector<cplx>>& site_vecs) {
  BBP_CHECK(static_cast<int>(site_vecs.size()) == lat.nsites(),
            "product_peps: wrong vector count");
  PepsNetwork out;
  out.lat = lat;
  out.sites.resize(lat.nsites());
  for (int i = 0; i < lat.nsites(); ++i) {
    index_t d = static_cast<index_t>(site_vecs[i].size());
    DenseTensor t({d, 1, 1, 1, 1});
    for (index_t p = 0; p < d; ++p) t[p] = site_vecs[i][p];
    out.sites[i] = std::move(t);
  }
  return out;
}

PepsNetwork neel_peps(const Lattice& lat, index_t phys) {
  std::vector<std::vector<cplx>> vecs(lat.nsites());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c) {
      std::vector<cplx> v(phys, cplx(0, 0));
      v[(r + c) % 2 == 0 ? 0 : 1] = 1;
      vecs[lat.site(r, c)] = v;
    }
  return product_peps(lat, vecs);
}

PepsNetwork random_product_peps(const Lattice& lat, index_t phys, uint64_t seed) {
  std::vector<std::vector<cplx>> vecs(lat.nsites());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c) {
      Rng rng(seed, "product_site", {r, c});
      std::vector<cplx> v(phys);
      double n2 = 0;
      for (auto& x : v) {
        x = rng.cnormal();
        n2 += std::norm(x);
      }
      for (auto& x : v) x /= std::sqrt(n2);
      vecs[lat.site(r, c)] = v;
    }
  return product_peps(lat, vecs);
}

}  // namespace blockbp
