#pragma once

// Shared test helpers.  The oracles here are deliberately written with plain
// index loops, independent of the library's matricized implementations.

#include <array>
#include <cmath>
#include <vector>

#include "blockbp/network.hpp"
#include "blockbp/tensor.hpp"

namespace bbptest {

using blockbp::cplx;
using blockbp::DenseTensor;
using blockbp::index_t;
using blockbp::Shape;

// Reference contraction: iterate every output and summed index explicitly.
inline DenseTensor naive_contract(
    const DenseTensor& a, const DenseTensor& b,
    const std::vector<std::pair<int, int>>& pairs) {
  std::vector<char> used_a(a.rank(), 0), used_b(b.rank(), 0);
  Shape inner_dims;
  for (auto [la, lb] : pairs) {
    used_a[la] = used_b[lb] = 1;
    inner_dims.push_back(a.dim(la));
  }
  std::vector<int> free_a, free_b;
  Shape out_shape;
  for (int i = 0; i < a.rank(); ++i)
    if (!used_a[i]) {
      free_a.push_back(i);
      out_shape.push_back(a.dim(i));
    }
  for (int i = 0; i < b.rank(); ++i)
    if (!used_b[i]) {
      free_b.push_back(i);
      out_shape.push_back(b.dim(i));
    }
  DenseTensor out(out_shape);
  Shape sa = a.strides(), sb = b.strides();
  index_t n_out = out.size();
  index_t n_in = blockbp::shape_size(inner_dims);
  for (index_t o = 0; o < n_out; ++o) {
    // decode output multi-index
    index_t rem = o;
    std::vector<index_t> oidx(out_shape.size());
    for (int i = static_cast<int>(out_shape.size()) - 1; i >= 0; --i) {
      oidx[i] = rem % out_shape[i];
      rem /= out_shape[i];
    }
    cplx acc(0, 0);
    for (index_t c = 0; c < n_in; ++c) {
      index_t crem = c;
      std::vector<index_t> cidx(inner_dims.size());
      for (int i = static_cast<int>(inner_dims.size()) - 1; i >= 0; --i) {
        cidx[i] = crem % inner_dims[i];
        crem /= inner_dims[i];
      }
      index_t off_a = 0, off_b = 0;
      for (size_t i = 0; i < free_a.size(); ++i) off_a += sa[free_a[i]] * oidx[i];
      for (size_t i = 0; i < free_b.size(); ++i)
        off_b += sb[free_b[i]] * oidx[free_a.size() + i];
      for (size_t i = 0; i < pairs.size(); ++i) {
        off_a += sa[pairs[i].first] * cidx[i];
        off_b += sb[pairs[i].second] * cidx[i];
      }
      acc += a[off_a] * b[off_b];
    }
    out[o] = acc;
  }
  return out;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) return 1e300;
  double m = 0;
  for (index_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline DenseTensor random_tensor(Shape shape, uint64_t seed,
                                 bool complex_entries = true) {
  blockbp::Rng rng(seed);
  DenseTensor t(std::move(shape));
  t.fill_normal(rng, complex_entries);
  return t;
}

// Brute-force wavefunction of a small peps: loop over every bond assignment
// with an odometer and accumulate products entry by entry.  No tensor
// machinery involved.  Legs come out in row-major site order, unnormalized.
inline DenseTensor brute_statevector(const blockbp::PepsNetwork& peps) {
  using blockbp::Bond;
  using blockbp::Side;
  const blockbp::Lattice& lat = peps.lat;
  std::vector<Bond> edges = lat.edges();
  // per site, per side: which edge supplies the index (-1 = trivial leg)
  std::vector<std::array<int, 4>> leg_edge(lat.nsites(), {-1, -1, -1, -1});
  Shape edge_dims;
  for (size_t k = 0; k < edges.size(); ++k) {
    const Bond& b = edges[k];
    int s1 = lat.site(b.r, b.c);
    int r2 = b.dir == Side::kDown ? b.r + 1 : b.r;
    int c2 = b.dir == Side::kRight ? b.c + 1 : b.c;
    int s2 = lat.site(r2, c2);
    leg_edge[s1][int(b.dir)] = static_cast<int>(k);
    leg_edge[s2][int(blockbp::opposite(b.dir))] = static_cast<int>(k);
    edge_dims.push_back(peps.sites[s1].dim(1 + int(b.dir)));
  }
  int n = lat.nsites();
  Shape out_shape(n, 0);
  for (int s = 0; s < n; ++s) out_shape[s] = peps.sites[s].dim(0);
  DenseTensor psi(out_shape);
  std::vector<index_t> assign(edges.size(), 0);
  while (true) {
    // for this bond assignment, add the product over sites for every p-config
    std::vector<index_t> p(n, 0);
    while (true) {
      cplx prod(1, 0);
      for (int s = 0; s < n; ++s) {
        const DenseTensor& t = peps.sites[s];
        index_t idx[4];
        for (int l = 0; l < 4; ++l)
          idx[l] = leg_edge[s][l] < 0 ? 0 : assign[leg_edge[s][l]];
        prod *= t.at({p[s], idx[0], idx[1], idx[2], idx[3]});
      }
      index_t off = 0;
      for (int s = 0; s < n; ++s) off = off * out_shape[s] + p[s];
      psi[off] += prod;
      int k = n - 1;
      while (k >= 0 && ++p[k] == out_shape[k]) p[k--] = 0;
      if (k < 0) break;
    }
    int k = static_cast<int>(edges.size()) - 1;
    while (k >= 0 && ++assign[k] == edge_dims[k]) assign[k--] = 0;
    if (k < 0) break;
  }
  return psi;
}

inline blockbp::FlatNetwork random_flat(const blockbp::Lattice& lat,
                                        index_t bond, uint64_t seed,
                                        bool complex_entries = true) {
  blockbp::FlatNetwork out;
  out.lat = lat;
  out.sites.resize(lat.nsites());
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c) {
      index_t u = lat.has_v_edge(r - 1, c) || (lat.periodic() && lat.rows > 1)
                      ? bond
                      : 1;
      index_t d = lat.has_v_edge(r, c) ? bond : 1;
      index_t l = lat.has_h_edge(r, c - 1) || (lat.periodic() && lat.cols > 1)
                      ? bond
                      : 1;
      index_t rr = lat.has_h_edge(r, c) ? bond : 1;
      if (lat.periodic()) {
        u = lat.rows > 1 ? bond : 1;
        d = u;
        l = lat.cols > 1 ? bond : 1;
        rr = l;
      }
      blockbp::Rng rng(seed, "flat_site", {r, c});
      DenseTensor t({u, l, d, rr});
      t.fill_normal(rng, complex_entries);
      out.sites[lat.site(r, c)] = std::move(t);
    }
  return out;
}

}  // namespace bbptest
