#include "blockbp/network.hpp"

#include <cstdio>

#include "blockbp/exact.hpp"
#include "blockbp/io.hpp"
#include "blockbp/partition.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace blockbp;
using bbptest::brute_statevector;
using bbptest::max_abs_diff;
using bbptest::random_flat;

TEST_CASE("lattice edge enumeration") {
  Lattice obc{3, 3, Boundary::kOpen};
  CHECK(obc.edges().size() == 12);  // 6 horizontal + 6 vertical
  Lattice pbc{3, 3, Boundary::kPeriodic};
  CHECK(pbc.edges().size() == 18);
  Lattice ring{1, 4, Boundary::kPeriodic};
  CHECK(ring.edges().size() == 4);  // no vertical edges on a 1-row torus
  Lattice two{2, 2, Boundary::kPeriodic};
  CHECK(two.edges().size() == 8);   // doubled bonds in both directions
}

TEST_CASE("coordination numbers") {
  Lattice obc{4, 4, Boundary::kOpen};
  CHECK(coordination(obc, 0, 0) == 2);
  CHECK(coordination(obc, 0, 1) == 3);
  CHECK(coordination(obc, 1, 1) == 4);
  Lattice pbc{4, 4, Boundary::kPeriodic};
  CHECK(coordination(pbc, 0, 0) == 4);
  Lattice ring{1, 4, Boundary::kPeriodic};
  CHECK(coordination(ring, 0, 2) == 2);
}

TEST_CASE("statevector and double layer agree with the brute-force oracle") {
  for (Boundary bd : {Boundary::kOpen, Boundary::kPeriodic}) {
    Lattice lat{2, 3, bd};
    PepsNetwork peps = random_peps(lat, 2, 2, 99);
    DenseTensor brute = brute_statevector(peps);
    double brute_norm2 = brute.norm2();
    // raster statevector matches up to normalization and phase
    DenseTensor psi = exact_statevector(peps);
    cplx ratio(0, 0);
    for (index_t i = 0; i < psi.size(); ++i)
      if (std::abs(brute[i]) > 1e-8) {
        ratio = psi[i] / brute[i];
        break;
      }
    for (index_t i = 0; i < psi.size(); ++i)
      CHECK(std::abs(psi[i] - ratio * brute[i]) < 1e-10);
    // double layer contraction equals |psi|^2
    FlatNetwork dl = build_double_layer(peps);
    ScaledScalar z = exact_contract(dl);
    CHECK(std::abs(z.value().real() - brute_norm2) < 1e-10 * brute_norm2);
    CHECK(std::abs(z.value().imag()) < 1e-10 * brute_norm2);
  }
}

TEST_CASE("exact_rdm matches the partial trace of the brute statevector") {
  Lattice lat{2, 3, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 2, 13);
  DenseTensor psi = brute_statevector(peps);
  psi *= cplx(1.0 / psi.norm(), 0);
  // rho[a,b,a',b'] for sites (0,1) and (1,1) = indices 1 and 4
  DenseTensor rho = exact_rdm(peps, {0, 1}, {1, 1});
  DenseTensor want({2, 2, 2, 2});
  Shape sh = psi.shape();
  for (index_t s = 0; s < psi.size(); ++s)
    for (index_t s2 = 0; s2 < psi.size(); ++s2) {
      // indices differing only on sites 1 and 4 contribute
      std::array<index_t, 6> ia, ib;
      index_t r1 = s, r2 = s2;
      for (int k = 5; k >= 0; --k) {
        ia[k] = r1 % sh[k];
        ib[k] = r2 % sh[k];
        r1 /= sh[k];
        r2 /= sh[k];
      }
      bool same = true;
      for (int k : {0, 2, 3, 5}) same = same && ia[k] == ib[k];
      if (!same) continue;
      want.at({ia[1], ia[4], ib[1], ib[4]}) += psi[s] * std::conj(psi[s2]);
    }
  CHECK(max_abs_diff(rho, want) < 1e-10);
  // swapped order flips the pairs
  DenseTensor rho_swapped = exact_rdm(peps, {1, 1}, {0, 1});
  CHECK(max_abs_diff(rho_swapped, want.permute({1, 0, 3, 2})) < 1e-10);
}

TEST_CASE("rotation preserves the contraction value") {
  Lattice lat{2, 3, Boundary::kPeriodic};
  FlatNetwork net = random_flat(lat, 2, 5);
  ScaledScalar z0 = exact_contract(net);
  FlatNetwork rot = rotate_cw(net);
  rot.check();
  CHECK(rot.lat.rows == 3);
  CHECK(rot.lat.cols == 2);
  ScaledScalar z1 = exact_contract(rot);
  CHECK(z1.value().real() == doctest::Approx(z0.value().real()).epsilon(1e-10));
  CHECK(z1.value().imag() == doctest::Approx(z0.value().imag()).epsilon(1e-10));
  // four turns come back exactly
  FlatNetwork four = rotate_cw(rotate_cw(rotate_cw(rot)));
  for (size_t i = 0; i < net.sites.size(); ++i)
    CHECK(max_abs_diff(four.sites[i], net.sites[i]) == 0.0);
}

TEST_CASE("embedding open networks in the torus changes nothing") {
  Lattice lat{3, 3, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 2, 7);
  FlatNetwork dl = build_double_layer(peps);
  ScaledScalar z0 = exact_contract(dl);
  FlatNetwork em = embed_obc_in_pbc(dl);
  em.check();
  CHECK(em.lat.periodic());
  ScaledScalar z1 = exact_contract(em);
  CHECK(z1.value().real() == doctest::Approx(z0.value().real()).epsilon(1e-12));
}

TEST_CASE("tile_unit_cell repeats the cell periodically") {
  Lattice cell_lat{2, 2, Boundary::kPeriodic};
  PepsNetwork cell = random_peps(cell_lat, 2, 2, 3);
  PepsNetwork big = tile_unit_cell(cell, 2, 3);
  CHECK(big.lat.rows == 4);
  CHECK(big.lat.cols == 6);
  CHECK(big.lat.periodic());
  big.check();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 6; ++c)
      CHECK(max_abs_diff(big.site(r, c), cell.site(r % 2, c % 2)) == 0.0);
}

TEST_CASE("partition_blocks counts and wiring") {
  Lattice lat{6, 6, Boundary::kPeriodic};
  BlockPartition p = partition_blocks(lat, 3, 3);
  CHECK(p.nblocks() == 4);
  CHECK(p.super_edges.size() == 8);
  for (const SuperEdge& e : p.super_edges) CHECK(e.bonds.size() == 3);
  // neighbor relations on the 2x2 block grid
  CHECK(p.neighbor(0, Side::kRight) == 1);
  CHECK(p.neighbor(1, Side::kRight) == 0);
  CHECK(p.neighbor(0, Side::kDown) == 2);
  CHECK(p.block_of_site(0, 0) == 0);
  CHECK(p.block_of_site(2, 5) == 1);
  CHECK(p.block_of_site(5, 2) == 2);
  // every block side carries an edge and sides pair up
  for (int b = 0; b < 4; ++b)
    for (int s = 0; s < 4; ++s) {
      REQUIRE(p.has_edge(b, Side(s)));
      const SuperEdge& e = p.edge(b, Side(s));
      bool a_side = e.block_a == b && e.side_a == Side(s);
      bool b_side = e.block_b == b && e.side_b == Side(s);
      CHECK((a_side || b_side));
    }
}

TEST_CASE("partition offsets wrap blocks around the torus") {
  Lattice lat{4, 4, Boundary::kPeriodic};
  BlockPartition p = partition_blocks(lat, 2, 2, 1, 1);
  CHECK(p.block_of_site(1, 1) == 0);
  CHECK(p.block_of_site(2, 2) == 0);
  CHECK(p.block_of_site(0, 0) == 3);  // wraps into the last block
  CHECK(p.block_of_site(3, 0) == 3);  // row 3 and col 0 both wrap
  CHECK(p.block_of_site(3, 1) == 2);
  auto [r, c] = p.cell(0, 1, 1);
  CHECK(r == 2);
  CHECK(c == 2);
  // single-block partition: all four sides are self edges
  BlockPartition q = partition_blocks(lat, 4, 4);
  CHECK(q.nblocks() == 1);
  CHECK(q.super_edges.size() == 2);
  CHECK(q.edge(0, Side::kRight).block_b == 0);
  CHECK(q.has_edge(0, Side::kLeft));
}

TEST_CASE("partition rejects non-divisible and open lattices") {
  Lattice lat{6, 6, Boundary::kPeriodic};
  CHECK_THROWS(partition_blocks(lat, 4, 3));
  Lattice obc{6, 6, Boundary::kOpen};
  CHECK_THROWS(partition_blocks(obc, 3, 3));
}

TEST_CASE("peps and flat serialization round-trips") {
  Lattice lat{2, 3, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 3, 17);
  std::string path = "/tmp/bbp_io_test.peps";
  save_peps(peps, path);
  PepsNetwork back = load_peps(path);
  CHECK(back.lat.rows == 2);
  CHECK(back.lat.cols == 3);
  CHECK(back.lat.boundary == Boundary::kOpen);
  for (int i = 0; i < 6; ++i)
    CHECK(max_abs_diff(back.sites[i], peps.sites[i]) == 0.0);

  FlatNetwork dl = build_double_layer(embed_obc_in_pbc(peps));
  std::string fpath = "/tmp/bbp_io_test.flat";
  save_flat(dl, fpath);
  FlatNetwork fback = load_flat(fpath);
  CHECK(fback.lat.periodic());
  CHECK(fback.double_layer());
  for (int i = 0; i < 6; ++i) {
    CHECK(max_abs_diff(fback.sites[i], dl.sites[i]) == 0.0);
    CHECK(fback.ket[i] == dl.ket[i]);
  }
  // sidecars exist
  CHECK(std::remove((path + ".json").c_str()) == 0);
  CHECK(std::remove((fpath + ".json").c_str()) == 0);
  std::remove(path.c_str());
  std::remove(fpath.c_str());
  CHECK_THROWS(load_peps("/tmp/bbp_io_missing.peps"));
}

TEST_CASE("exact diagonalization reference values") {
  // 2x2 open lattice is a 4-site Heisenberg ring: E0 = -2 exactly
  Lattice plaq{2, 2, Boundary::kOpen};
  CHECK(exact_ground_energy(ModelSpec::heisenberg(), plaq) ==
        doctest::Approx(-2.0).epsilon(1e-12));
  // zero-field Ising: fully aligned, one -J per edge
  Lattice l33{3, 3, Boundary::kOpen};
  CHECK(exact_ground_energy(ModelSpec::transverse_ising(0.0), l33) ==
        doctest::Approx(-12.0).epsilon(1e-10));
  // lanczos agrees with dense on the same hamiltonians
  Lattice l25{2, 5, Boundary::kOpen};
  for (ModelSpec m : {ModelSpec::transverse_ising(2.5), ModelSpec::heisenberg()}) {
    double ed = exact_ground_energy(m, l25, EdMethod::kDense);
    double el = exact_ground_energy(m, l25, EdMethod::kLanczos);
    CHECK(el == doctest::Approx(ed).epsilon(1e-10));
  }
  Lattice p33{3, 3, Boundary::kPeriodic};
  CHECK(exact_ground_energy(ModelSpec::heisenberg(), p33, EdMethod::kLanczos) ==
        doctest::Approx(exact_ground_energy(ModelSpec::heisenberg(), p33,
                                            EdMethod::kDense))
            .epsilon(1e-10));
}

TEST_CASE("network check rejects mismatched bonds") {
  Lattice lat{2, 2, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 2, 1);
  peps.site(0, 0) = bbptest::random_tensor({2, 1, 1, 2, 3}, 2);
  CHECK_THROWS(peps.check());
}
