#include "blockbp/observables.hpp"

#include "blockbp/exact.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace blockbp;
using namespace bbptest;

namespace {

// Partition function and single-site averages by enumerating all 2^N spin
// configurations; shares nothing with the tensor construction.
struct BruteIsing {
  double z = 0;
  std::vector<double> sz;  // <s_i> per site

  BruteIsing(const Lattice& lat, double beta, double field) {
    int n = lat.nsites();
    sz.assign(n, 0.0);
    std::vector<Bond> bonds = lat.edges();
    for (long cfg = 0; cfg < (1L << n); ++cfg) {
      auto spin = [&](int site) { return (cfg >> site) & 1 ? -1.0 : 1.0; };
      double h = 0;
      for (const Bond& b : bonds) {
        int r2 = b.dir == Side::kDown ? lat.wrap_r(b.r + 1) : b.r;
        int c2 = b.dir == Side::kRight ? lat.wrap_c(b.c + 1) : b.c;
        h += spin(lat.site(b.r, b.c)) * spin(lat.site(r2, c2));
      }
      for (int r = 0; r < lat.rows; ++r)
        for (int c = 0; c < lat.cols; ++c) {
          double sgn = (r + c) % 2 == 0 ? 1.0 : -1.0;
          h -= field * sgn * spin(lat.site(r, c));
        }
      double w = std::exp(-beta * h);
      z += w;
      for (int i = 0; i < n; ++i) sz[i] += w * spin(i);
    }
    for (int i = 0; i < n; ++i) sz[i] /= z;
  }
};

}  // namespace

TEST_CASE("classical ising network reproduces the partition function") {
  struct Case {
    Boundary bc;
    double beta, field;
  };
  for (Case cs : {Case{Boundary::kOpen, 0.3, 0.0},
                  Case{Boundary::kPeriodic, 0.3, 0.0},
                  Case{Boundary::kPeriodic, 0.5, 0.1}}) {
    CAPTURE(int(cs.bc));
    CAPTURE(cs.field);
    Lattice lat{3, 3, cs.bc};
    BruteIsing brute(lat, cs.beta, cs.field);
    FlatNetwork net = classical_ising_network(lat, cs.beta, cs.field);
    double z = exact_contract(net).value().real();
    CHECK(std::abs(z - brute.z) < 1e-10 * brute.z);
  }
}

TEST_CASE("ising impurity gives the local magnetization") {
  Lattice lat{3, 3, Boundary::kPeriodic};
  double beta = 0.5, field = 0.1;
  BruteIsing brute(lat, beta, field);
  FlatNetwork net = classical_ising_network(lat, beta, field);
  ScaledScalar z = exact_contract(net);
  for (auto [r, c] : {std::pair{0, 0}, {1, 2}, {2, 1}}) {
    std::map<int, DenseTensor> repl{
        {lat.site(r, c), classical_ising_impurity(lat, r, c, beta, field,
                                                  /*staggered_sign=*/false)}};
    double got = (exact_contract_replaced(net, repl) / z).value().real();
    double want = brute.sz[lat.site(r, c)];
    CHECK(std::abs(got - want) < 1e-10);
    // staggered version flips the sign on odd sites
    repl[lat.site(r, c)] =
        classical_ising_impurity(lat, r, c, beta, field, true);
    double gs = (exact_contract_replaced(net, repl) / z).value().real();
    double sgn = (r + c) % 2 == 0 ? 1.0 : -1.0;
    CHECK(std::abs(gs - sgn * want) < 1e-10);
  }
}

TEST_CASE("onsager curve") {
  CHECK(onsager_magnetization(0.3) == 0.0);
  CHECK(onsager_magnetization(0.44) == 0.0);  // just below the critical point
  CHECK(std::abs(onsager_magnetization(0.45) - 0.7493226125323766) < 1e-12);
  CHECK(std::abs(onsager_magnetization(0.5) - 0.911319377877496) < 1e-12);
  CHECK(std::abs(onsager_magnetization(0.6) - 0.9736086674403005) < 1e-12);
}

TEST_CASE("trace distance on known pairs") {
  auto pure = [](const DenseTensor& psi) {
    DenseTensor rho =
        contract(psi, psi.conj(), {});  // [pa, pb, pa', pb']
    return rho;
  };
  DenseTensor a({2, 2});
  a.at({0, 1}) = 1;  // |01>
  DenseTensor b({2, 2});
  b.at({1, 0}) = 1;  // |10>
  CHECK(std::abs(trace_distance(pure(a), pure(a))) < 1e-14);
  CHECK(std::abs(trace_distance(pure(a), pure(b)) - 1.0) < 1e-12);

  // diagonal case: half the l1 distance of the distributions
  DenseTensor p({2, 2, 2, 2}), q({2, 2, 2, 2});
  double pv[4] = {0.5, 0.2, 0.2, 0.1}, qv[4] = {0.25, 0.25, 0.25, 0.25};
  for (index_t i = 0; i < 2; ++i)
    for (index_t j = 0; j < 2; ++j) {
      p.at({i, j, i, j}) = pv[2 * i + j];
      q.at({i, j, i, j}) = qv[2 * i + j];
    }
  double l1 = 0;
  for (int k = 0; k < 4; ++k) l1 += std::abs(pv[k] - qv[k]);
  CHECK(std::abs(trace_distance(p, q) - 0.5 * l1) < 1e-12);
}

TEST_CASE("bond energy of a product state") {
  DenseTensor psi({2, 2});
  psi.at({0, 1}) = 1;  // |01>
  DenseTensor rho = contract(psi, psi.conj(), {});
  DenseTensor h = bond_hamiltonian(ModelSpec::heisenberg(), 0, 0);
  CHECK(std::abs(bond_energy(rho, h) - (-0.25)) < 1e-14);
  DenseTensor hz = bond_hamiltonian(ModelSpec::transverse_ising(0.0), 0, 0);
  CHECK(std::abs(bond_energy(rho, hz) - 1.0) < 1e-14);  // -J sz sz, J=1
}

TEST_CASE("block magnetization tracks enumeration under a strong field") {
  // the message fixed point approximates the infinite lattice, so compare to
  // enumeration only where the field freezes out winding corrections and the
  // finite torus agrees with it; one loose warm case guards the conventions
  Lattice lat{4, 4, Boundary::kPeriodic};
  struct Case {
    double beta, field, tol;
  };
  for (Case cs :
       {Case{0.7, 0.5, 2e-4}, Case{0.5, 0.8, 5e-4}, Case{0.2, 0.5, 2e-2}}) {
    CAPTURE(cs.beta);
    BruteIsing brute(lat, cs.beta, cs.field);
    double want = 0;
    for (auto [r, c] : {std::pair{2, 2}, {2, 3}, {3, 2}, {3, 3}}) {
      double sgn = (r + c) % 2 == 0 ? 1.0 : -1.0;
      want += sgn * brute.sz[lat.site(r, c)];
    }
    want /= 4;
    EngineConfig ec;
    ec.seed = 5;
    ec.msg_trunc = {32, 1e-12};
    ec.tol = 1e-9;
    ec.max_rounds = 60;
    ClassicalResult res = classical_magnetization(lat, cs.beta, 2, 2, ec,
                                                  cs.field);
    CHECK(res.stats.converged);
    CHECK(std::abs(res.m - want) < cs.tol);
  }
}

TEST_CASE("a weak staggered field still selects the + branch") {
  Lattice lat{6, 6, Boundary::kPeriodic};
  EngineConfig ec;
  ec.seed = 8;
  ec.msg_trunc = {32, 1e-12};
  ec.tol = 1e-8;
  ec.max_rounds = 60;
  ClassicalResult res = classical_magnetization(lat, 0.6, 3, 3, ec, 1e-6);
  CHECK(res.stats.converged);
  CHECK(res.m > 0.9);  // + branch, not the - one and not the average
  CHECK(std::abs(res.m - onsager_magnetization(0.6)) < 5e-3);

  // disordered phase: the tilted start relaxes back to the symmetric point
  ClassicalResult hot = classical_magnetization(lat, 0.2, 3, 3, ec, 1e-6);
  CHECK(hot.stats.converged);
  CHECK(std::abs(hot.m) < 1e-4);
}

TEST_CASE("bond rdm matches the exact one on a block tree") {
  struct Probe {
    BondRef bond;
    std::pair<int, int> a, b;
  };
  Lattice lat{2, 6, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 2, 23);
  FlatNetwork dl = embed_obc_in_pbc(build_double_layer(peps));
  BlockPartition part = partition_blocks(dl.lat, 2, 2);
  MessageSet ms = random_messages(dl, part, 3);
  EngineConfig cfg;
  cfg.seed = 3;
  ConvergenceStats st = run_to_fixed_point(dl, part, ms, cfg);
  REQUIRE(st.converged);

  std::vector<Probe> probes = {
      {{0, 2, false}, {0, 2}, {0, 3}},   // horizontal, middle block
      {{0, 3, true}, {0, 3}, {1, 3}},    // vertical, middle block
      {{1, 4, false}, {1, 4}, {1, 5}},   // horizontal, last block
      {{0, 0, true}, {0, 0}, {1, 0}},    // vertical, first block
  };
  for (const Probe& pr : probes) {
    CAPTURE(pr.bond.r);
    CAPTURE(pr.bond.c);
    CAPTURE(pr.bond.vertical);
    DenseTensor got = bond_rdm(peps, dl, part, ms, pr.bond, {}, 77);
    DenseTensor want = exact_rdm(peps, pr.a, pr.b);
    CHECK(trace_distance(got, want) < 1e-9);
    // hermitian with unit trace by construction
    cplx tr(0, 0);
    for (index_t p = 0; p < 2; ++p)
      for (index_t q = 0; q < 2; ++q) tr += got.at({p, q, p, q});
    CHECK(std::abs(tr - cplx(1, 0)) < 1e-12);
  }
}
