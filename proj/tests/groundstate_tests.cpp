#include "blockbp/groundstate.hpp"

#include <cmath>

#include "blockbp/exact.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace blockbp;
using namespace bbptest;

namespace {

// independent quadratic form of a pair environment given as [kets(6), bras(6)]
cplx env_form(const DenseTensor& e12, const DenseTensor& x,
              const DenseTensor& y) {
  // x, y in theta layout [pa, pb, au, al, ad, bu, bd, br]
  DenseTensor t = contract(
      e12, x, {{0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 7}});
  DenseTensor q = contract(t, y.conj(),
                           {{0, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 7},
                            {6, 0}, {7, 1}});
  return q[0];
}

// full-rank psd environment over the given single-layer leg dims
DenseTensor psd_env12(const Shape& kets, uint64_t seed) {
  index_t n = 1;
  for (index_t k : kets) n *= k;
  Shape s = kets;
  s.push_back(n + 7);
  DenseTensor r = random_tensor(s, seed);
  return contract(r, r.conj(), {{6, 6}});
}

// fuse [kets(6), bras(6)] into the rank-6 layout full_update_pair consumes
DenseTensor fuse_env(const DenseTensor& e12) {
  Shape fused;
  for (int l = 0; l < 6; ++l) fused.push_back(e12.dim(l) * e12.dim(l + 6));
  return e12.permute({0, 6, 1, 7, 2, 8, 3, 9, 4, 10, 5, 11}).reshape(fused);
}

DenseTensor theta_layout_pair(const DenseTensor& a, const DenseTensor& b) {
  return contract(a, b, {{4, 2}}).permute({0, 4, 1, 2, 3, 5, 6, 7});
}

// apply a two-site gate to a statevector with legs in row-major site order
DenseTensor apply_gate_state(const DenseTensor& psi, const Lattice& lat,
                             const TwoSiteGate& g) {
  int i = lat.site(g.bond.r, g.bond.c);
  int j = g.bond.dir == Side::kRight
              ? lat.site(g.bond.r, lat.wrap_c(g.bond.c + 1))
              : lat.site(lat.wrap_r(g.bond.r + 1), g.bond.c);
  DenseTensor out = contract(g.gate, psi, {{2, i}, {3, j}});
  int n = psi.rank();
  std::vector<int> perm(n);
  int pos = 2;
  for (int l = 0; l < n; ++l) {
    if (l == i)
      perm[l] = 0;
    else if (l == j)
      perm[l] = 1;
    else
      perm[l] = pos++;
  }
  return out.permute(perm);
}

double overlap_mag(const DenseTensor& a, const DenseTensor& b) {
  cplx ov(0, 0);
  double na = 0, nb = 0;
  for (index_t i = 0; i < a.size(); ++i) {
    ov += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  return std::abs(ov) / std::sqrt(na * nb);
}

const TwoSiteGate& find_gate(const std::vector<TwoSiteGate>& gates,
                             const Bond& b) {
  for (const TwoSiteGate& g : gates)
    if (g.bond == b) return g;
  REQUIRE(false);
  return gates.front();
}

}  // namespace

TEST_CASE("full update at full rank reproduces the gate") {
  Shape kets{2, 3, 2, 2, 3, 2};
  DenseTensor e12 = psd_env12(kets, 91);
  DenseTensor env6 = fuse_env(e12);
  DenseTensor a = random_tensor({2, 2, 3, 2, 2}, 92);
  DenseTensor b = random_tensor({2, 2, 2, 3, 2}, 93);
  DenseTensor gate =
      bond_exponential(bond_hamiltonian(ModelSpec::heisenberg(), 0.5, 0.5),
                       0.3);
  DenseTensor theta = contract(gate, contract(a, b, {{4, 2}}),
                               {{2, 0}, {3, 4}});

  EvolutionConfig cfg;
  cfg.svd_cutoff = 0;
  cfg.als_rtol = 1e-12;
  PairUpdate pu = full_update_pair(env6, a, b, gate, 24, cfg);
  CHECK(pu.converged);
  CHECK(pu.clipped < 1e-12);

  DenseTensor pair = theta_layout_pair(a, b);
  // unit environment norm
  CHECK(env_form(e12, pair, pair).real() == doctest::Approx(1.0).epsilon(1e-8));
  // direction matches gate.pair: overlap saturates cauchy-schwarz
  double s = std::sqrt(env_form(e12, theta, theta).real());
  double ov = std::abs(env_form(e12, pair, theta)) / s;
  CHECK(ov == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("als truncation never loses to the svd split") {
  Shape kets{2, 2, 2, 2, 2, 2};
  DenseTensor e12 = psd_env12(kets, 191);
  DenseTensor env6 = fuse_env(e12);
  DenseTensor a0 = random_tensor({2, 2, 2, 2, 3}, 192);
  DenseTensor b0 = random_tensor({2, 2, 3, 2, 2}, 193);
  DenseTensor gate =
      bond_exponential(bond_hamiltonian(ModelSpec::transverse_ising(2.0),
                                        0.25, 0.25),
                       0.4);
  DenseTensor theta = contract(gate, contract(a0, b0, {{4, 2}}),
                               {{2, 0}, {3, 4}});
  double c0 = env_form(e12, theta, theta).real();

  // scale-optimal fit loss relative to c0: 1 - |<pair,theta>|^2/(c0 <pair,pair>)
  auto rel_loss = [&](const DenseTensor& a, const DenseTensor& b) {
    DenseTensor p = theta_layout_pair(a, b);
    double pp = env_form(e12, p, p).real();
    double pt = std::norm(env_form(e12, p, theta));
    return 1.0 - pt / (pp * c0);
  };

  SvdResult sv = svd_truncate(theta, {0, 2, 3, 4}, {2, 0});
  std::vector<double> rt(sv.values.size());
  for (size_t i = 0; i < rt.size(); ++i) rt[i] = std::sqrt(sv.values[i]);
  DenseTensor asvd = scale_cols(sv.u, rt);
  DenseTensor bsvd = scale_rows(sv.vh, rt).permute({1, 2, 0, 3, 4});
  double loss_svd = rel_loss(asvd, bsvd);

  DenseTensor a = a0, b = b0;
  EvolutionConfig cfg;
  cfg.svd_cutoff = 0;
  PairUpdate pu = full_update_pair(env6, a, b, gate, 2, cfg);
  CHECK(a.dim(4) == 2);
  double loss_als = rel_loss(a, b);
  CHECK(loss_als >= -1e-10);
  CHECK(loss_als <= loss_svd + 1e-10);
  CHECK(pu.iters >= 1);
}

TEST_CASE("separable environment is the product of its vectors") {
  Shape dims{2, 3, 2, 2, 3, 2};
  std::vector<DenseTensor> v;
  for (int l = 0; l < 6; ++l) v.push_back(random_tensor({dims[l]}, 70 + l));
  DenseTensor env = separable_pair_env(v[0], v[1], v[2], v[3], v[4], v[5]);
  REQUIRE(env.shape() == dims);
  for (index_t i0 = 0; i0 < dims[0]; ++i0)
    for (index_t i1 = 0; i1 < dims[1]; ++i1)
      for (index_t i2 = 0; i2 < dims[2]; ++i2)
        for (index_t i3 = 0; i3 < dims[3]; ++i3)
          for (index_t i4 = 0; i4 < dims[4]; ++i4)
            for (index_t i5 = 0; i5 < dims[5]; ++i5) {
              cplx p = v[0][i0] * v[1][i1] * v[2][i2] * v[3][i3] * v[4][i4] *
                       v[5][i5];
              CHECK(std::abs(env.at({i0, i1, i2, i3, i4, i5}) - p) < 1e-13);
            }
}

TEST_CASE("one sweep applies exactly the trotter gates (one-site blocks)") {
  Lattice lat{2, 2, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 1, 11);
  EvolutionConfig cfg;
  cfg.model = ModelSpec::heisenberg();
  cfg.dtau = 0.3;
  cfg.sweeps = 1;
  cfg.bond_dim = 64;
  cfg.block_h = cfg.block_w = 1;
  cfg.measure_every = 0;
  cfg.seed = 21;

  std::vector<TwoSiteGate> gates = trotter_gates(cfg.model, lat, cfg.dtau);
  DenseTensor target = exact_statevector(peps);
  // group order: even then odd columns, even then odd rows
  std::vector<Bond> order{{0, 0, Side::kRight},
                          {1, 0, Side::kRight},
                          {0, 0, Side::kDown},
                          {0, 1, Side::kDown}};
  for (const Bond& b : order)
    target = apply_gate_state(target, lat, find_gate(gates, b));

  EvolutionResult res = run_ground_state(peps, cfg);
  DenseTensor evolved = exact_statevector(res.peps);
  CHECK(overlap_mag(evolved, target) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("one sweep applies exactly the trotter gates (2x2 blocks)") {
  Lattice lat{2, 4, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 1, 13);
  EvolutionConfig cfg;
  cfg.model = ModelSpec::heisenberg();
  cfg.dtau = 0.25;
  cfg.sweeps = 1;
  cfg.bond_dim = 64;
  cfg.block_h = cfg.block_w = 2;
  cfg.measure_every = 0;
  cfg.seed = 7;

  std::vector<TwoSiteGate> gates = trotter_gates(cfg.model, lat, cfg.dtau);
  DenseTensor target = exact_statevector(peps);
  // offset (0,0): per block horizontal rows then verticals; offset (1,1)
  // owns the two remaining horizontal bonds, lattice row 1 is visited first
  std::vector<Bond> order{
      {0, 0, Side::kRight}, {1, 0, Side::kRight}, {0, 0, Side::kDown},
      {0, 1, Side::kDown},  {0, 2, Side::kRight}, {1, 2, Side::kRight},
      {0, 2, Side::kDown},  {0, 3, Side::kDown},  {1, 1, Side::kRight},
      {0, 1, Side::kRight}};
  for (const Bond& b : order)
    target = apply_gate_state(target, lat, find_gate(gates, b));

  EvolutionResult res = run_ground_state(peps, cfg);
  DenseTensor evolved = exact_statevector(res.peps);
  CHECK(overlap_mag(evolved, target) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("chain evolution reaches the chain ground state") {
  Lattice lat{1, 6, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 2, 5);
  EvolutionConfig cfg;
  cfg.model = ModelSpec::heisenberg();
  cfg.block_h = cfg.block_w = 1;
  cfg.bond_dim = 8;
  cfg.bp_tol = 1e-9;
  cfg.bp_max_rounds = 20;
  cfg.dtau = 0.1;
  cfg.sweeps = 40;
  cfg.measure_every = 10;
  cfg.seed = 31;
  EvolutionResult res = run_ground_state(peps, cfg);
  CHECK(res.trace.front().energy >= res.trace.back().energy - 1e-9);

  cfg.dtau = 0.02;
  cfg.sweeps = 30;
  cfg.measure_every = 0;
  EvolutionResult res2 = run_ground_state(res.peps, cfg);

  // message passing is exact on a chain: the reported energy is <H>
  double direct = exact_energy_of_peps(cfg.model, res2.peps);
  CHECK(res2.energy == doctest::Approx(direct).epsilon(1e-6));

  double e0 = exact_ground_energy(cfg.model, lat, EdMethod::kDense);
  CHECK(res2.energy >= e0 - 1e-9);
  CHECK(res2.energy - e0 <= 0.02 * std::abs(e0));
}

TEST_CASE("block evolution on a ladder approaches the ground state") {
  Lattice lat{2, 4, Boundary::kOpen};
  PepsNetwork peps = random_peps(lat, 2, 2, 3);
  EvolutionConfig cfg;
  cfg.model = ModelSpec::heisenberg();
  cfg.block_h = cfg.block_w = 2;
  cfg.bond_dim = 4;
  cfg.bp_tol = 1e-8;
  cfg.bp_max_rounds = 15;
  cfg.dtau = 0.1;
  cfg.sweeps = 25;
  cfg.measure_every = 5;
  cfg.seed = 17;

  auto run_chain = [&](ThreadPool* pool) {
    EvolutionConfig c = cfg;
    c.pool = pool;
    EvolutionResult r1 = run_ground_state(peps, c);
    c.dtau = 0.03;
    c.sweeps = 15;
    EvolutionResult r2 = run_ground_state(r1.peps, c);
    r2.trace.insert(r2.trace.begin(), r1.trace.begin(), r1.trace.end());
    return r2;
  };
  EvolutionResult res = run_chain(nullptr);

  CHECK(res.trace.front().energy >= res.trace.back().energy - 1e-9);
  double direct = exact_energy_of_peps(cfg.model, res.peps);
  CHECK(res.energy == doctest::Approx(direct).epsilon(1e-6));
  double e0 = exact_ground_energy(cfg.model, lat, EdMethod::kDense);
  CHECK(res.energy >= e0 - 1e-9);
  CHECK(res.energy - e0 <= 0.05 * std::abs(e0));

  // worker count must not change a single bit of the result
  ThreadPool pool(4);
  EvolutionResult par = run_chain(&pool);
  REQUIRE(par.trace.size() == res.trace.size());
  for (size_t i = 0; i < res.trace.size(); ++i)
    CHECK(par.trace[i].energy == res.trace[i].energy);
  CHECK(max_abs_diff(exact_statevector(par.peps),
                     exact_statevector(res.peps)) == 0.0);
}
