#include "blockbp/gates.hpp"

#include <Eigen/Dense>

namespace blockbp {

namespace {
DenseTensor op2(cplx a, cplx b, cplx c, cplx d) {
  DenseTensor t({2, 2});
  t.at({0, 0}) = a;
  t.at({0, 1}) = b;
  t.at({1, 0}) = c;
  t.at({1, 1}) = d;
  return t;
}
}  // namespace

DenseTensor pauli_x() { return op2(0, 1, 1, 0); }
DenseTensor pauli_y() { return op2(0, cplx(0, -1), cplx(0, 1), 0); }
DenseTensor pauli_z() { return op2(1, 0, 0, -1); }
DenseTensor identity2() { return op2(1, 0, 0, 1); }

DenseTensor identity_op(index_t d) {
  DenseTensor t({d, d});
  for (index_t i = 0; i < d; ++i) t.at({i, i}) = 1;
  return t;
}

namespace {

// kron on [out,in] ops -> [pi_out, pj_out, pi_in, pj_in]
DenseTensor two_site(const DenseTensor& a, const DenseTensor& b) {
  DenseTensor t = contract(a, b, {});  // [ao, ai, bo, bi]
  return t.permute({0, 2, 1, 3});
}

}  // namespace

DenseTensor bond_hamiltonian(const ModelSpec& model, double wi, double wj) {
  DenseTensor sx = pauli_x(), sy = pauli_y(), sz = pauli_z(), id = identity2();
  DenseTensor h({2, 2, 2, 2});
  const double j = model.coupling;
  if (model.kind == ModelKind::kTransverseIsing) {
    h += cplx(-j, 0) * two_site(sz, sz);
    h += cplx(-model.field * wi, 0) * two_site(sx, id);
    h += cplx(-model.field * wj, 0) * two_site(id, sx);
  } else {
    // spin operators are sigma/2
    h += cplx(j / 4.0, 0) * two_site(sx, sx);
    h += cplx(j / 4.0, 0) * two_site(sy, sy);
    h += cplx(j / 4.0, 0) * two_site(sz, sz);
  }
  return h;
}

DenseTensor bond_exponential(const DenseTensor& h, double dtau) {
  index_t di = h.dim(0), dj = h.dim(1);
  index_t n = di * dj;
  Eigen::MatrixXcd m(n, n);
  for (index_t r = 0; r < n; ++r)
    for (index_t c = 0; c < n; ++c)
      m(r, c) = h.at({r / dj, r % dj, c / dj, c % dj});
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();
  Eigen::VectorXcd w(n);
  for (index_t i = 0; i < n; ++i) w(i) = std::exp(-dtau * ev(i));
  Eigen::MatrixXcd g = es.eigenvectors() * w.asDiagonal() *
                       es.eigenvectors().adjoint();
  DenseTensor out({di, dj, di, dj});
  for (index_t r = 0; r < n; ++r)
    for (index_t c = 0; c < n; ++c)
      out.at({r / dj, r % dj, c / dj, c % dj}) = g(r, c);
  return out;
}

int coordination(const Lattice& lat, int r, int c) {
  // periodic wrap: the "left" edge of c==0 is has_h_edge(r, cols-1)
  int cl = lat.periodic() ? lat.wrap_c(c - 1) : c - 1;
  int ru = lat.periodic() ? lat.wrap_r(r - 1) : r - 1;
  return int(lat.has_h_edge(r, c)) + int(lat.has_h_edge(r, cl)) +
         int(lat.has_v_edge(r, c)) + int(lat.has_v_edge(ru, c));
}

std::vector<TwoSiteGate> trotter_gates(const ModelSpec& model,
                                       const Lattice& lat, double dtau) {
  std::vector<TwoSiteGate> out;
  for (const Bond& b : lat.edges()) {
    int r2 = b.dir == Side::kDown ? lat.wrap_r(b.r + 1) : b.r;
    int c2 = b.dir == Side::kRight ? lat.wrap_c(b.c + 1) : b.c;
    double wi = 1.0 / coordination(lat, b.r, b.c);
    double wj = 1.0 / coordination(lat, r2, c2);
    TwoSiteGate g;
    g.bond = b;
    g.hterm = bond_hamiltonian(model, wi, wj);
    g.gate = bond_exponential(g.hterm, dtau);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace blockbp
