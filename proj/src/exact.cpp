#include "blockbp/exact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace blockbp {

namespace {

// Raster-order frontier contraction.  Site tensors end with legs (u,l,d,r);
// any leading legs stay open and are collected in processing order.  Top and
// row-wrap legs are kept open until their partner appears, so periodic grids
// work at the cost of a wider frontier.
class Raster {
 public:
  Raster(const Lattice& lat, index_t cap) : lat_(lat), cap_(cap) {
    f_ = DenseTensor::scalar(1);
    tpos_.assign(lat.cols, -1);
    vpos_.assign(lat.cols, -1);
  }

  void push(int r, int c, const DenseTensor& t) {
    const int base = t.rank() - 4;  // leading open legs
    BBP_CHECK(base >= 0, "raster: site tensor rank too small");
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> removed;
    if (r > 0) {
      pairs.push_back({vpos_[c], base + 0});
      removed.push_back(vpos_[c]);
    }
    if (c > 0) {
      pairs.push_back({hpos_, base + 1});
      removed.push_back(hpos_);
    }
    check_cap(t, pairs);
    std::sort(removed.begin(), removed.end());
    f_ = contract(f_, t,
                  std::span<const std::pair<int, int>>(pairs.data(), pairs.size()));
    reindex(removed);
    // appended legs, in site order: opens..., u if kept, l if kept, d, r
    int p = fr_;
    for (int i = 0; i < base; ++i) open_.push_back(p++);
    if (r == 0) tpos_[c] = p++;
    if (c == 0) wpos_ = p++;
    vpos_[c] = p++;
    hpos_ = p++;
    fr_ = p;
    rescale();
    if (c == lat_.cols - 1) trace(hpos_, wpos_);
    if (r == lat_.rows - 1 && c == lat_.cols - 1)
      for (int cc = 0; cc < lat_.cols; ++cc) trace(vpos_[cc], tpos_[cc]);
  }

  // after the full sweep: remaining legs are exactly the open ones
  DenseTensor open_tensor() {
    std::vector<int> perm(open_.begin(), open_.end());
    return f_.permute(std::span<const int>(perm.data(), perm.size()));
  }
  double log_acc() const { return log_acc_; }
  bool zero() const { return zero_; }

  ScaledScalar scalar() const {
    BBP_CHECK(f_.rank() == 0, "raster: leftover open legs");
    if (zero_) return ScaledScalar::from(0);
    ScaledScalar s = ScaledScalar::from(f_[0]);
    s.log_mag += log_acc_;
    return s;
  }

 private:
  void check_cap(const DenseTensor& t, const std::vector<std::pair<int, int>>& pairs) {
    index_t paired_f = 1, paired_t = 1;
    for (auto [a, b] : pairs) {
      paired_f *= f_.dim(a);
      paired_t *= t.dim(b);
    }
    index_t result = (f_.size() / paired_f) * (t.size() / paired_t);
    BBP_CHECK(result <= cap_, "raster: frontier needs ", result,
              " entries, cap is ", cap_);
  }

  void reindex(const std::vector<int>& removed_sorted) {
    auto shift = [&](int pos) {
      if (pos < 0) return pos;
      int s = 0;
      for (int rm : removed_sorted) {
        if (rm == pos) return -1;
        if (rm < pos) ++s;
      }
      return pos - s;
    };
    for (int& p : open_) p = shift(p);
    for (int& p : tpos_) p = shift(p);
    for (int& p : vpos_) p = shift(p);
    wpos_ = shift(wpos_);
    hpos_ = shift(hpos_);
    fr_ -= static_cast<int>(removed_sorted.size());
  }

  void trace(int a, int b) {
    BBP_CHECK(a >= 0 && b >= 0 && f_.dim(a) == f_.dim(b),
              "raster: wrap legs do not match");
    DenseTensor id = identity_op(f_.dim(a));
    std::vector<int> removed = {a, b};
    std::sort(removed.begin(), removed.end());
    f_ = contract(f_, id, {{a, 0}, {b, 1}});
    reindex(removed);
    rescale();
  }

  void rescale() {
    double n = f_.norm();
    if (n == 0) {
      zero_ = true;
      return;
    }
    f_ *= cplx(1.0 / n, 0);
    log_acc_ += std::log(n);
  }

  Lattice lat_;
  index_t cap_;
  DenseTensor f_;
  std::vector<int> open_, tpos_, vpos_;
  int wpos_ = -1, hpos_ = -1, fr_ = 0;
  double log_acc_ = 0;
  bool zero_ = false;
};

DenseTensor open_double_site(const DenseTensor& t) {
  // [p, p*, u2, l2, d2, r2]: double layer with the physical pair kept open
  DenseTensor f = contract(t, t.conj(), {});
  // [p,u,l,d,r, p*,u*,l*,d*,r*]
  f = f.permute({0, 5, 1, 6, 2, 7, 3, 8, 4, 9});
  const Shape& s = f.shape();
  return f.reshape(
      {s[0], s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7], s[8] * s[9]});
}

}  // namespace

ScaledScalar exact_contract(const FlatNetwork& net, index_t max_entries) {
  net.check();
  Raster ra(net.lat, max_entries);
  for (int r = 0; r < net.lat.rows; ++r)
    for (int c = 0; c < net.lat.cols; ++c) ra.push(r, c, net.site(r, c));
  return ra.scalar();
}

ScaledScalar exact_contract_replaced(
    const FlatNetwork& net, const std::map<int, DenseTensor>& replacements,
    index_t max_entries) {
  Raster ra(net.lat, max_entries);
  for (int r = 0; r < net.lat.rows; ++r)
    for (int c = 0; c < net.lat.cols; ++c) {
      auto it = replacements.find(net.lat.site(r, c));
      ra.push(r, c, it == replacements.end() ? net.site(r, c) : it->second);
    }
  return ra.scalar();
}

DenseTensor exact_statevector(const PepsNetwork& peps, index_t max_entries) {
  peps.check();
  Raster ra(peps.lat, max_entries);
  for (int r = 0; r < peps.lat.rows; ++r)
    for (int c = 0; c < peps.lat.cols; ++c) ra.push(r, c, peps.site(r, c));
  DenseTensor psi = ra.open_tensor();
  double n = psi.norm();
  BBP_CHECK(n > 0, "exact_statevector: vanishing state");
  psi *= cplx(1.0 / n, 0);
  return psi;
}

DenseTensor exact_rdm(const PepsNetwork& peps, std::pair<int, int> a,
                      std::pair<int, int> b, index_t max_entries) {
  peps.check();
  const Lattice& lat = peps.lat;
  int sa = lat.site(a.first, a.second), sb = lat.site(b.first, b.second);
  BBP_CHECK(sa != sb, "exact_rdm: sites coincide");
  Raster ra(lat, max_entries);
  for (int r = 0; r < lat.rows; ++r)
    for (int c = 0; c < lat.cols; ++c) {
      int s = lat.site(r, c);
      if (s == sa || s == sb)
        ra.push(r, c, open_double_site(peps.site(r, c)));
      else
        ra.push(r, c, double_layer_site(peps.site(r, c)));
    }
  DenseTensor rho = ra.open_tensor();  // [p1, p1*, p2, p2*] raster order
  rho = rho.permute({0, 2, 1, 3});     // [p1, p2, p1*, p2*]
  if (sa > sb) rho = rho.permute({1, 0, 3, 2});
  cplx tr(0, 0);
  for (index_t i = 0; i < rho.dim(0); ++i)
    for (index_t j = 0; j < rho.dim(1); ++j) tr += rho.at({i, j, i, j});
  BBP_CHECK(std::abs(tr) > 0, "exact_rdm: zero trace");
  rho *= cplx(1, 0) / tr;
  return rho;
}

namespace {

// Hamiltonian action in the sigma-z product basis, bit i = site i.
class SpinHamiltonian {
 public:
  SpinHamiltonian(const ModelSpec& model, const Lattice& lat)
      : model_(model), n_(lat.nsites()) {
    BBP_CHECK(n_ <= 20, "exact_ground_energy: ", n_, " spins is too many");
    for (const Bond& b : lat.edges()) {
      int r2 = b.dir == Side::kDown ? lat.wrap_r(b.r + 1) : b.r;
      int c2 = b.dir == Side::kRight ? lat.wrap_c(b.c + 1) : b.c;
      pairs_.push_back({lat.site(b.r, b.c), lat.site(r2, c2)});
    }
    dim_ = size_t(1) << n_;
    // diagonal part: Ising -J sz sz, Heisenberg J/4 sz sz
    diag_.assign(dim_, 0.0);
    double zz = model.kind == ModelKind::kTransverseIsing ? -model.coupling
                                                          : model.coupling / 4.0;
    for (size_t s = 0; s < dim_; ++s) {
      double e = 0;
      for (auto [i, j] : pairs_) {
        int zi = (s >> i) & 1 ? -1 : 1;
        int zj = (s >> j) & 1 ? -1 : 1;
        e += zz * zi * zj;
      }
      diag_[s] = e;
    }
  }

  size_t dim() const { return dim_; }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    for (size_t s = 0; s < dim_; ++s) y[s] = diag_[s] * x[s];
    if (model_.kind == ModelKind::kTransverseIsing) {
      for (int i = 0; i < n_; ++i) {
        size_t mask = size_t(1) << i;
        for (size_t s = 0; s < dim_; ++s) y[s] -= model_.field * x[s ^ mask];
      }
    } else {
      // J/2 (S+S- + S-S+): acts when the two bits differ
      for (auto [i, j] : pairs_) {
        size_t mask = (size_t(1) << i) | (size_t(1) << j);
        for (size_t s = 0; s < dim_; ++s) {
          int zi = (s >> i) & 1, zj = (s >> j) & 1;
          if (zi != zj) y[s] += model_.coupling * 0.5 * x[s ^ mask];
        }
      }
    }
  }

  double dense_ground() const {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    std::vector<double> e(dim_, 0.0), he(dim_);
    for (size_t c = 0; c < dim_; ++c) {
      e[c] = 1;
      apply(e, he);
      for (size_t r = 0; r < dim_; ++r) h(r, c) = he[r];
      e[c] = 0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

  double lanczos_ground(uint64_t seed, int max_iters, double tol) const {
    std::vector<double> v(dim_), w(dim_), prev(dim_, 0.0);
    Rng rng(seed);
    double n2 = 0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n2);
    std::vector<double> alpha, beta;  // tridiagonal coefficients
    double last = 1e300;
    for (int it = 0; it < max_iters; ++it) {
      apply(v, w);
      double a = 0;
      for (size_t s = 0; s < dim_; ++s) a += v[s] * w[s];
      alpha.push_back(a);
      for (size_t s = 0; s < dim_; ++s)
        w[s] -= a * v[s] + (beta.empty() ? 0.0 : beta.back() * prev[s]);
      double b2 = 0;
      for (double x : w) b2 += x * x;
      double b = std::sqrt(b2);
      // ground eigenvalue of the tridiagonal matrix so far
      size_t k = alpha.size();
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
      for (size_t i = 0; i < k; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t,
                                                        Eigen::EigenvaluesOnly);
      double theta = es.eigenvalues()(0);
      if (std::abs(theta - last) < tol * std::max(1.0, std::abs(theta)))
        return theta;
      last = theta;
      if (b < 1e-14) return theta;  // exact invariant subspace
      beta.push_back(b);
      prev = v;
      for (size_t s = 0; s < dim_; ++s) v[s] = w[s] / b;
    }
    return last;
  }

 private:
  ModelSpec model_;
  int n_;
  size_t dim_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<double> diag_;
};

}  // namespace

double exact_ground_energy(const ModelSpec& model, const Lattice& lat,
                           EdMethod method) {
  SpinHamiltonian h(model, lat);
  bool dense = method == EdMethod::kDense ||
               (method == EdMethod::kAuto && lat.nsites() <= 12);
  if (dense) return h.dense_ground();
  return h.lanczos_ground(derive_seed(12345, "lanczos"), 600, 1e-12);
}

double exact_energy_of_peps(const ModelSpec& model, const PepsNetwork& peps,
                            index_t max_entries) {
  DenseTensor psi = exact_statevector(peps, max_entries);
  const Lattice& lat = peps.lat;
  int n = lat.nsites();
  BBP_CHECK(n <= 14, "exact_energy_of_peps: too many sites");
  // flatten to 2^n: raster-order legs, site 0 slowest
  std::vector<cplx> x(psi.data(), psi.data() + psi.size());
  double energy = 0;
  auto site_bitpos = [&](int s) { return n - 1 - s; };  // site 0 = high bit
  for (const Bond& b : lat.edges()) {
    int r2 = b.dir == Side::kDown ? lat.wrap_r(b.r + 1) : b.r;
    int c2 = b.dir == Side::kRight ? lat.wrap_c(b.c + 1) : b.c;
    int i = site_bitpos(lat.site(b.r, b.c)), j = site_bitpos(lat.site(r2, c2));
    double wi = 1.0 / coordination(lat, b.r, b.c);
    double wj = 1.0 / coordination(lat, r2, c2);
    DenseTensor h = bond_hamiltonian(model, wi, wj);
    // <x| h_ij |x>
    cplx acc(0, 0);
    size_t dim = x.size();
    for (size_t s = 0; s < dim; ++s) {
      int bi = (s >> i) & 1, bj = (s >> j) & 1;
      for (int bi2 = 0; bi2 < 2; ++bi2)
        for (int bj2 = 0; bj2 < 2; ++bj2) {
          cplx amp = h.at({bi, bj, bi2, bj2});
          if (amp == cplx(0, 0)) continue;
          size_t s2 = s;
          if (bi2 != bi) s2 ^= size_t(1) << i;
          if (bj2 != bj) s2 ^= size_t(1) << j;
          acc += std::conj(x[s]) * amp * x[s2];
        }
    }
    energy += acc.real();
  }
  return energy;
}

}  // namespace blockbp
