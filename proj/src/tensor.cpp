#include "blockbp/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace blockbp {

using Mat =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

index_t DenseTensor::offset(std::initializer_list<index_t> idx) const {
  BBP_CHECK(static_cast<int>(idx.size()) == rank(), "tensor: index rank ",
            idx.size(), " vs tensor rank ", rank());
  index_t off = 0;
  int leg = 0;
  for (index_t i : idx) {
    BBP_CHECK(i >= 0 && i < shape_[leg], "tensor: index ", i, " out of range on leg ",
              leg, " with shape ", shape_str(shape_));
    off = off * shape_[leg] + i;
    ++leg;
  }
  return off;
}

Shape DenseTensor::strides() const {
  Shape st(shape_.size(), 1);
  for (int i = rank() - 2; i >= 0; --i) st[i] = st[i + 1] * shape_[i + 1];
  return st;
}

double DenseTensor::norm2() const {
  double s = 0;
  for (const cplx& v : data_) s += std::norm(v);
  return s;
}

double DenseTensor::norm() const { return std::sqrt(norm2()); }

DenseTensor& DenseTensor::operator*=(cplx s) {
  for (cplx& v : data_) v *= s;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& o) {
  BBP_CHECK(shape_ == o.shape_, "tensor: += shape mismatch ", shape_str(shape_),
            " vs ", shape_str(o.shape_));
  for (index_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& o) {
  BBP_CHECK(shape_ == o.shape_, "tensor: -= shape mismatch ", shape_str(shape_),
            " vs ", shape_str(o.shape_));
  for (index_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

DenseTensor DenseTensor::conj() const {
  DenseTensor out(shape_);
  for (index_t i = 0; i < size(); ++i) out.data_[i] = std::conj(data_[i]);
  return out;
}

DenseTensor DenseTensor::permute(std::span<const int> perm) const {
  BBP_CHECK(static_cast<int>(perm.size()) == rank(), "permute: got ",
            perm.size(), " legs for rank ", rank());
  std::vector<char> seen(rank(), 0);
  Shape out_shape(rank());
  for (int i = 0; i < rank(); ++i) {
    int p = perm[i];
    BBP_CHECK(p >= 0 && p < rank() && !seen[p], "permute: bad permutation entry ", p);
    seen[p] = 1;
    out_shape[i] = shape_[p];
  }
  DenseTensor out(out_shape);
  if (size() == 0) return out;
  if (rank() == 0) {
    out.data_[0] = data_[0];
    return out;
  }
  Shape in_strides = strides();
  // stride of input leg perm[i] advanced when output leg i increments
  Shape gather(rank());
  for (int i = 0; i < rank(); ++i) gather[i] = in_strides[perm[i]];
  Shape counter(rank(), 0);
  index_t src = 0;
  const int last = rank() - 1;
  for (index_t dst = 0; dst < size(); ++dst) {
    out.data_[dst] = data_[src];
    int leg = last;
    while (leg >= 0) {
      src += gather[leg];
      if (++counter[leg] < out_shape[leg]) break;
      src -= gather[leg] * out_shape[leg];
      counter[leg] = 0;
      --leg;
    }
  }
  return out;
}

DenseTensor DenseTensor::reshape(Shape new_shape) const {
  BBP_CHECK(shape_size(new_shape) == size(), "reshape: ", shape_str(shape_),
            " -> ", shape_str(new_shape), " changes size");
  DenseTensor out(std::move(new_shape), data_);
  return out;
}

void DenseTensor::fill_normal(Rng& rng, bool complex_entries) {
  if (complex_entries) {
    for (cplx& v : data_) v = rng.cnormal();
  } else {
    for (cplx& v : data_) v = rng.normal();
  }
}

void DenseTensor::fill_uniform(Rng& rng) {
  for (cplx& v : data_) v = rng.uniform();
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::pair<int, int>> pairs) {
  std::vector<char> used_a(a.rank(), 0), used_b(b.rank(), 0);
  index_t inner = 1;
  for (auto [la, lb] : pairs) {
    BBP_CHECK(la >= 0 && la < a.rank() && !used_a[la],
              "contract: bad lhs leg ", la, " (rank ", a.rank(), ")");
    BBP_CHECK(lb >= 0 && lb < b.rank() && !used_b[lb],
              "contract: bad rhs leg ", lb, " (rank ", b.rank(), ")");
    BBP_CHECK(a.dim(la) == b.dim(lb), "contract: leg ", la, " of lhs (dim ",
              a.dim(la), ") vs leg ", lb, " of rhs (dim ", b.dim(lb), "), shapes ",
              shape_str(a.shape()), " and ", shape_str(b.shape()));
    used_a[la] = used_b[lb] = 1;
    inner *= a.dim(la);
  }
  std::vector<int> perm_a, perm_b;
  Shape out_shape;
  for (int i = 0; i < a.rank(); ++i)
    if (!used_a[i]) {
      perm_a.push_back(i);
      out_shape.push_back(a.dim(i));
    }
  for (auto [la, lb] : pairs) perm_a.push_back(la);
  for (auto [la, lb] : pairs) perm_b.push_back(lb);
  for (int i = 0; i < b.rank(); ++i)
    if (!used_b[i]) {
      perm_b.push_back(i);
      out_shape.push_back(b.dim(i));
    }
  DenseTensor ap = a.permute(perm_a);
  DenseTensor bp = b.permute(perm_b);
  index_t rows = ap.size() / inner;
  index_t cols = bp.size() / inner;
  DenseTensor out(out_shape);
  CMatMap ma(ap.data(), rows, inner);
  CMatMap mb(bp.data(), inner, cols);
  MatMap mc(out.data(), rows, cols);
  mc.noalias() = ma * mb;
  return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<std::pair<int, int>> pairs) {
  return contract(a, b,
                  std::span<const std::pair<int, int>>(pairs.begin(), pairs.size()));
}

namespace {

struct Matricized {
  Mat m;
  Shape row_dims, col_dims;
  std::vector<int> row_legs, col_legs;
};

Matricized matricize(const DenseTensor& t, std::span<const int> row_legs) {
  std::vector<char> used(t.rank(), 0);
  Matricized out;
  for (int l : row_legs) {
    BBP_CHECK(l >= 0 && l < t.rank() && !used[l], "split: bad row leg ", l);
    used[l] = 1;
    out.row_legs.push_back(l);
    out.row_dims.push_back(t.dim(l));
  }
  BBP_CHECK(!out.row_legs.empty() &&
                out.row_legs.size() < static_cast<size_t>(t.rank()),
            "split: row legs must be a proper nonempty subset");
  for (int l = 0; l < t.rank(); ++l)
    if (!used[l]) {
      out.col_legs.push_back(l);
      out.col_dims.push_back(t.dim(l));
    }
  std::vector<int> perm = out.row_legs;
  perm.insert(perm.end(), out.col_legs.begin(), out.col_legs.end());
  DenseTensor tp = t.permute(perm);
  out.m = CMatMap(tp.data(), shape_size(out.row_dims), shape_size(out.col_dims));
  return out;
}

DenseTensor from_matrix(const Mat& m, const Shape& row_dims, const Shape& col_dims) {
  Shape shape = row_dims;
  shape.insert(shape.end(), col_dims.begin(), col_dims.end());
  DenseTensor out(shape);
  MatMap(out.data(), m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

SplitResult qr_split(const DenseTensor& t, std::span<const int> row_legs) {
  Matricized mt = matricize(t, row_legs);
  index_t k = std::min<index_t>(mt.m.rows(), mt.m.cols());
  Eigen::HouseholderQR<Mat> qr(mt.m);
  Mat q = qr.householderQ() * Mat::Identity(mt.m.rows(), k);
  Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  SplitResult out;
  out.first = from_matrix(q, mt.row_dims, {k});
  out.second = from_matrix(r, {k}, mt.col_dims);
  return out;
}

SplitResult lq_split(const DenseTensor& t, std::span<const int> row_legs) {
  Matricized mt = matricize(t, row_legs);
  index_t k = std::min<index_t>(mt.m.rows(), mt.m.cols());
  Mat mh = mt.m.adjoint();
  Eigen::HouseholderQR<Mat> qr(mh);
  Mat q = (qr.householderQ() * Mat::Identity(mh.rows(), k)).adjoint();
  Mat l = Mat(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>()).adjoint();
  SplitResult out;
  out.first = from_matrix(l, mt.row_dims, {k});
  out.second = from_matrix(q, {k}, mt.col_dims);
  return out;
}

SvdResult svd_truncate(const DenseTensor& t, std::span<const int> row_legs,
                       const TruncationSpec& spec) {
  Matricized mt = matricize(t, row_legs);
  index_t mn = std::min<index_t>(mt.m.rows(), mt.m.cols());
  Eigen::JacobiSVD<Mat> svd;
  Eigen::BDCSVD<Mat> bdc;
  const Eigen::VectorXd* sv;
  const Mat* up;
  const Mat* vp;
  Mat u, v;
  Eigen::VectorXd s;
  if (mn <= 32) {
    svd.compute(mt.m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s = svd.singularValues();
    u = svd.matrixU();
    v = svd.matrixV();
  } else {
    bdc.compute(mt.m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    s = bdc.singularValues();
    u = bdc.matrixU();
    v = bdc.matrixV();
  }
  sv = &s;
  up = &u;
  vp = &v;
  double total = 0;
  for (index_t i = 0; i < mn; ++i) total += s[i] * s[i];
  index_t keep = 0;
  double smax = mn > 0 ? s[0] : 0.0;
  for (index_t i = 0; i < mn; ++i)
    if (s[i] > spec.cutoff * smax) ++keep;
  keep = std::min(keep, spec.max_rank == 0 ? mn : spec.max_rank);
  keep = std::max<index_t>(keep, 1);
  keep = std::min(keep, mn);
  double kept = 0;
  for (index_t i = 0; i < keep; ++i) kept += s[i] * s[i];
  SvdResult out;
  out.discarded_weight = total > 0 ? std::max(0.0, (total - kept) / total) : 0.0;
  out.values.assign(sv->data(), sv->data() + keep);
  Mat uk = up->leftCols(keep);
  Mat vhk = vp->leftCols(keep).adjoint();
  out.u = from_matrix(uk, mt.row_dims, {keep});
  out.vh = from_matrix(vhk, {keep}, mt.col_dims);
  return out;
}

SplitResult qr_split(const DenseTensor& t, std::initializer_list<int> row_legs) {
  return qr_split(t, std::span<const int>(row_legs.begin(), row_legs.size()));
}
SplitResult lq_split(const DenseTensor& t, std::initializer_list<int> row_legs) {
  return lq_split(t, std::span<const int>(row_legs.begin(), row_legs.size()));
}
SvdResult svd_truncate(const DenseTensor& t, std::initializer_list<int> row_legs,
                       const TruncationSpec& spec) {
  return svd_truncate(t, std::span<const int>(row_legs.begin(), row_legs.size()),
                      spec);
}

DenseTensor scale_rows(const DenseTensor& t, const std::vector<double>& s) {
  BBP_CHECK(t.rank() >= 1 && t.dim(0) == static_cast<index_t>(s.size()),
            "scale_rows: dim mismatch");
  DenseTensor out = t;
  index_t block = t.size() / t.dim(0);
  for (index_t i = 0; i < t.dim(0); ++i)
    for (index_t j = 0; j < block; ++j) out[i * block + j] *= s[i];
  return out;
}

DenseTensor scale_cols(const DenseTensor& t, const std::vector<double>& s) {
  int last = t.rank() - 1;
  BBP_CHECK(last >= 0 && t.dim(last) == static_cast<index_t>(s.size()),
            "scale_cols: dim mismatch");
  DenseTensor out = t;
  index_t cols = t.dim(last);
  for (index_t i = 0; i < t.size(); ++i) out[i] *= s[i % cols];
  return out;
}

}  // namespace blockbp
