#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "blockbp/common.hpp"
#include "blockbp/rng.hpp"

namespace blockbp {

// Dense complex tensor, row-major (last leg fastest).
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape)
      : shape_(std::move(shape)), data_(shape_size(shape_), cplx(0, 0)) {}
  DenseTensor(Shape shape, std::vector<cplx> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    BBP_CHECK(static_cast<index_t>(data_.size()) == shape_size(shape_),
              "tensor: data size ", data_.size(), " does not match shape ",
              shape_str(shape_));
  }

  static DenseTensor scalar(cplx v) { return DenseTensor({}, {v}); }

  int rank() const { return static_cast<int>(shape_.size()); }
  const Shape& shape() const { return shape_; }
  index_t dim(int leg) const { return shape_.at(leg); }
  index_t size() const { return static_cast<index_t>(data_.size()); }
  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  cplx& operator[](index_t i) { return data_[i]; }
  const cplx& operator[](index_t i) const { return data_[i]; }

  cplx& at(std::initializer_list<index_t> idx) { return data_[offset(idx)]; }
  const cplx& at(std::initializer_list<index_t> idx) const {
    return data_[offset(idx)];
  }

  index_t offset(std::initializer_list<index_t> idx) const;
  Shape strides() const;

  double norm2() const;                       // sum |t|^2
  double norm() const;                        // sqrt(norm2)
  DenseTensor& operator*=(cplx s);
  DenseTensor& operator+=(const DenseTensor& o);
  DenseTensor& operator-=(const DenseTensor& o);

  DenseTensor conj() const;
  DenseTensor permute(std::span<const int> perm) const;
  DenseTensor permute(std::initializer_list<int> perm) const {
    return permute(std::span<const int>(perm.begin(), perm.size()));
  }
  // Merge contiguous legs; group boundaries given by the sizes in `groups`.
  DenseTensor reshape(Shape new_shape) const;

  void fill_normal(Rng& rng, bool complex_entries = true);
  void fill_uniform(Rng& rng);  // entries in [0,1)

 private:
  Shape shape_;
  std::vector<cplx> data_;
};

struct TruncationSpec {
  static constexpr index_t kUnlimited = std::numeric_limits<index_t>::max();
  index_t max_rank = kUnlimited;
  double cutoff = 1e-12;  // relative to the largest singular value
};

struct SvdResult {
  DenseTensor u;               // left legs + new leg
  std::vector<double> values;  // kept singular values
  DenseTensor vh;              // new leg + right legs
  double discarded_weight = 0; // sum of dropped sigma^2 / sum of all sigma^2
};

struct SplitResult {
  DenseTensor first;   // Q for qr, L for lq
  DenseTensor second;  // R for qr, Q for lq
};

// Pairwise contraction over `pairs` = {(leg of a, leg of b), ...}.
// Result legs: unpaired legs of a (original order), then unpaired legs of b.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::pair<int, int>> pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<std::pair<int, int>> pairs);

// Splits t = Q.R with Q isometric on the new leg (Q^dag Q = id).
// `row_legs` become the rows of the matricization, in the given order;
// Q carries them plus the new last leg, R carries the new first leg plus the
// remaining legs in their original order.
SplitResult qr_split(const DenseTensor& t, std::span<const int> row_legs);
SplitResult qr_split(const DenseTensor& t, std::initializer_list<int> row_legs);

// Splits t = L.Q with Q isometric from the right (Q Q^dag = id); same leg
// conventions mirrored: L = row legs + new, Q = new + column legs.
SplitResult lq_split(const DenseTensor& t, std::span<const int> row_legs);
SplitResult lq_split(const DenseTensor& t, std::initializer_list<int> row_legs);

SvdResult svd_truncate(const DenseTensor& t, std::span<const int> row_legs,
                       const TruncationSpec& spec);
SvdResult svd_truncate(const DenseTensor& t, std::initializer_list<int> row_legs,
                       const TruncationSpec& spec);

// vh scaled by values absorbed (u stays isometric), used by gate splitting.
DenseTensor scale_rows(const DenseTensor& t, const std::vector<double>& s);
DenseTensor scale_cols(const DenseTensor& t, const std::vector<double>& s);

inline DenseTensor operator*(cplx s, DenseTensor t) {
  t *= s;
  return t;
}

}  // namespace blockbp
