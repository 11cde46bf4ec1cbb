#pragma once

#include <vector>

#include "blockbp/common.hpp"

namespace blockbp {

enum class Boundary { kOpen, kPeriodic };

// Leg order on site tensors is (up, left, down, right); Side values match.
enum class Side : int { kUp = 0, kLeft = 1, kDown = 2, kRight = 3 };

inline Side opposite(Side s) { return Side((int(s) + 2) % 4); }
inline const char* side_name(Side s) {
  static const char* names[4] = {"up", "left", "down", "right"};
  return names[int(s)];
}

// A lattice bond, named by the site it leaves and the direction.  Only
// kRight (horizontal) and kDown (vertical) are used as canonical directions.
struct Bond {
  int r = 0, c = 0;
  Side dir = Side::kRight;
  bool operator==(const Bond&) const = default;
};

struct Lattice {
  int rows = 0, cols = 0;
  Boundary boundary = Boundary::kOpen;

  int nsites() const { return rows * cols; }
  int site(int r, int c) const { return wrap_r(r) * cols + wrap_c(c); }
  int wrap_r(int r) const { return ((r % rows) + rows) % rows; }
  int wrap_c(int c) const { return ((c % cols) + cols) % cols; }
  bool periodic() const { return boundary == Boundary::kPeriodic; }

  // A 1-wide periodic direction carries no edges (self loops are excluded).
  bool has_h_edge(int r, int c) const {
    if (periodic()) return cols > 1;
    return r >= 0 && r < rows && c >= 0 && c + 1 < cols;
  }
  bool has_v_edge(int r, int c) const {
    if (periodic()) return rows > 1;
    return c >= 0 && c < cols && r >= 0 && r + 1 < rows;
  }
  // All bonds: horizontal first (row-major), then vertical (row-major).
  std::vector<Bond> edges() const;
};

}  // namespace blockbp
