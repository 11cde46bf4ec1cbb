#include "blockbp/lattice.hpp"

namespace blockbp {

std::vector<Bond> Lattice::edges() const {
  std::vector<Bond> out;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (has_h_edge(r, c)) out.push_back({r, c, Side::kRight});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (has_v_edge(r, c)) out.push_back({r, c, Side::kDown});
  return out;
}

}  // namespace blockbp
