#pragma once

#include <string>

#include "blockbp/network.hpp"

namespace blockbp {

// Binary tensor-grid container (see docs/formats.md).  Every save also
// writes a human-readable JSON sidecar at path + ".json".
void save_peps(const PepsNetwork& net, const std::string& path);
PepsNetwork load_peps(const std::string& path);

void save_flat(const FlatNetwork& net, const std::string& path);
FlatNetwork load_flat(const std::string& path);

}  // namespace blockbp
