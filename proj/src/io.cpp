#include "blockbp/io.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace blockbp {

namespace {

constexpr char kMagic[4] = {'B', 'B', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
void write_u8(std::ostream& os, uint8_t v) {
  os.write(reinterpret_cast<const char*>(&v), 1);
}
uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint8_t read_u8(std::istream& is) {
  uint8_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 1);
  return v;
}

void write_tensor(std::ostream& os, const DenseTensor& t) {
  write_u8(os, static_cast<uint8_t>(t.rank()));
  for (int l = 0; l < t.rank(); ++l)
    write_u32(os, static_cast<uint32_t>(t.dim(l)));
  // little-endian f64, re/im interleaved
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size()) * 16);
}

DenseTensor read_tensor(std::istream& is) {
  int rank = read_u8(is);
  Shape shape(rank);
  for (int l = 0; l < rank; ++l) shape[l] = read_u32(is);
  DenseTensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size()) * 16);
  BBP_CHECK(is.good(), "load: truncated tensor data");
  return t;
}

struct Header {
  uint8_t kind = 0;  // 0 peps, 1 flat
  Lattice lat;
  bool has_ket = false;
};

void write_header(std::ostream& os, const Header& h) {
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u8(os, h.kind);
  write_u8(os, h.lat.periodic() ? 1 : 0);
  write_u32(os, static_cast<uint32_t>(h.lat.rows));
  write_u32(os, static_cast<uint32_t>(h.lat.cols));
  write_u8(os, h.has_ket ? 1 : 0);
}

Header read_header(std::istream& is, const std::string& path) {
  char magic[4];
  is.read(magic, 4);
  BBP_CHECK(is.good() && std::memcmp(magic, kMagic, 4) == 0,
            "load: ", path, " is not a tensor grid file");
  uint32_t ver = read_u32(is);
  BBP_CHECK(ver == kVersion, "load: unsupported version ", ver);
  Header h;
  h.kind = read_u8(is);
  h.lat.boundary = read_u8(is) ? Boundary::kPeriodic : Boundary::kOpen;
  h.lat.rows = static_cast<int>(read_u32(is));
  h.lat.cols = static_cast<int>(read_u32(is));
  h.has_ket = read_u8(is) != 0;
  BBP_CHECK(h.lat.rows > 0 && h.lat.cols > 0, "load: bad dimensions");
  return h;
}

void write_sidecar(const std::string& path, const Header& h, index_t max_bond,
                   index_t phys) {
  nlohmann::json j;
  j["format"] = "bbpt-1";
  j["kind"] = h.kind == 0 ? "peps" : "flat";
  j["boundary"] = h.lat.periodic() ? "pbc" : "obc";
  j["rows"] = h.lat.rows;
  j["cols"] = h.lat.cols;
  j["double_layer"] = h.has_ket;
  if (h.kind == 0) j["phys_dim"] = phys;
  j["max_bond"] = max_bond;
  std::ofstream os(path + ".json");
  os << j.dump(2) << "\n";
}

}  // namespace

void save_peps(const PepsNetwork& net, const std::string& path) {
  net.check();
  std::ofstream os(path, std::ios::binary);
  BBP_CHECK(os.good(), "save: cannot open ", path);
  Header h;
  h.kind = 0;
  h.lat = net.lat;
  write_header(os, h);
  for (const auto& t : net.sites) write_tensor(os, t);
  BBP_CHECK(os.good(), "save: write failed for ", path);
  os.close();
  write_sidecar(path, h, net.max_bond(), net.sites[0].dim(0));
}

PepsNetwork load_peps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  BBP_CHECK(is.good(), "load: cannot open ", path);
  Header h = read_header(is, path);
  BBP_CHECK(h.kind == 0, "load: ", path, " does not hold a peps");
  PepsNetwork net;
  net.lat = h.lat;
  for (int i = 0; i < h.lat.nsites(); ++i) net.sites.push_back(read_tensor(is));
  net.check();
  return net;
}

void save_flat(const FlatNetwork& net, const std::string& path) {
  net.check();
  std::ofstream os(path, std::ios::binary);
  BBP_CHECK(os.good(), "save: cannot open ", path);
  Header h;
  h.kind = 1;
  h.lat = net.lat;
  h.has_ket = net.double_layer();
  write_header(os, h);
  for (size_t i = 0; i < net.sites.size(); ++i) {
    if (h.has_ket)
      for (int l = 0; l < 4; ++l)
        write_u32(os, static_cast<uint32_t>(net.ket[i][l]));
    write_tensor(os, net.sites[i]);
  }
  BBP_CHECK(os.good(), "save: write failed for ", path);
  os.close();
  index_t mb = 1;
  for (const auto& t : net.sites)
    for (int l = 0; l < 4; ++l) mb = std::max(mb, t.dim(l));
  write_sidecar(path, h, mb, 0);
}

FlatNetwork load_flat(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  BBP_CHECK(is.good(), "load: cannot open ", path);
  Header h = read_header(is, path);
  BBP_CHECK(h.kind == 1, "load: ", path, " does not hold a flat network");
  FlatNetwork net;
  net.lat = h.lat;
  for (int i = 0; i < h.lat.nsites(); ++i) {
    if (h.has_ket) {
      Shape k(4);
      for (int l = 0; l < 4; ++l) k[l] = read_u32(is);
      net.ket.push_back(std::move(k));
    }
    net.sites.push_back(read_tensor(is));
  }
  net.check();
  return net;
}

}  // namespace blockbp
