#include "blockbp/rng.hpp"

namespace blockbp {

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

uint64_t derive_seed(uint64_t base, std::string_view tag,
                     std::initializer_list<long> ids) {
  uint64_t h = splitmix64(base ^ 0xa0761d6478bd642fULL);
  for (unsigned char c : tag) h = splitmix64(h ^ c);
  for (long id : ids) h = splitmix64(h ^ static_cast<uint64_t>(id));
  return h;
}

}  // namespace blockbp
