#pragma once

#include <initializer_list>
#include <random>
#include <string_view>

#include "blockbp/common.hpp"

namespace blockbp {

// Deterministic stream derivation: every task-local generator is seeded from
// hash(base_seed, tag, ids...).  Results therefore depend only on the task
// identity, never on scheduling order or worker count.
uint64_t derive_seed(uint64_t base, std::string_view tag,
                     std::initializer_list<long> ids = {});

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}
  Rng(uint64_t base, std::string_view tag, std::initializer_list<long> ids = {})
      : eng_(derive_seed(base, tag, ids)) {}

  double uniform() { return uni_(eng_); }                 // [0,1)
  double normal() { return norm_(eng_); }                 // N(0,1)
  cplx cnormal() {                                        // E|z|^2 = 1
    double re = norm_(eng_), im = norm_(eng_);
    return cplx(re, im) / std::sqrt(2.0);
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace blockbp
