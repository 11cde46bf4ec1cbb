#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace blockbp {

using cplx = std::complex<double>;
using index_t = long;
using Shape = std::vector<index_t>;

namespace detail {
inline void append_all(std::ostringstream&) {}
template <class T, class... Rest>
void append_all(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  append_all(os, rest...);
}
}  // namespace detail

// Build an error message from heterogeneous pieces without std::format.
template <class... Args>
std::string msg(const Args&... parts) {
  std::ostringstream os;
  os.precision(17);
  detail::append_all(os, parts...);
  return os.str();
}

template <class... Args>
[[noreturn]] void fail(const Args&... parts) {
  throw std::runtime_error(msg(parts...));
}

#define BBP_CHECK(cond, ...)                  \
  do {                                        \
    if (!(cond)) ::blockbp::fail(__VA_ARGS__); \
  } while (0)

// Scalar kept as phase * exp(log_mag) so huge partition functions and tiny
// overlaps survive without overflow.
struct ScaledScalar {
  double log_mag = -std::numeric_limits<double>::infinity();
  cplx phase = cplx(1, 0);  // unit modulus (0 allowed for exact zero)

  cplx value() const { return phase * std::exp(log_mag); }
  bool is_zero() const { return phase == cplx(0, 0); }

  static ScaledScalar from(cplx v) {
    ScaledScalar s;
    double a = std::abs(v);
    if (a == 0) {
      s.phase = cplx(0, 0);
      return s;
    }
    s.log_mag = std::log(a);
    s.phase = v / a;
    return s;
  }
  ScaledScalar operator*(const ScaledScalar& o) const {
    ScaledScalar s;
    if (is_zero() || o.is_zero()) {
      s.phase = cplx(0, 0);
      return s;
    }
    s.log_mag = log_mag + o.log_mag;
    s.phase = phase * o.phase;
    return s;
  }
  ScaledScalar operator/(const ScaledScalar& o) const {
    ScaledScalar s;
    if (is_zero()) {
      s.phase = cplx(0, 0);
      return s;
    }
    s.log_mag = log_mag - o.log_mag;
    s.phase = phase / o.phase;
    return s;
  }
};

inline index_t shape_size(const Shape& s) {
  index_t n = 1;
  for (index_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

}  // namespace blockbp
