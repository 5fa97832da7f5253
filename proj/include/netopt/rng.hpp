#pragma once

#include "netopt/core.hpp"

#include <cmath>
#include <random>

namespace netopt {

// mt19937_64 bits mapped to doubles by hand so streams match across standard libraries
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }
  Index index(Index n) { return static_cast<Index>(eng_() % static_cast<std::uint64_t>(n)); }
  Mat uniform_matrix(Index r, Index c, double a = -1.0, double b = 1.0) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = uniform(a, b);
    return m;
  }
  Vec uniform_vector(Index n, double a = -1.0, double b = 1.0) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = uniform(a, b);
    return v;
  }
  Vec normal_vector(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace netopt
