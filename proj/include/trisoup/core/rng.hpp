#pragma once

#include <random>
#include <sstream>
#include <string>

#include "trisoup/core/types.hpp"

namespace trisoup {

/// Seeded RNG with serializable state so training runs can resume bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return dist_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    std::uniform_int_distribution<int> d(lo, hi);
    return d(engine_);
  }

  /// Uniform random rotation (Shoemake's subgroup method). Returns (w,x,y,z).
  Vec4 unit_quaternion() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    const double t2 = 2.0 * M_PI * u2;
    const double t3 = 2.0 * M_PI * u3;
    return Vec4(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }

  std::string save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void load_state(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> dist_{0.0, 1.0};
};

}  // namespace trisoup
