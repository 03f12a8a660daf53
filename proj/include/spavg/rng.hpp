#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace spavg {

/// Counter-based splittable pseudo-random stream.
///
/// A stream is identified by a 64-bit key; the b-th output is a strong
/// 64-bit mix of (key, b).  Child streams are derived by re-keying, so
/// independent substreams can be handed to parallel workers and the
/// results do not depend on scheduling.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kKeyTag)) {}

  /// Derive an independent substream keyed by `k`.
  RngStream child(std::uint64_t k) const {
    RngStream s(*this);
    s.key_ = mix(key_ ^ mix(k + kChildTag));
    s.counter_ = 0;
    s.has_spare_ = false;
    return s;
  }

  result_type operator()() { return mix(key_ + (++counter_) * kGamma); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (pairwise, deterministic).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Poisson count with arbitrary mean.  Exact: large means are split
  /// into independent chunks so the product method never underflows.
  long poisson(double mean) {
    long total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    if (mean > 0.0) total += poisson_small(mean);
    return total;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kKeyTag = 0x5ca1ab1e0ddba11ULL;
  static constexpr std::uint64_t kChildTag = 0xc0ffee123456789ULL;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix(std::uint64_t z) {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  long poisson_small(double mean) {
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace spavg
