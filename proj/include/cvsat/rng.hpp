#pragma once

#include <cstdint>
#include <cmath>

namespace cvsat {

/// Counter-based random generator: every draw is a pure function of
/// (seed, stream, counter), so parallel consumers stay reproducible by
/// indexing draws instead of sharing state.
class CounterRng {
  public:
    CounterRng(uint64_t seed, uint64_t stream = 0)
        : base_(mix(seed ^ (0xbf58476d1ce4e5b9ULL * (stream + 1)))) {}

    /// Uniform double in [0, 1).
    double uniform(uint64_t counter) const {
      return static_cast<double>(word(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log argument.
    double uniform_open(uint64_t counter) const {
      return static_cast<double>((word(counter) >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draw k consumes counters 2k, 2k+1.
    double normal(uint64_t draw) const {
      double u1 = uniform_open(2 * draw);
      double u2 = uniform(2 * draw + 1);
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Both Box-Muller variates of draw k.
    void normal_pair(uint64_t draw, double& n1, double& n2) const {
      double u1 = uniform_open(2 * draw);
      double u2 = uniform(2 * draw + 1);
      double radius = std::sqrt(-2.0 * std::log(u1));
      double angle = 6.283185307179586476925287 * u2;
      n1 = radius * std::cos(angle);
      n2 = radius * std::sin(angle);
    }

  private:
    uint64_t base_;

    static uint64_t mix(uint64_t z) {
      z += 0x9e3779b97f4a7c15ULL;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    }

    uint64_t word(uint64_t counter) const {
      return mix(base_ + counter * 0x9e3779b97f4a7c15ULL);
    }
};

}  // namespace cvsat
