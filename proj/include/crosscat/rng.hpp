#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace crosscat {

// Seeded generator with pinned output derivations. The standard distributions
// are implementation-defined, so uniform/normal/int draws are produced here
// directly; identical seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % range);
  }

  // Standard normal via Box-Muller.
  double normal();

  // Draws an index from an (unnormalized) nonnegative weight vector.
  int categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable child-seed derivation. Streams for different stages, replications
// and sweep positions stay decoupled: adding a stage or model never perturbs
// the draws of another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace crosscat
