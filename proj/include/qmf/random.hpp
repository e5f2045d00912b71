#pragma once

#include <cstdint>
#include <random>

namespace qmf {

// Explicitly passed random source. Every stochastic operation in the library
// draws from one of these, never from global state.
//
// Splitting rule: stream (master, i) is an mt19937_64 seeded through
// seed_seq{lo32(master), hi32(master), lo32(i), hi32(i)}. Shot i therefore
// depends only on the pair, not on how many shots ran before it or where.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);
  static RandomStream derive(std::uint64_t master_seed, std::uint64_t index);

  double uniform();  // [0, 1)
  double normal();   // N(0, 1)
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  RandomStream() = default;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qmf
