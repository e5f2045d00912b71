#include "qmf/random.hpp"

#include <cmath>

namespace qmf {

namespace {
std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }
}  // namespace

RandomStream::RandomStream(std::uint64_t seed) {
  std::seed_seq seq{lo32(seed), hi32(seed)};
  engine_.seed(seq);
}

RandomStream RandomStream::derive(std::uint64_t master_seed, std::uint64_t index) {
  RandomStream s;
  std::seed_seq seq{lo32(master_seed), hi32(master_seed), lo32(index), hi32(index)};
  s.engine_.seed(seq);
  return s;
}

double RandomStream::uniform() {
  // 53 random mantissa bits; std::uniform_real_distribution is not
  // specified bit-for-bit across standard libraries.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

// Marsaglia polar method, kept here so sequences match across platforms.
double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, q;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    q = u * u + v * v;
  } while (q >= 1.0 || q == 0.0);
  const double f = std::sqrt(-2.0 * std::log(q) / q);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

}  // namespace qmf
