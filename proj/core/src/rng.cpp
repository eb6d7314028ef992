#include "aipgame/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace aipgame {

namespace {

// splitmix64 finalizer (Stafford's mix13 constants).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b + kGolden) + (a << 6) + (a >> 2)));
}

std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t SeededRng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double SeededRng::uniform() {
  // 53 top bits -> double in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo must not exceed hi");
  std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return static_cast<std::int64_t>(next_u64());  // full width
  return lo + static_cast<std::int64_t>(next_u64() % range);
}

double SeededRng::normal(double mean, double stddev) {
  // Polar rejection; one deviate per call, the twin is discarded to keep
  // the draw count per call fixed at "until accepted".
  for (;;) {
    double u = 2.0 * uniform() - 1.0;
    double v = 2.0 * uniform() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0)
      return mean + stddev * (u * std::sqrt(-2.0 * std::log(s) / s));
  }
}

}  // namespace aipgame
