#include "sacap/rng.hpp"

#include <cmath>

#include "sacap/error.hpp"

namespace sacap {

namespace {

// splitmix64; used for seed scrambling and stream derivation.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

RngStream RngStream::derive(std::uint64_t tag) const {
  return RngStream(mix64(seed_ ^ mix64(tag + 0x517cc1b727220a95ULL)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  // 53 random mantissa bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

long long RngStream::uniform_int(long long n) {
  if (n <= 0) throw internal_error("uniform_int requires n >= 1");
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return static_cast<long long>(r % un);
}

double RngStream::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_normal_ = radius * std::sin(kTwoPi * u2);
  has_spare_normal_ = true;
  return radius * std::cos(kTwoPi * u2);
}

long long RngStream::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean)) throw internal_error("poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  // Knuth's product method, chunked so exp(-chunk) never underflows.
  // Poisson(a + b) = Poisson(a) + Poisson(b) for independent draws.
  long long count = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double chunk = remaining > 30.0 ? 30.0 : remaining;
    remaining -= chunk;
    const double threshold = std::exp(-chunk);
    double product = 1.0;
    long long k = -1;
    do {
      ++k;
      product *= uniform();
    } while (product > threshold);
    count += k;
  }
  return count;
}

long long RngStream::hypergeometric(long long successes, long long total, long long draws) {
  if (successes < 0 || total < successes || draws < 0 || draws > total) {
    throw internal_error("hypergeometric arguments out of range");
  }
  long long hit = 0;
  long long succ = successes;
  long long pop = total;
  for (long long i = 0; i < draws; ++i) {
    if (uniform() * static_cast<double>(pop) < static_cast<double>(succ)) {
      ++hit;
      --succ;
    }
    --pop;
  }
  return hit;
}

}  // namespace sacap
