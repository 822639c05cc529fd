#pragma once

#include <cstdint>
#include <random>

namespace sacap {

// Deterministic, hierarchical random streams.
//
// Every piece of randomness in the library flows through an RngStream so that
// runs are reproducible from a single root seed. The engine is mt19937_64
// (its output sequence is fixed by the standard); the distributions are
// hand-rolled because the std:: distribution algorithms are
// implementation-defined and would break cross-toolchain reproducibility.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent child stream. Streams derived with distinct tags from the
  // same parent do not share state; deriving is pure (const).
  RngStream derive(std::uint64_t tag) const;

  std::uint64_t next_u64();

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  long long uniform_int(long long n);     // {0, ..., n-1}, n >= 1
  double normal();                        // standard normal
  long long poisson(double mean);         // mean >= 0; mean == 0 gives 0

  // Number of marked items in a uniform without-replacement sample of size
  // `draws` from a population of `total` items containing `successes` marked
  // ones. Exact sequential sampling.
  long long hypergeometric(long long successes, long long total, long long draws);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace sacap
