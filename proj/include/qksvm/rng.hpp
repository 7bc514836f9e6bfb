#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qksvm {

// splitmix64 stream. Chosen over std::mt19937 so that a given seed produces
// the same sequence on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be nonzero.
  std::uint64_t next_below(std::uint64_t n) { return next() % n; }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Seed for an independent substream, e.g. one bootstrap resample. Mixing the
// index through splitmix64 keeps substreams decorrelated and lets resamples
// run on any number of workers with identical output.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  Rng r(seed ^ (0x632be59bd9b4e019ull + index * 0x9e3779b97f4a7c15ull));
  return r.next();
}

// Fisher-Yates permutation of 0..n-1 driven by the given stream.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng);

}  // namespace qksvm
