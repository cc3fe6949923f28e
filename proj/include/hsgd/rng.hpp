#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace hsgd {

// Counter-based splittable randomness. Every consumer derives its own stream
// from (seed, stage, iteration, leg), so batch draws replay exactly and the
// two estimator legs are independent by construction.

enum class StreamLeg : std::uint64_t {
  kInit = 1,
  kSarah = 2,
  kSgd = 3,
  kOutput = 4,
  kShuffle = 5,
  kMonteCarlo = 6,
  kData = 7,
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}
}  // namespace detail

class RngStream {
 public:
  explicit RngStream(std::uint64_t state) : state_(state) {}

  // splitmix64
  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // unbiased integer in [0, k)
  std::uint64_t uniform_below(std::uint64_t k) {
    if (k == 0) throw std::invalid_argument("uniform_below: k must be positive");
    const std::uint64_t limit = (UINT64_MAX / k) * k;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % k;
  }

  long uniform_index(long n) { return static_cast<long>(uniform_below(static_cast<std::uint64_t>(n))); }

  double gaussian() {
    // Marsaglia polar method
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline RngStream make_stream(std::uint64_t seed, std::uint64_t stage, std::uint64_t iteration,
                             StreamLeg leg) {
  using detail::mix64;
  std::uint64_t h = mix64(seed ^ 0x2545f4914f6cdd1dULL);
  h = mix64(h ^ (stage * 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ (iteration * 0xd6e8feb86659fd93ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(leg) * 0xa0761d6478bd642fULL));
  return RngStream(h);
}

// Uniform b-subset of [0, n) without replacement (Floyd), returned sorted so
// accumulation order is deterministic.
inline std::vector<long> sample_without_replacement(RngStream& rng, long n, long b) {
  if (b < 0 || b > n) throw std::invalid_argument("sample_without_replacement: need 0 <= b <= n");
  std::vector<long> out;
  out.reserve(static_cast<std::size_t>(b));
  if (b <= 64) {
    for (long j = n - b; j < n; ++j) {
      const long t = rng.uniform_index(j + 1);
      bool present = false;
      for (long v : out)
        if (v == t) {
          present = true;
          break;
        }
      out.push_back(present ? j : t);
    }
  } else {
    std::unordered_set<long> seen;
    seen.reserve(static_cast<std::size_t>(b) * 2);
    for (long j = n - b; j < n; ++j) {
      const long t = rng.uniform_index(j + 1);
      if (seen.insert(t).second)
        out.push_back(t);
      else {
        seen.insert(j);
        out.push_back(j);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<long> sample_with_replacement(RngStream& rng, long n, long b) {
  std::vector<long> out(static_cast<std::size_t>(b));
  for (long k = 0; k < b; ++k) out[static_cast<std::size_t>(k)] = rng.uniform_index(n);
  return out;
}

}  // namespace hsgd
