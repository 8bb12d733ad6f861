#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>

namespace rdm {

// All randomness in a run flows from one master seed through named child
// streams ("data", "init", "verify", ...), optionally indexed so that blocks
// of work can be seeded independently of thread scheduling.
//
// The generator scheme is versioned; experiment summaries record it so that
// archived outputs stay attributable. mt19937_64 output is fully specified
// by the standard, and normals use an explicit Box-Muller transform instead
// of std::normal_distribution (whose algorithm is implementation-defined).
inline constexpr std::string_view kRngScheme = "mt19937_64/box-muller/v1";

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

inline std::uint64_t derive_stream_seed(std::uint64_t master,
                                        std::string_view stream,
                                        std::uint64_t index = 0) {
  std::uint64_t h = detail::splitmix64(master ^ detail::fnv1a64(stream));
  return detail::splitmix64(h ^ detail::splitmix64(index));
}

class RngStream {
 public:
  RngStream(std::uint64_t master, std::string_view stream,
            std::uint64_t index = 0)
      : engine_(derive_stream_seed(master, stream, index)) {}

  explicit RngStream(std::uint64_t raw_seed) : engine_(raw_seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return engine_() % n;  // bias negligible for the small n used here
  }

  // Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rdm
