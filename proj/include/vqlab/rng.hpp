#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vqlab {

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based substream derivation. The seed of a substream is obtained by
// folding each tag into the master seed:
//   h_0 = splitmix64(master), h_{j+1} = splitmix64(h_j ^ splitmix64(tag_j)).
// Streams keyed by distinct tag tuples are independent for practical purposes
// and do not depend on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
  return h;
}

// Tags used across the library so that streams never collide.
namespace stream_tag {
inline constexpr std::uint64_t kSample = 1;
inline constexpr std::uint64_t kErm = 2;
inline constexpr std::uint64_t kTau = 3;
inline constexpr std::uint64_t kRestart = 4;
inline constexpr std::uint64_t kChunk = 5;
inline constexpr std::uint64_t kBootstrap = 6;
inline constexpr std::uint64_t kReference = 7;
inline constexpr std::uint64_t kTrial = 8;
inline constexpr std::uint64_t kEvaluation = 9;
inline constexpr std::uint64_t kAttempt = 10;
inline constexpr std::uint64_t kBall = 11;
}  // namespace stream_tag

// A seeded random stream. Not thread-safe; give each worker its own stream.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace vqlab
