#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sme::rng {

// SplitMix64 finalizer, used to derive stream keys from (seed, ids).
std::uint64_t mix64(std::uint64_t x);

// Key for a named substream. Streams are identified by a namespace tag,
// a path (or replica) index and a driver index, so ensembles reproduce
// independently of thread scheduling.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t space,
                         std::uint64_t path = 0, std::uint64_t driver = 0);

// Namespace tags for stream_key. Discrete and continuous ensembles draw
// from disjoint namespaces (no common-random-numbers coupling).
enum : std::uint64_t {
  kSpaceProblem = 1,
  kSpaceDataset = 2,
  kSpaceDiscrete = 3,
  kSpaceContinuous = 4,
  kSpaceMoments = 5,
  kSpaceToy = 6,
};

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// State is (key, 128-bit counter); output is a pure function of both.
class Philox4x32 {
 public:
  explicit Philox4x32(std::uint64_t key64);
  std::array<std::uint32_t, 4> next4();

 private:
  std::uint32_t key0_, key1_;
  std::uint64_t ctr_lo_ = 0, ctr_hi_ = 0;
};

// A single-owner random stream: one per path per driver, never shared.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t space, std::uint64_t path = 0,
            std::uint64_t driver = 0);
  explicit RngStream(std::uint64_t key);

  std::uint64_t next_u64();
  double uniform01();              // in (0, 1]
  double normal();                 // standard normal, Box-Muller
  void normal_fill(std::span<double> out);
  std::uint64_t index(std::uint64_t n);  // uniform in [0, n)

 private:
  void refill();
  Philox4x32 eng_;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sme::rng
