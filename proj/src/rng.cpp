#include "sme/rng.hpp"

#include <cmath>
#include <numbers>

namespace sme::rng {

namespace {
constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                     std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t space,
                         std::uint64_t path, std::uint64_t driver) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ space);
  k = mix64(k ^ path);
  k = mix64(k ^ driver);
  return k;
}

Philox4x32::Philox4x32(std::uint64_t key64)
    : key0_(static_cast<std::uint32_t>(key64)),
      key1_(static_cast<std::uint32_t>(key64 >> 32)) {}

std::array<std::uint32_t, 4> Philox4x32::next4() {
  std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo_);
  std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo_ >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi_);
  std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi_ >> 32);
  std::uint32_t k0 = key0_, k1 = key1_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mul_hilo(kPhiloxM4x32A, c0, lo0, hi0);
    mul_hilo(kPhiloxM4x32B, c2, lo1, hi1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW32A;
    k1 += kPhiloxW32B;
  }
  if (++ctr_lo_ == 0) ++ctr_hi_;
  return {c0, c1, c2, c3};
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t space,
                     std::uint64_t path, std::uint64_t driver)
    : eng_(stream_key(seed, space, path, driver)) {}

RngStream::RngStream(std::uint64_t key) : eng_(key) {}

void RngStream::refill() {
  buf_ = eng_.next4();
  buf_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (buf_pos_ > 2) refill();
  const std::uint64_t lo = buf_[buf_pos_];
  const std::uint64_t hi = buf_[buf_pos_ + 1];
  buf_pos_ += 2;
  return lo | (hi << 32);
}

double RngStream::uniform01() {
  // 53-bit mantissa; shifted into (0, 1] so log() below is safe.
  return 1.0 - static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

void RngStream::normal_fill(std::span<double> out) {
  std::size_t i = 0;
  for (; i + 1 < out.size(); i += 2) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    out[i] = r * std::cos(a);
    out[i + 1] = r * std::sin(a);
  }
  if (i < out.size()) out[i] = normal();
}

std::uint64_t RngStream::index(std::uint64_t n) {
  // Lemire multiply-shift; bias is O(n / 2^64), irrelevant at these n.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

}  // namespace sme::rng
