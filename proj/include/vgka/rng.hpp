#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <gmpxx.h>

#include "vgka/bytes.hpp"

namespace vgka {

/// Independent stream seed for (seed, stream) via the splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seeded deterministic generator. Reproducibility matters more than
/// unpredictability here: simulator runs and test vectors must replay exactly.
/// Not suitable as a source of real key material.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  void fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      auto word = engine_();
      for (int k = 0; k < 8 && i < out.size(); ++k, ++i) out[i] = static_cast<std::uint8_t>(word >> (8 * k));
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  /// Uniform in [0, bound) by rejection sampling over bitlen(bound) bits.
  mpz_class below(const mpz_class& bound) {
    const auto bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
    const auto nbytes = (bits + 7) / 8;
    const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
    Bytes buf(nbytes);
    mpz_class v;
    do {
      fill(buf);
      buf[0] &= static_cast<std::uint8_t>(0xff >> excess);
      mpz_import(v.get_mpz_t(), buf.size(), 1, 1, 1, 0, buf.data());
    } while (v >= bound);
    return v;
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vgka
