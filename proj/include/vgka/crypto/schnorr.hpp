#pragma once

#include "vgka/crypto/hash.hpp"

namespace vgka::crypto {

/// Schnorr signature in G: R = g^k, c = h(R || m), s = k - c*x.
struct Signature {
  Scalar c;
  Scalar s;
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline Scalar schnorr_challenge(const SystemParams& sp, const GElem& commit, ByteView message) {
  Bytes buf = encode(sp, commit);
  append(buf, message);
  return hash_to_scalar(sp, buf);
}

inline Signature schnorr_sign(const SystemParams& sp, const Scalar& sk, ByteView message, Rng& rng) {
  const Scalar k = random_scalar(sp, rng);
  const Scalar c = schnorr_challenge(sp, g_pow(sp, k), message);
  return Signature{c, sc_sub(sp, k, sc_mul(sp, c, sk))};
}

inline bool schnorr_verify(const SystemParams& sp, const GElem& pk, ByteView message, const Signature& sig) {
  if (!in_group(sp, pk) || sig.c.v <= 0 || sig.c.v >= sp.q || sig.s.v < 0 || sig.s.v >= sp.q) return false;
  const GElem commit = g_mul(sp, g_pow(sp, sig.s), g_exp(sp, pk, sig.c));
  return schnorr_challenge(sp, commit, message) == sig.c;
}

}  // namespace vgka::crypto
