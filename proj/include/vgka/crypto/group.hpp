#pragma once

// Signed quadratic-residue group G over a safe prime p = 2q + 1, the additive
// group G1 = (Z_q, +) with generator P = 1, and a symmetric toy pairing
// e(a, b) = gT^(a*b mod q).
//
// The toy pairing is bilinear and nondegenerate but offers no security at all:
// discrete logs in G1 are trivial. It exists so the protocol can be exercised
// exhaustively at desk scale. A real backend implements the Pairing concept.

#include <concepts>
#include <cstddef>
#include <string>

#include <gmpxx.h>

#include "vgka/bytes.hpp"
#include "vgka/error.hpp"
#include "vgka/rng.hpp"

namespace vgka::crypto {

/// Element of the folded group G; value in [1, q].
struct GElem {
  mpz_class v{1};
  friend bool operator==(const GElem& a, const GElem& b) { return a.v == b.v; }
};

/// Element of G1 = (Z_q, +); value in [0, q-1].
struct G1Elem {
  mpz_class v{0};
  friend bool operator==(const G1Elem& a, const G1Elem& b) { return a.v == b.v; }
};

/// Exponent / scalar in Z_q.
struct Scalar {
  mpz_class v{0};
  friend bool operator==(const Scalar& a, const Scalar& b) { return a.v == b.v; }
};

struct HashConfig {
  std::string h1 = "sha256-xmd/H1";
  std::string h = "sha256-xmd/h";
  std::string mask = "sha256-ctr/Hmask";
  std::string kdf = "sha256/kdf";
};

struct SystemParams {
  mpz_class p;
  mpz_class q;
  GElem g;
  GElem gt;  // e(P, P)
  std::size_t element_width = 0;
  HashConfig hash;
  // TA public key in both groups: g^psi for signatures and masks, psi*P inside pairings.
  GElem pk_ta_g{1};
  G1Elem pk_ta_g1{0};
};

inline std::size_t width_for(const mpz_class& p) { return (mpz_sizeinbase(p.get_mpz_t(), 2) + 7) / 8; }

inline mpz_class mod(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

// ---- G -------------------------------------------------------------------

/// f(x) = x if x <= q, p - x otherwise.
inline GElem fold(const SystemParams& sp, const mpz_class& x) {
  if (x < 1 || x > sp.p - 1) throw Error(Errc::OutOfRange, "fold input outside [1, p-1]");
  return GElem{x <= sp.q ? x : mpz_class(sp.p - x)};
}

inline GElem g_identity() { return GElem{1}; }

inline bool in_group(const SystemParams& sp, const GElem& a) { return a.v >= 1 && a.v <= sp.q; }

inline GElem g_exp(const SystemParams& sp, const GElem& a, const Scalar& b) {
  mpz_class e = mod(b.v, sp.q), r;
  mpz_powm(r.get_mpz_t(), a.v.get_mpz_t(), e.get_mpz_t(), sp.p.get_mpz_t());
  return fold(sp, r);
}

inline GElem g_mul(const SystemParams& sp, const GElem& a, const GElem& b) {
  return fold(sp, mod(a.v * b.v, sp.p));
}

inline GElem g_inv(const SystemParams& sp, const GElem& a) { return g_exp(sp, a, Scalar{sp.q - 1}); }

inline GElem g_div(const SystemParams& sp, const GElem& a, const GElem& b) { return g_mul(sp, a, g_inv(sp, b)); }

/// g^s for the system generator.
inline GElem g_pow(const SystemParams& sp, const Scalar& s) { return g_exp(sp, sp.g, s); }

// ---- Z_q -----------------------------------------------------------------

inline Scalar sc_add(const SystemParams& sp, const Scalar& a, const Scalar& b) { return {mod(a.v + b.v, sp.q)}; }
inline Scalar sc_sub(const SystemParams& sp, const Scalar& a, const Scalar& b) { return {mod(a.v - b.v, sp.q)}; }
inline Scalar sc_mul(const SystemParams& sp, const Scalar& a, const Scalar& b) { return {mod(a.v * b.v, sp.q)}; }

inline Scalar sc_inv(const SystemParams& sp, const Scalar& a) {
  Scalar r;
  if (mpz_invert(r.v.get_mpz_t(), mod(a.v, sp.q).get_mpz_t(), sp.q.get_mpz_t()) == 0)
    throw Error(Errc::InvalidArgument, "scalar not invertible mod q");
  return r;
}

/// Uniform in Z_q^* = [1, q-1].
inline Scalar random_scalar(const SystemParams& sp, Rng& rng) { return {rng.below(sp.q - 1) + 1}; }

// ---- G1 ------------------------------------------------------------------

inline G1Elem g1_generator() { return G1Elem{1}; }

/// a*X in G1.
inline G1Elem g1_scale(const SystemParams& sp, const Scalar& a, const G1Elem& x) { return {mod(a.v * x.v, sp.q)}; }

inline G1Elem g1_add(const SystemParams& sp, const G1Elem& a, const G1Elem& b) { return {mod(a.v + b.v, sp.q)}; }

inline G1Elem random_g1(const SystemParams& sp, Rng& rng) { return {rng.below(sp.q)}; }

// ---- pairing ---------------------------------------------------------------

template <class B>
concept Pairing = requires(const SystemParams& sp, const G1Elem& a) {
  { B::pair(sp, a, a) } -> std::same_as<GElem>;
};

struct ToyPairing {
  static GElem pair(const SystemParams& sp, const G1Elem& a, const G1Elem& b) {
    return g_exp(sp, sp.gt, Scalar{mod(a.v * b.v, sp.q)});
  }
};
static_assert(Pairing<ToyPairing>);

using ActivePairing = ToyPairing;

inline GElem pair(const SystemParams& sp, const G1Elem& a, const G1Elem& b) { return ActivePairing::pair(sp, a, b); }

// ---- fixed-width serialization ----------------------------------------------

inline Bytes int_to_bytes(const mpz_class& v, std::size_t width) {
  if (v < 0) throw Error(Errc::OutOfRange, "negative integer cannot be serialized");
  std::size_t n = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  if (v == 0) n = 0;
  if (n > width) throw Error(Errc::OutOfRange, "integer wider than element width");
  Bytes out(width, 0);
  if (n > 0) mpz_export(out.data() + (width - n), nullptr, 1, 1, 1, 0, v.get_mpz_t());
  return out;
}

inline mpz_class int_from_bytes(ByteView b) {
  mpz_class v;
  if (!b.empty()) mpz_import(v.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
  return v;
}

inline Bytes encode(const SystemParams& sp, const GElem& e) { return int_to_bytes(e.v, sp.element_width); }
inline Bytes encode(const SystemParams& sp, const G1Elem& e) { return int_to_bytes(e.v, sp.element_width); }
inline Bytes encode(const SystemParams& sp, const Scalar& e) { return int_to_bytes(e.v, sp.element_width); }

inline GElem decode_g(const SystemParams& sp, ByteView b) {
  GElem e{int_from_bytes(b)};
  if (!in_group(sp, e)) throw Error(Errc::Decode, "group element outside [1, q]");
  return e;
}

inline G1Elem decode_g1(const SystemParams& sp, ByteView b) {
  G1Elem e{int_from_bytes(b)};
  if (e.v >= sp.q) throw Error(Errc::Decode, "G1 element outside [0, q-1]");
  return e;
}

inline Scalar decode_scalar(const SystemParams& sp, ByteView b) {
  Scalar e{int_from_bytes(b)};
  if (e.v >= sp.q) throw Error(Errc::Decode, "scalar outside [0, q-1]");
  return e;
}

inline std::string to_dec(const mpz_class& v) { return v.get_str(10); }

}  // namespace vgka::crypto
