#pragma once

// H1, h, the pseudonym mask hash and the KDF, all built on SHA-256 with
// per-function domain separation.

#include <array>
#include <cstdint>
#include <string_view>

#include <openssl/evp.h>

#include "vgka/bytes.hpp"
#include "vgka/crypto/group.hpp"

namespace vgka::crypto {

using Digest = std::array<std::uint8_t, 32>;
using SymKey = std::array<std::uint8_t, 32>;

namespace detail {
// Explicitly fetched once; the implicit per-call fetch behind EVP_sha256() dominates short inputs.
inline const EVP_MD* sha256_md() {
  static EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  if (md == nullptr) throw Error(Errc::InvalidArgument, "SHA256 unavailable");
  return md;
}
}  // namespace detail

inline Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, detail::sha256_md(), nullptr) != 1 || len != out.size())
    throw Error(Errc::InvalidArgument, "EVP_Digest(sha256) failed");
  return out;
}

/// Counter-mode expansion: SHA256(len(domain) || domain || ctr || data) blocks, truncated.
inline Bytes expand(std::string_view domain, ByteView data, std::size_t out_len) {
  Bytes out;
  out.reserve(out_len + 32);
  for (std::uint32_t ctr = 0; out.size() < out_len; ++ctr) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(domain.size())).raw(to_bytes(domain)).u32(ctr).raw(data);
    auto d = sha256(w.bytes());
    out.insert(out.end(), d.begin(), d.end());
  }
  out.resize(out_len);
  return out;
}

namespace detail {
// 128 extra bits make the bias of the modular reduction negligible.
inline mpz_class hash_to_nonzero(const SystemParams& sp, std::string_view domain, ByteView data) {
  auto wide = expand(domain, data, sp.element_width + 16);
  return mod(int_from_bytes(wide), sp.q - 1) + 1;
}
}  // namespace detail

/// H1: {0,1}* -> G1 \ {0}.
inline G1Elem hash_to_g1(const SystemParams& sp, ByteView data) {
  return G1Elem{detail::hash_to_nonzero(sp, sp.hash.h1, data)};
}

/// h: {0,1}* -> Z_q^*.
inline Scalar hash_to_scalar(const SystemParams& sp, ByteView data) {
  return Scalar{detail::hash_to_nonzero(sp, sp.hash.h, data)};
}

inline Bytes mask_hash(const SystemParams& sp, const GElem& e, std::size_t out_len) {
  return expand(sp.hash.mask, encode(sp, e), out_len);
}

namespace detail {
inline SymKey kdf_bytes(const SystemParams& sp, std::uint8_t kind, ByteView material, std::string_view context) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(sp.hash.kdf.size())).raw(to_bytes(sp.hash.kdf));
  w.u8(kind).var(to_bytes(context)).raw(material);
  return sha256(w.bytes());
}
}  // namespace detail

inline SymKey kdf(const SystemParams& sp, const GElem& e, std::string_view context) {
  return detail::kdf_bytes(sp, 'G', encode(sp, e), context);
}

inline SymKey kdf(const SystemParams& sp, const Scalar& s, std::string_view context) {
  return detail::kdf_bytes(sp, 'S', encode(sp, s), context);
}

}  // namespace vgka::crypto
