#pragma once

// E_k is AES-256-CTR under a random 16-byte nonce; HMAC_k is HMAC-SHA256
// truncated to 16 bytes. Channels use encrypt-then-MAC with independent
// encryption and MAC keys derived from the same secret.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/core_names.h>
#include <openssl/params.h>

#include "vgka/crypto/hash.hpp"

namespace vgka::crypto {

inline constexpr std::size_t kMacWidth = 16;
inline constexpr std::size_t kNonceWidth = 16;

using Mac = std::array<std::uint8_t, kMacWidth>;

namespace detail {
inline EVP_MAC* hmac_algorithm() {
  static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
  if (mac == nullptr) throw Error(Errc::InvalidArgument, "HMAC unavailable");
  return mac;
}

inline const EVP_CIPHER* aes_ctr() {
  static EVP_CIPHER* c = EVP_CIPHER_fetch(nullptr, "AES-256-CTR", nullptr);
  if (c == nullptr) throw Error(Errc::InvalidArgument, "AES-256-CTR unavailable");
  return c;
}
}  // namespace detail

inline Digest hmac_sha256(const SymKey& k, ByteView data) {
  Digest out{};
  std::size_t len = 0;
  EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(detail::hmac_algorithm());
  char digest[] = "SHA256";
  OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest, 0), OSSL_PARAM_construct_end()};
  const bool ok = ctx != nullptr && EVP_MAC_init(ctx, k.data(), k.size(), params) == 1 &&
                  EVP_MAC_update(ctx, data.data(), data.size()) == 1 &&
                  EVP_MAC_final(ctx, out.data(), &len, out.size()) == 1 && len == out.size();
  EVP_MAC_CTX_free(ctx);
  if (!ok) throw Error(Errc::InvalidArgument, "HMAC-SHA256 failed");
  return out;
}

inline Mac hmac(const SymKey& k, ByteView data) {
  auto full = hmac_sha256(k, data);
  Mac tag{};
  std::copy_n(full.begin(), tag.size(), tag.begin());
  return tag;
}

inline bool mac_equal(const Mac& a, const Mac& b) { return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0; }

namespace detail {
inline void apply_keystream(const SymKey& k, ByteView nonce, ByteView in, std::uint8_t* out) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  int len = 0, tail = 0;
  const bool ok = ctx != nullptr && EVP_EncryptInit_ex2(ctx, aes_ctr(), k.data(), nonce.data(), nullptr) == 1 &&
                  EVP_EncryptUpdate(ctx, out, &len, in.data(), static_cast<int>(in.size())) == 1 &&
                  EVP_EncryptFinal_ex(ctx, out + len, &tail) == 1;
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw Error(Errc::InvalidArgument, "AES-256-CTR failed");
}
}  // namespace detail

/// nonce(16) || AES-256-CTR(k, nonce, plaintext).
inline Bytes sym_encrypt(const SymKey& k, ByteView plaintext, Rng& rng) {
  Bytes out(kNonceWidth + plaintext.size());
  rng.fill(std::span(out.data(), kNonceWidth));
  detail::apply_keystream(k, ByteView(out.data(), kNonceWidth), plaintext, out.data() + kNonceWidth);
  return out;
}

inline Bytes sym_decrypt(const SymKey& k, ByteView ciphertext) {
  if (ciphertext.size() < kNonceWidth) throw Error(Errc::DecryptFail, "ciphertext shorter than nonce");
  Bytes out(ciphertext.size() - kNonceWidth);
  detail::apply_keystream(k, ciphertext.first(kNonceWidth), ciphertext.subspan(kNonceWidth), out.data());
  return out;
}

/// Encryption and MAC keys derived from one secret under a channel label.
struct ChannelKeys {
  SymKey enc;
  SymKey mac;
};

template <class Secret>
ChannelKeys channel_keys(const SystemParams& sp, const Secret& secret, std::string_view label) {
  std::string l(label);
  return ChannelKeys{kdf(sp, secret, l + "/enc"), kdf(sp, secret, l + "/mac")};
}

}  // namespace vgka::crypto
