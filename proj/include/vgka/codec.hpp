#pragma once

// Byte-exact wire format for every protocol message.
//
//   tag(1) || fields...
//
// Group elements, G1 elements and scalars are element_width-byte big-endian
// integers; pseudonyms are 42 bytes; MACs are 16 bytes; timestamps and epochs
// are 8-byte big-endian; ciphertexts and identities carry a 4-byte big-endian
// length prefix. The authenticator (MAC or signature) is always the last field
// and covers every byte before it.

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "vgka/bytes.hpp"
#include "vgka/crypto/schnorr.hpp"
#include "vgka/crypto/symmetric.hpp"

namespace vgka {

using crypto::G1Elem;
using crypto::GElem;
using crypto::Mac;
using crypto::Scalar;
using crypto::Signature;
using crypto::SystemParams;

inline constexpr std::size_t kPseudonymWidth = 42;
inline constexpr std::size_t kMacWidth = crypto::kMacWidth;

using Pseudonym = std::array<std::uint8_t, kPseudonymWidth>;

/// Planar position in millimetres.
struct Location {
  std::int64_t x_mm = 0;
  std::int64_t y_mm = 0;
  friend bool operator==(const Location&, const Location&) = default;
};

namespace msg {

enum class Tag : std::uint8_t {
  GkaRound1 = 0x01,
  GkaRound2 = 0x02,
  Beacon = 0x10,
  Hello = 0x11,
  Challenge = 0x12,
  Confirm = 0x13,
  FastPathAck = 0x14,
  Pag1 = 0x20,
  Pag2 = 0x21,
  Pag3 = 0x22,
  Bm1 = 0x23,
  GkTransfer = 0x24,
  Broadcast = 0x30,
  ToRsu = 0x31,
  Word1 = 0x32,
  Word2 = 0x33,
  Word3 = 0x34,
};

/// M1: round-1 commitments of the RSU key agreement.
struct GkaRound1 {
  static constexpr Tag kTag = Tag::GkaRound1;
  Bytes tid;
  GElem x, r, t;
  Signature sig;
  friend bool operator==(const GkaRound1&, const GkaRound1&) = default;
};

/// M2: ring value, Schnorr response and one deniability token per other RSU (roster order).
struct GkaRound2 {
  static constexpr Tag kTag = Tag::GkaRound2;
  Bytes tid;
  GElem y;
  Scalar s;
  std::vector<GElem> tokens;
  Signature sig;
  friend bool operator==(const GkaRound2&, const GkaRound2&) = default;
};

/// Meg1: TA-signed RSU beacon.
struct Beacon {
  static constexpr Tag kTag = Tag::Beacon;
  GElem pk_rsu;
  Location loc;
  Scalar loc_hash;
  Signature ta_sig;
  friend bool operator==(const Beacon&, const Beacon&) = default;
};

/// Meg2: vehicle hello. kem_* is the hybrid encryption of (FID, N1) to the RSU.
struct Hello {
  static constexpr Tag kTag = Tag::Hello;
  GElem pk_v;
  std::uint64_t ts_ms = 0;
  Bytes gk_fid_ct;
  GElem kem_ephemeral;
  Bytes kem_ct;
  Mac mac{};
  friend bool operator==(const Hello&, const Hello&) = default;
};

/// Ciphertext + MAC envelope shared by most messages.
template <Tag T>
struct Sealed {
  static constexpr Tag kTag = T;
  Bytes ct;
  Mac mac{};
  friend bool operator==(const Sealed&, const Sealed&) = default;
};

using Challenge = Sealed<Tag::Challenge>;      // Meg3, under N1
using Confirm = Sealed<Tag::Confirm>;          // Meg4, under N1
using FastPathAck = Sealed<Tag::FastPathAck>;  // fast-path admission notice, under N1
using Pag1 = Sealed<Tag::Pag1>;                // under N1
using Pag2 = Sealed<Tag::Pag2>;                // under N1
using Pag3 = Sealed<Tag::Pag3>;                // new GK under previous GK
using Bm1 = Sealed<Tag::Bm1>;                  // leave rekey under previous GK
using Broadcast = Sealed<Tag::Broadcast>;      // under GK
using Word1 = Sealed<Tag::Word1>;              // directory request under GK
using Word2 = Sealed<Tag::Word2>;              // directory under GK
using Word3 = Sealed<Tag::Word3>;              // peer envelope under GK

/// sk-protected group key hand-over between RSUs (wired).
struct GkTransfer {
  static constexpr Tag kTag = Tag::GkTransfer;
  Bytes source_tid;
  std::uint64_t epoch = 0;
  Bytes ct;
  Mac mac{};
  friend bool operator==(const GkTransfer&, const GkTransfer&) = default;
};

/// Vehicle-to-RSU unicast; the pseudonym travels in clear for dispatch.
struct ToRsu {
  static constexpr Tag kTag = Tag::ToRsu;
  Pseudonym fid{};
  Bytes ct;
  Mac mac{};
  friend bool operator==(const ToRsu&, const ToRsu&) = default;
};

template <class M, class F>
  requires std::same_as<std::remove_const_t<M>, GkaRound1>
void for_each_field(M& m, F&& f) {
  f(m.tid), f(m.x), f(m.r), f(m.t), f(m.sig);
}
template <class M, class F>
  requires std::same_as<std::remove_const_t<M>, GkaRound2>
void for_each_field(M& m, F&& f) {
  f(m.tid), f(m.y), f(m.s), f(m.tokens), f(m.sig);
}
template <class M, class F>
  requires std::same_as<std::remove_const_t<M>, Beacon>
void for_each_field(M& m, F&& f) {
  f(m.pk_rsu), f(m.loc), f(m.loc_hash), f(m.ta_sig);
}
template <class M, class F>
  requires std::same_as<std::remove_const_t<M>, Hello>
void for_each_field(M& m, F&& f) {
  f(m.pk_v), f(m.ts_ms), f(m.gk_fid_ct), f(m.kem_ephemeral), f(m.kem_ct), f(m.mac);
}
template <class M, class F>
  requires std::same_as<std::remove_const_t<M>, GkTransfer>
void for_each_field(M& m, F&& f) {
  f(m.source_tid), f(m.epoch), f(m.ct), f(m.mac);
}
template <class M, class F>
  requires std::same_as<std::remove_const_t<M>, ToRsu>
void for_each_field(M& m, F&& f) {
  f(m.fid), f(m.ct), f(m.mac);
}
template <Tag T, class F>
void for_each_field(Sealed<T>& m, F&& f) {
  f(m.ct), f(m.mac);
}
template <Tag T, class F>
void for_each_field(const Sealed<T>& m, F&& f) {
  f(m.ct), f(m.mac);
}

}  // namespace msg

using WireMessage = std::variant<msg::GkaRound1, msg::GkaRound2, msg::Beacon, msg::Hello, msg::Challenge, msg::Confirm,
                                 msg::FastPathAck, msg::Pag1, msg::Pag2, msg::Pag3, msg::Bm1, msg::GkTransfer,
                                 msg::Broadcast, msg::ToRsu, msg::Word1, msg::Word2, msg::Word3>;

// ---- element helpers shared with payload codecs ------------------------------

inline void put(ByteWriter& w, const SystemParams& sp, const GElem& e) { w.raw(crypto::encode(sp, e)); }
inline void put(ByteWriter& w, const SystemParams& sp, const G1Elem& e) { w.raw(crypto::encode(sp, e)); }
inline void put(ByteWriter& w, const SystemParams& sp, const Scalar& e) { w.raw(crypto::encode(sp, e)); }
inline GElem get_g(ByteReader& r, const SystemParams& sp) { return crypto::decode_g(sp, r.raw(sp.element_width)); }
inline G1Elem get_g1(ByteReader& r, const SystemParams& sp) { return crypto::decode_g1(sp, r.raw(sp.element_width)); }
inline Scalar get_scalar(ByteReader& r, const SystemParams& sp) {
  return crypto::decode_scalar(sp, r.raw(sp.element_width));
}

namespace detail {

struct FieldEncoder {
  const SystemParams& sp;
  ByteWriter& w;
  void operator()(const Bytes& b) const { w.var(b); }
  void operator()(const GElem& e) const { put(w, sp, e); }
  void operator()(const Scalar& e) const { put(w, sp, e); }
  void operator()(const Signature& s) const { put(w, sp, s.c), put(w, sp, s.s); }
  void operator()(std::uint64_t v) const { w.u64(v); }
  void operator()(const Location& l) const { w.i64(l.x_mm).i64(l.y_mm); }
  void operator()(const Pseudonym& p) const { w.raw(p); }
  void operator()(const Mac& m) const { w.raw(m); }
  void operator()(const std::vector<GElem>& v) const {
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& e : v) put(w, sp, e);
  }
};

struct FieldDecoder {
  const SystemParams& sp;
  ByteReader& r;
  void operator()(Bytes& b) const { b = r.var(); }
  void operator()(GElem& e) const { e = get_g(r, sp); }
  void operator()(Scalar& e) const { e = get_scalar(r, sp); }
  void operator()(Signature& s) const { s.c = get_scalar(r, sp), s.s = get_scalar(r, sp); }
  void operator()(std::uint64_t& v) const { v = r.u64(); }
  void operator()(Location& l) const { l.x_mm = r.i64(), l.y_mm = r.i64(); }
  void operator()(Pseudonym& p) const { p = r.fixed<kPseudonymWidth>(); }
  void operator()(Mac& m) const { m = r.fixed<kMacWidth>(); }
  void operator()(std::vector<GElem>& v) const {
    auto n = r.u32();
    if (static_cast<std::size_t>(n) * sp.element_width > r.remaining()) throw Error(Errc::Decode, "element list overruns input");
    v.clear();
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(get_g(r, sp));
  }
};

template <class M>
constexpr bool has_mac = requires(const M& m) { m.mac; };

template <class M>
std::size_t authenticator_width(const SystemParams& sp) {
  if constexpr (has_mac<M>) return kMacWidth;
  else return 2 * sp.element_width;
}

}  // namespace detail

template <class M>
Bytes encode_message(const SystemParams& sp, const M& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(M::kTag));
  msg::for_each_field(m, detail::FieldEncoder{sp, w});
  return std::move(w).bytes();
}

inline Bytes encode_message(const SystemParams& sp, const WireMessage& m) {
  return std::visit([&](const auto& v) { return encode_message(sp, v); }, m);
}

/// Bytes covered by the message's MAC or signature: everything before the authenticator.
template <class M>
Bytes auth_input(const SystemParams& sp, const M& m) {
  Bytes b = encode_message(sp, m);
  b.resize(b.size() - detail::authenticator_width<M>(sp));
  return b;
}

namespace detail {
template <class M>
M decode_as(const SystemParams& sp, ByteReader& r) {
  M m;
  msg::for_each_field(m, FieldDecoder{sp, r});
  r.expect_end();
  return m;
}

template <std::size_t I = 0>
WireMessage decode_tagged(const SystemParams& sp, std::uint8_t tag, ByteReader& r) {
  if constexpr (I == std::variant_size_v<WireMessage>) {
    throw Error(Errc::Decode, "unknown type tag 0x" + to_hex(ByteView(&tag, 1)));
  } else {
    using M = std::variant_alternative_t<I, WireMessage>;
    if (tag == static_cast<std::uint8_t>(M::kTag)) return decode_as<M>(sp, r);
    return decode_tagged<I + 1>(sp, tag, r);
  }
}
}  // namespace detail

inline WireMessage decode_message(const SystemParams& sp, ByteView bytes) {
  ByteReader r(bytes);
  auto tag = r.u8();
  return detail::decode_tagged(sp, tag, r);
}

/// Decode and require a specific message type.
template <class M>
M decode_as(const SystemParams& sp, ByteView bytes) {
  auto m = decode_message(sp, bytes);
  if (auto* p = std::get_if<M>(&m)) return std::move(*p);
  throw Error(Errc::Decode, "unexpected message type");
}

inline msg::Tag tag_of(const WireMessage& m) {
  return std::visit([](const auto& v) { return std::remove_cvref_t<decltype(v)>::kTag; }, m);
}

inline std::string_view tag_name(msg::Tag t) {
  using msg::Tag;
  switch (t) {
    case Tag::GkaRound1: return "GkaRound1(M1)";
    case Tag::GkaRound2: return "GkaRound2(M2)";
    case Tag::Beacon: return "Beacon(Meg1)";
    case Tag::Hello: return "Hello(Meg2)";
    case Tag::Challenge: return "Challenge(Meg3)";
    case Tag::Confirm: return "Confirm(Meg4)";
    case Tag::FastPathAck: return "FastPathAck";
    case Tag::Pag1: return "Pag1";
    case Tag::Pag2: return "Pag2";
    case Tag::Pag3: return "Pag3";
    case Tag::Bm1: return "Bm1";
    case Tag::GkTransfer: return "GkTransfer";
    case Tag::Broadcast: return "Broadcast";
    case Tag::ToRsu: return "ToRsu";
    case Tag::Word1: return "Word1";
    case Tag::Word2: return "Word2";
    case Tag::Word3: return "Word3";
  }
  return "?";
}

// ---- sealed channels ----------------------------------------------------------

/// Encrypt-then-MAC into any message with (ct, mac) as its last two fields.
template <class M>
M seal(const SystemParams& sp, const crypto::ChannelKeys& keys, ByteView plaintext, Rng& rng, M m = {}) {
  m.ct = crypto::sym_encrypt(keys.enc, plaintext, rng);
  m.mac = crypto::hmac(keys.mac, auth_input(sp, m));
  return m;
}

template <class M>
bool mac_valid(const SystemParams& sp, const crypto::SymKey& mac_key, const M& m) {
  return crypto::mac_equal(crypto::hmac(mac_key, auth_input(sp, m)), m.mac);
}

/// Verify the MAC, then decrypt. Throws Errc::MacFail.
template <class M>
Bytes open(const SystemParams& sp, const crypto::ChannelKeys& keys, const M& m) {
  if (!mac_valid(sp, keys.mac, m)) throw Error(Errc::MacFail, std::string(tag_name(M::kTag)) + " MAC mismatch");
  return crypto::sym_decrypt(keys.enc, m.ct);
}

// ---- overhead accounting -------------------------------------------------------

/// OBU -> RSU message types (the RSU is the or an intended receiver).
inline bool is_obu_to_rsu(msg::Tag t) {
  using msg::Tag;
  return t == Tag::Hello || t == Tag::Confirm || t == Tag::Pag1 || t == Tag::ToRsu || t == Tag::Word1 ||
         t == Tag::Broadcast;
}

/// Identity + integrity bytes: the sender-pseudonym field plus every MAC field.
/// Pseudonyms inside sealed payloads count at their fixed plaintext width.
inline std::size_t measure_overhead(const WireMessage& m) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using M = std::remove_cvref_t<decltype(v)>;
        using msg::Tag;
        if constexpr (std::is_same_v<M, msg::ToRsu>) {
          return v.fid.size() + v.mac.size();
        } else if constexpr (std::is_same_v<M, msg::GkaRound1> || std::is_same_v<M, msg::GkaRound2> ||
                             std::is_same_v<M, msg::Beacon> || std::is_same_v<M, msg::GkTransfer>) {
          return 0;  // RSU-originated; identified by TID / signature, no pseudonym
        } else {
          constexpr Tag t = M::kTag;
          constexpr bool carries_sender_fid = t == Tag::Hello || t == Tag::Confirm || t == Tag::Pag1 ||
                                              t == Tag::Broadcast || t == Tag::Word1 || t == Tag::Word3;
          std::size_t n = v.mac.size() + (carries_sender_fid ? kPseudonymWidth : 0);
          if constexpr (t == Tag::Word3) n += kMacWidth;  // inner VVK MAC
          return n;
        }
      },
      m);
}

// ---- diagnostics ---------------------------------------------------------------

namespace detail {
struct FieldPrinter {
  std::ostringstream& os;
  void line(std::string_view kind, const std::string& value) { os << "  " << kind << ": " << value << "\n"; }
  void operator()(const Bytes& b) { line("bytes[" + std::to_string(b.size()) + "]", to_hex(b)); }
  void operator()(const GElem& e) { line("G", crypto::to_dec(e.v)); }
  void operator()(const Scalar& e) { line("Zq", crypto::to_dec(e.v)); }
  void operator()(const Signature& s) { line("sig", "c=" + crypto::to_dec(s.c.v) + " s=" + crypto::to_dec(s.s.v)); }
  void operator()(std::uint64_t v) { line("u64", std::to_string(v)); }
  void operator()(const Location& l) {
    line("loc_mm", "(" + std::to_string(l.x_mm) + ", " + std::to_string(l.y_mm) + ")");
  }
  void operator()(const Pseudonym& p) { line("fid[42]", to_hex(p)); }
  void operator()(const Mac& m) { line("mac[16]", to_hex(m)); }
  void operator()(const std::vector<GElem>& v) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ", ") + crypto::to_dec(e.v);
    line("G[" + std::to_string(v.size()) + "]", "[" + s + "]");
  }
};
}  // namespace detail

inline std::string describe(const SystemParams& sp, const WireMessage& m) {
  std::ostringstream os;
  const auto bytes = encode_message(sp, m);
  os << tag_name(tag_of(m)) << " tag=0x" << to_hex(ByteView(bytes.data(), 1)) << " size=" << bytes.size()
     << " overhead=" << measure_overhead(m) << "\n";
  std::visit([&](const auto& v) { msg::for_each_field(v, detail::FieldPrinter{os}); }, m);
  return os.str();
}

}  // namespace vgka
