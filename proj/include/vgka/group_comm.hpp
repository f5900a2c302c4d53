#pragma once

// Intra-group messaging: group broadcast under GK, vehicle -> RSU under N1,
// and vehicle <-> vehicle under VVK_{i,j} = g^(lambda_i lambda_j gamma),
// bootstrapped from the RSU's share directory (Word1 / Word2).

#include <string>
#include <vector>

#include "vgka/group_key.hpp"

namespace vgka::comm {

using group::ShareEntry;

/// One-to-one request constant C.
inline constexpr std::array<std::uint8_t, 8> kDirectoryRequest{'V', 'V', 'K', '-', 'R', 'E', 'Q', '\0'};

struct Received {
  Pseudonym sender{};
  Bytes payload;
};

// ---- broadcast ---------------------------------------------------------------------

inline msg::Broadcast broadcast(const group::GroupMember& member, ByteView m, Rng& rng) {
  const auto& sp = member.params();
  ByteWriter w;
  w.raw(member.fid()).var(m);
  return seal<msg::Broadcast>(sp, member.group_keys(), w.bytes(), rng);
}

inline Received receive_broadcast(const SystemParams& sp, const crypto::ChannelKeys& gk_keys, const msg::Broadcast& m) {
  const auto plain = open(sp, gk_keys, m);
  ByteReader r(plain);
  Received out{r.fixed<kPseudonymWidth>(), r.var()};
  r.expect_end();
  return out;
}

inline Received receive_broadcast(const SystemParams& sp, const GElem& gk, const msg::Broadcast& m) {
  return receive_broadcast(sp, group::gk_keys(sp, gk), m);
}

// ---- vehicle -> RSU ---------------------------------------------------------------------

inline msg::ToRsu to_rsu(const SystemParams& sp, const Pseudonym& fid, const crypto::ChannelKeys& n1_keys, ByteView m,
                         Rng& rng) {
  msg::ToRsu out;
  out.fid = fid;
  return seal(sp, n1_keys, m, rng, std::move(out));
}

inline msg::ToRsu to_rsu(const group::GroupMember& member, ByteView m, Rng& rng) {
  return to_rsu(member.params(), member.fid(), member.n1_keys(), m, rng);
}

/// RSU side: the clear pseudonym selects the session key.
inline Bytes receive_to_rsu(const auth::RsuAuthenticator& rsu, const msg::ToRsu& m) {
  const auto* s = rsu.find_session(m.fid);
  if (s == nullptr || !auth::authenticated(s->state)) throw Error(Errc::UnknownFid, "no authenticated session");
  return open(rsu.params(), s->keys, m);
}

// ---- directory ------------------------------------------------------------------------

inline msg::Word1 request_directory(const group::GroupMember& member, Rng& rng) {
  const auto& sp = member.params();
  ByteWriter w;
  w.raw(kDirectoryRequest).raw(member.fid());
  return seal<msg::Word1>(sp, group::gk_keys(sp, member.gk()), w.bytes(), rng);
}

struct Directory {
  std::uint64_t epoch = 0;
  std::vector<ShareEntry> entries;
};

inline Bytes encode_body(const SystemParams& sp, const Directory& d) {
  ByteWriter w;
  w.u64(d.epoch);
  group::detail::put_entries(w, sp, d.entries);
  return std::move(w).bytes();
}

inline Directory decode_directory(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  Directory d;
  d.epoch = r.u64();
  d.entries = group::detail::get_entries(r, sp);
  r.expect_end();
  return d;
}

/// Word1 -> Word2. Returns the requester pseudonym through `requester` when given.
inline msg::Word2 rsu_serve_directory(const group::RsuGroup& g, const msg::Word1& req, Rng& rng,
                                      Pseudonym* requester = nullptr) {
  const auto& sp = g.params();
  if (!g.gk()) throw Error(Errc::EmptyGroup, "no group key");
  const auto keys = group::gk_keys(sp, *g.gk());
  const auto plain = open(sp, keys, req);
  ByteReader r(plain);
  const auto c = r.fixed<kDirectoryRequest.size()>();
  const auto fid = r.fixed<kPseudonymWidth>();
  r.expect_end();
  if (c != kDirectoryRequest) throw Error(Errc::Decode, "Word1 does not carry the request constant");
  if (requester) *requester = fid;
  return seal<msg::Word2>(sp, keys, encode_body(sp, Directory{g.epoch(), g.directory()}), rng);
}

inline Directory read_directory(const SystemParams& sp, const GElem& gk, const msg::Word2& m) {
  return decode_directory(sp, open(sp, group::gk_keys(sp, gk), m));
}

// ---- vehicle <-> vehicle ----------------------------------------------------------------

struct VvkChannel {
  Pseudonym peer_fid{};
  GElem vvk;
  std::uint64_t epoch = 0;
};

/// VVK = (g^(lambda_j gamma))^lambda_i.
inline VvkChannel derive_vvk(const SystemParams& sp, const Scalar& own_lambda, const ShareEntry& peer,
                             std::uint64_t epoch) {
  return VvkChannel{peer.fid, crypto::g_exp(sp, peer.blinded, own_lambda), epoch};
}

inline VvkChannel derive_vvk(const group::GroupMember& member, const Directory& dir, const Pseudonym& peer) {
  for (const auto& e : dir.entries)
    if (e.fid == peer) return derive_vvk(member.params(), member.lambda(), e, dir.epoch);
  throw Error(Errc::UnknownFid, "peer not in directory");
}

inline crypto::ChannelKeys vvk_keys(const SystemParams& sp, const GElem& vvk) {
  return crypto::channel_keys(sp, vvk, "vvk");
}

namespace detail {
inline Bytes inner_mac_input(const Pseudonym& sender, const Pseudonym& recipient, std::uint64_t epoch,
                             ByteView inner_ct) {
  ByteWriter w;
  w.raw(sender).raw(recipient).u64(epoch).var(inner_ct);
  return std::move(w).bytes();
}
}  // namespace detail

/// Word3 = E_GK(sender FID, recipient FID, epoch, E_VVK(m), HMAC_VVK) + HMAC_GK.
inline msg::Word3 send_peer(const SystemParams& sp, const VvkChannel& ch, const GElem& gk, const Pseudonym& own_fid,
                            ByteView m, Rng& rng) {
  const auto inner = vvk_keys(sp, ch.vvk);
  const auto inner_ct = crypto::sym_encrypt(inner.enc, m, rng);
  const auto inner_mac = crypto::hmac(inner.mac, detail::inner_mac_input(own_fid, ch.peer_fid, ch.epoch, inner_ct));
  ByteWriter w;
  w.raw(own_fid).raw(ch.peer_fid).u64(ch.epoch).var(inner_ct).raw(inner_mac);
  return seal<msg::Word3>(sp, group::gk_keys(sp, gk), w.bytes(), rng);
}

inline Bytes recv_peer(const SystemParams& sp, const VvkChannel& ch, const GElem& gk, const Pseudonym& own_fid,
                       const msg::Word3& m) {
  const auto plain = open(sp, group::gk_keys(sp, gk), m);
  ByteReader r(plain);
  const auto sender = r.fixed<kPseudonymWidth>();
  const auto recipient = r.fixed<kPseudonymWidth>();
  const auto epoch = r.u64();
  const auto inner_ct = r.var();
  const auto inner_mac = r.fixed<kMacWidth>();
  r.expect_end();
  if (recipient != own_fid) throw Error(Errc::UnknownFid, "Word3 addressed to another member");
  if (sender != ch.peer_fid) throw Error(Errc::UnknownFid, "Word3 from unexpected sender");
  if (epoch != ch.epoch) throw Error(Errc::EpochMismatch, "Word3 epoch differs from channel epoch");
  const auto inner = vvk_keys(sp, ch.vvk);
  if (!crypto::mac_equal(crypto::hmac(inner.mac, detail::inner_mac_input(sender, recipient, epoch, inner_ct)),
                         inner_mac))
    throw Error(Errc::MacFail, "Word3 inner VVK MAC");
  return crypto::sym_decrypt(inner.enc, inner_ct);
}

}  // namespace vgka::comm
