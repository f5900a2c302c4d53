#pragma once

// RSU-centred group key: GK = g^gamma * prod_i g^(lambda_i * gamma).
//
// Each member contributes g^lambda_i (Pag1). On every membership change the RSU
// draws a fresh gamma and hands each member (g^(lambda_i gamma), product) (Pag2);
// a member recovers g^gamma with the exponent lambda_i^-1 mod q. Existing
// members also receive the new GK under the previous one (Pag3). A leave is
// announced with Bm1: every remaining (blinded share, FID) plus the product,
// under the previous GK. The new GK is pushed to neighbouring RSUs under the
// RSU-to-RSU session key sk.

#include <map>
#include <optional>
#include <vector>

#include "vgka/auth.hpp"

namespace vgka::group {

using crypto::ChannelKeys;

inline ChannelKeys gk_keys(const SystemParams& sp, const GElem& gk) { return crypto::channel_keys(sp, gk, "gk"); }
inline ChannelKeys sk_keys(const SystemParams& sp, const GElem& sk) { return crypto::channel_keys(sp, sk, "sk"); }

/// g^gamma = blinded^(lambda^-1); GK = g^gamma * product.
inline GElem derive_gk(const SystemParams& sp, const Scalar& lambda, const GElem& blinded, const GElem& product) {
  const auto g_gamma = crypto::g_exp(sp, blinded, crypto::sc_inv(sp, lambda));
  return crypto::g_mul(sp, g_gamma, product);
}

// ---- payloads ---------------------------------------------------------------------

struct OfferBody {
  Pseudonym fid{};
  GElem share;  // g^lambda
};

struct Pag2Body {
  std::uint64_t epoch = 0;
  GElem blinded;
  GElem product;
};

struct Pag3Body {
  std::uint64_t epoch = 0;
  GElem gk;
};

struct ShareEntry {
  GElem blinded;
  Pseudonym fid{};
  friend bool operator==(const ShareEntry&, const ShareEntry&) = default;
};

struct Bm1Body {
  std::uint64_t epoch = 0;
  std::vector<ShareEntry> shares;
  GElem product;
};

namespace detail {
inline void put_entries(ByteWriter& w, const SystemParams& sp, const std::vector<ShareEntry>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& e : v) {
    put(w, sp, e.blinded);
    w.raw(e.fid);
  }
}
inline std::vector<ShareEntry> get_entries(ByteReader& r, const SystemParams& sp) {
  const auto n = r.u32();
  if (static_cast<std::size_t>(n) * (sp.element_width + kPseudonymWidth) > r.remaining())
    throw Error(Errc::Decode, "share list overruns payload");
  std::vector<ShareEntry> v(n);
  for (auto& e : v) {
    e.blinded = get_g(r, sp);
    e.fid = r.fixed<kPseudonymWidth>();
  }
  return v;
}
}  // namespace detail

inline Bytes encode_body(const SystemParams& sp, const OfferBody& b) {
  ByteWriter w;
  w.raw(b.fid);
  put(w, sp, b.share);
  return std::move(w).bytes();
}
inline OfferBody decode_offer(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  OfferBody b;
  b.fid = r.fixed<kPseudonymWidth>();
  b.share = get_g(r, sp);
  r.expect_end();
  return b;
}
inline Bytes encode_body(const SystemParams& sp, const Pag2Body& b) {
  ByteWriter w;
  w.u64(b.epoch);
  put(w, sp, b.blinded);
  put(w, sp, b.product);
  return std::move(w).bytes();
}
inline Pag2Body decode_pag2(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  Pag2Body b;
  b.epoch = r.u64();
  b.blinded = get_g(r, sp);
  b.product = get_g(r, sp);
  r.expect_end();
  return b;
}
inline Bytes encode_body(const SystemParams& sp, const Pag3Body& b) {
  ByteWriter w;
  w.u64(b.epoch);
  put(w, sp, b.gk);
  return std::move(w).bytes();
}
inline Pag3Body decode_pag3(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  Pag3Body b;
  b.epoch = r.u64();
  b.gk = get_g(r, sp);
  r.expect_end();
  return b;
}
inline Bytes encode_body(const SystemParams& sp, const Bm1Body& b) {
  ByteWriter w;
  w.u64(b.epoch);
  detail::put_entries(w, sp, b.shares);
  put(w, sp, b.product);
  return std::move(w).bytes();
}
inline Bm1Body decode_bm1(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  Bm1Body b;
  b.epoch = r.u64();
  b.shares = detail::get_entries(r, sp);
  b.product = get_g(r, sp);
  r.expect_end();
  return b;
}

// ---- vehicle side ---------------------------------------------------------------------

/// Pag1 = E_N1(FID, g^lambda) + HMAC_N1. The session must be authenticated.
inline msg::Pag1 member_offer(const auth::VehicleSession& session, const Scalar& lambda, Rng& rng) {
  if (!auth::authenticated(session.state())) throw Error(Errc::Unauthenticated, "Pag1 before authentication");
  const auto& sp = session.params();
  if (lambda.v <= 0 || lambda.v >= sp.q) throw Error(Errc::OutOfRange, "lambda outside Z_q^*");
  return seal<msg::Pag1>(sp, session.keys(), encode_body(sp, OfferBody{session.fid(), crypto::g_pow(sp, lambda)}), rng);
}

/// Vehicle-side view of its group.
class GroupMember {
 public:
  GroupMember(SystemParams sp, Pseudonym fid, Scalar lambda, ChannelKeys n1_keys)
      : sp_(std::move(sp)), fid_(fid), lambda_(std::move(lambda)), n1_keys_(n1_keys) {}

  static GroupMember join(const auth::VehicleSession& session, Rng& rng, msg::Pag1& offer_out) {
    GroupMember m(session.params(), session.fid(), crypto::random_scalar(session.params(), rng), session.keys());
    offer_out = member_offer(session, m.lambda_, rng);
    return m;
  }

  /// Pag2 -> GK.
  GElem member_derive(const msg::Pag2& m) {
    const auto b = decode_pag2(sp_, open(sp_, n1_keys_, m));
    install(b.epoch, b.blinded, b.product);
    return *gk_;
  }

  /// Pag3: new GK under the one we hold. If we already derived this epoch, the two must agree.
  GElem apply_pag3(const msg::Pag3& m) {
    if (!gk_) throw Error(Errc::NoSessionKey, "no group key to open Pag3");
    const auto b = decode_pag3(sp_, open(sp_, *gk_keys_, m));
    if (b.epoch == epoch_) {
      if (b.gk != *gk_) throw Error(Errc::GkMismatch, "Pag3 GK differs from derived GK");
      return *gk_;
    }
    if (b.epoch < epoch_) throw Error(Errc::EpochMismatch, "stale Pag3");
    set_gk(b.gk);
    epoch_ = b.epoch;
    return *gk_;
  }

  /// Bm1 under the previous GK; our pair is located by pseudonym.
  GElem member_derive_from_bm1(const msg::Bm1& m) {
    if (!gk_) throw Error(Errc::NoSessionKey, "no group key to open Bm1");
    const auto b = decode_bm1(sp_, open(sp_, *gk_keys_, m));
    for (const auto& e : b.shares)
      if (e.fid == fid_) {
        install(b.epoch, e.blinded, b.product);
        return *gk_;
      }
    throw Error(Errc::FidAbsent, "own pseudonym not listed in Bm1");
  }

  const Pseudonym& fid() const { return fid_; }
  const Scalar& lambda() const { return lambda_; }
  const ChannelKeys& n1_keys() const { return n1_keys_; }
  bool has_gk() const { return gk_.has_value(); }
  const GElem& gk() const {
    if (!gk_) throw Error(Errc::NoSessionKey, "not a group member yet");
    return *gk_;
  }
  /// Channel keys of the current GK.
  const ChannelKeys& group_keys() const {
    if (!gk_keys_) throw Error(Errc::NoSessionKey, "not a group member yet");
    return *gk_keys_;
  }
  std::uint64_t epoch() const { return epoch_; }
  const std::optional<GElem>& blinded() const { return blinded_; }
  const SystemParams& params() const { return sp_; }

 private:
  void install(std::uint64_t epoch, const GElem& blinded, const GElem& product) {
    set_gk(derive_gk(sp_, lambda_, blinded, product));
    blinded_ = blinded;
    epoch_ = epoch;
  }

  void set_gk(const GElem& gk) {
    gk_ = gk;
    gk_keys_ = gk_keys(sp_, gk);
  }

  SystemParams sp_;
  Pseudonym fid_;
  Scalar lambda_;
  ChannelKeys n1_keys_;
  std::optional<GElem> gk_;
  std::optional<ChannelKeys> gk_keys_;
  std::optional<GElem> blinded_;
  std::uint64_t epoch_ = 0;
};

// ---- RSU side ------------------------------------------------------------------------

struct MemberRecord {
  GElem share;    // g^lambda_i
  GElem blinded;  // g^(lambda_i gamma)
  ChannelKeys n1_keys{};
};

struct Offer {
  Pseudonym fid{};
  GElem share;
  ChannelKeys n1_keys{};
};

struct RekeyOutput {
  std::uint64_t epoch = 0;
  std::map<Pseudonym, msg::Pag2> pag2;
  std::optional<msg::Pag3> pag3;  // absent when there was no previous GK
};

/// Open a Pag1 against the RSU's authenticated sessions.
inline Offer accept_offer(const auth::RsuAuthenticator& rsu, const msg::Pag1& m) {
  const auto& sp = rsu.params();
  for (const auto& [fid, s] : rsu.sessions()) {
    if (!mac_valid(sp, s.keys.mac, m)) continue;
    if (!auth::authenticated(s.state)) throw Error(Errc::Unauthenticated, "Pag1 from unauthenticated session");
    auto body = decode_offer(sp, crypto::sym_decrypt(s.keys.enc, m.ct));
    if (body.fid != fid) throw Error(Errc::MacFail, "Pag1 pseudonym differs from session");
    return Offer{fid, body.share, s.keys};
  }
  throw Error(Errc::MacFail, "Pag1 matches no session");
}

class RsuGroup {
 public:
  explicit RsuGroup(SystemParams sp) : sp_(std::move(sp)) {}

  /// Fresh gamma; Pag2 for every member; Pag3 (new GK under previous GK) when one existed.
  RekeyOutput rekey(Rng& rng, std::optional<Scalar> gamma = {}) {
    if (members_.empty()) throw Error(Errc::EmptyGroup, "rekey of empty group");
    const auto product = apply_gamma(gamma ? *gamma : crypto::random_scalar(sp_, rng));
    RekeyOutput out;
    out.epoch = epoch_;
    for (const auto& [fid, m] : members_)
      out.pag2[fid] = seal<msg::Pag2>(sp_, m.n1_keys, encode_body(sp_, Pag2Body{epoch_, m.blinded, product}), rng);
    if (prev_gk_) out.pag3 = seal<msg::Pag3>(sp_, gk_keys(sp_, *prev_gk_), encode_body(sp_, Pag3Body{epoch_, *gk_}), rng);
    return out;
  }

  RekeyOutput handle_join(const Offer& offer, Rng& rng, std::optional<Scalar> gamma = {}) {
    if (members_.contains(offer.fid)) throw Error(Errc::DuplicateFid, "pseudonym already in group");
    members_[offer.fid] = MemberRecord{offer.share, crypto::g_identity(), offer.n1_keys};
    return rekey(rng, gamma);
  }

  /// Remove the leaver and rekey. Returns Bm1 under the previous GK, or nothing if the group emptied.
  std::optional<msg::Bm1> handle_leave(const Pseudonym& leaver, Rng& rng, std::optional<Scalar> gamma = {}) {
    if (!members_.erase(leaver)) throw Error(Errc::UnknownFid, "leaver is not a member");
    if (members_.empty()) {
      prev_gk_ = gk_;
      gk_.reset();
      ++epoch_;
      return std::nullopt;
    }
    const auto old_gk = *gk_;
    Bm1Body body;
    body.product = apply_gamma(gamma ? *gamma : crypto::random_scalar(sp_, rng));
    body.epoch = epoch_;
    for (const auto& [fid, m] : members_) body.shares.push_back(ShareEntry{m.blinded, fid});
    return seal<msg::Bm1>(sp_, gk_keys(sp_, old_gk), encode_body(sp_, body), rng);
  }

  /// E_sk(GK || epoch) for neighbouring RSUs.
  msg::GkTransfer transfer_gk(const std::optional<GElem>& neighbor_sk, const Bytes& source_tid, Rng& rng) const {
    if (!neighbor_sk) throw Error(Errc::NoSessionKey, "no RSU session key established");
    if (!gk_) throw Error(Errc::EmptyGroup, "no group key to transfer");
    msg::GkTransfer m;
    m.source_tid = source_tid;
    m.epoch = epoch_;
    return seal(sp_, sk_keys(sp_, *neighbor_sk), encode_body(sp_, Pag3Body{epoch_, *gk_}), rng, std::move(m));
  }

  bool contains(const Pseudonym& fid) const { return members_.contains(fid); }
  std::size_t size() const { return members_.size(); }
  std::uint64_t epoch() const { return epoch_; }
  const Scalar& gamma() const { return gamma_; }
  const std::optional<GElem>& gk() const { return gk_; }
  const std::optional<GElem>& prev_gk() const { return prev_gk_; }
  const std::map<Pseudonym, MemberRecord>& members() const { return members_; }
  const SystemParams& params() const { return sp_; }

  /// Current (blinded share, FID) pairs in pseudonym order.
  std::vector<ShareEntry> directory() const {
    std::vector<ShareEntry> out;
    for (const auto& [fid, m] : members_) out.push_back(ShareEntry{m.blinded, fid});
    return out;
  }

 private:
  /// Installs gamma, recomputes every blinded share and the GK; returns the product.
  GElem apply_gamma(const Scalar& gamma) {
    gamma_ = gamma;
    GElem product = crypto::g_identity();
    for (auto& [fid, m] : members_) {
      m.blinded = crypto::g_exp(sp_, m.share, gamma_);
      product = crypto::g_mul(sp_, product, m.blinded);
    }
    if (gk_) prev_gk_ = gk_;
    gk_ = crypto::g_mul(sp_, crypto::g_pow(sp_, gamma_), product);
    ++epoch_;
    return product;
  }

  SystemParams sp_;
  std::uint64_t epoch_ = 0;
  Scalar gamma_;
  std::map<Pseudonym, MemberRecord> members_;
  std::optional<GElem> gk_;
  std::optional<GElem> prev_gk_;
};

/// Neighbour side of the GK transfer: authenticate, decrypt and store if newer.
/// Returns whether the store changed.
inline bool receive_gk_transfer(const SystemParams& sp, auth::NeighborGkStore& store, const msg::GkTransfer& m,
                                const GElem& sk) {
  const auto b = decode_pag3(sp, open(sp, sk_keys(sp, sk), m));
  if (b.epoch != m.epoch) throw Error(Errc::EpochMismatch, "GK transfer header/body epoch differ");
  return store.offer(m.source_tid, m.epoch, b.gk);
}

}  // namespace vgka::group
