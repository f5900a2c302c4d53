#pragma once

// RSU <-> vehicle mutual authentication.
//
//   RSU  -> V   Meg1  beacon (PK_RSU, Loc, h(Loc), sigma_TA)
//   V    -> RSU Meg2  (PK_V, TS, E_GKprev(FID), E_PK_RSU(FID, N1), HMAC_N1)
//   RSU  -> V   Meg3  E_N1(T_RSU = alpha*P, N1*Q_RSU) + HMAC      (full path)
//           or  FastPathAck E_N1(FID) + HMAC                      (neighbour GK matched)
//   V    -> RSU Meg4  E_N1(FID, T_V = beta*P, N1*Q_V, K_V) + HMAC
//
//   K_V   = e(beta * N1Q_RSU, PK_TA) * e(N1 * s_V, T_RSU)
//   K_RSU = e(alpha * N1Q_V, PK_TA) * e(N1 * s_RSU, T_V)
// Both equal e(P,P)^(N1 * psi * (beta*Q_RSU + alpha*Q_V)) for TA-issued credentials.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "vgka/ta.hpp"

namespace vgka::auth {

using crypto::ChannelKeys;

inline constexpr std::uint64_t kDefaultDeltaMaxMs = 500;
inline constexpr std::uint64_t kDefaultBeaconPeriodMs = 300;

enum class State { Idle, BeaconVerified, HelloSent, Challenged, Confirmed, FastPathDone, Failed };

inline std::string_view state_name(State s) {
  switch (s) {
    case State::Idle: return "Idle";
    case State::BeaconVerified: return "BeaconVerified";
    case State::HelloSent: return "HelloSent";
    case State::Challenged: return "Challenged";
    case State::Confirmed: return "Confirmed";
    case State::FastPathDone: return "FastPathDone";
    case State::Failed: return "Failed";
  }
  return "?";
}

inline bool authenticated(State s) { return s == State::Confirmed || s == State::FastPathDone; }

/// Channel keys derived from the vehicle-chosen N1.
inline ChannelKeys n1_keys(const SystemParams& sp, const Scalar& n1) { return crypto::channel_keys(sp, n1, "n1"); }

/// Key used for the E_GKprev(FID) field of Meg2.
inline crypto::SymKey gk_fid_key(const SystemParams& sp, const GElem& gk) { return crypto::kdf(sp, gk, "gk-fid"); }

inline GElem k_vehicle(const SystemParams& sp, const Scalar& beta, const Scalar& n1, const G1Elem& n1_q_rsu,
                       const G1Elem& s_v, const G1Elem& t_rsu) {
  using namespace crypto;
  return g_mul(sp, pair(sp, g1_scale(sp, beta, n1_q_rsu), sp.pk_ta_g1), pair(sp, g1_scale(sp, n1, s_v), t_rsu));
}

inline GElem k_rsu(const SystemParams& sp, const Scalar& alpha, const Scalar& n1, const G1Elem& n1_q_v,
                   const G1Elem& s_rsu, const G1Elem& t_v) {
  using namespace crypto;
  return g_mul(sp, pair(sp, g1_scale(sp, alpha, n1_q_v), sp.pk_ta_g1), pair(sp, g1_scale(sp, n1, s_rsu), t_v));
}

/// Location hash first, then the TA signature. Throws LocHashMismatch / SigFail.
inline void verify_beacon(const SystemParams& sp, const msg::Beacon& b) {
  if (ta::location_hash(sp, b.loc) != b.loc_hash) throw Error(Errc::LocHashMismatch, "beacon location hash");
  if (!crypto::schnorr_verify(sp, sp.pk_ta_g, auth_input(sp, b), b.ta_sig))
    throw Error(Errc::SigFail, "beacon TA signature");
}

// ---- payload layouts -----------------------------------------------------------

struct ChallengeBody {
  G1Elem t_rsu;
  G1Elem n1_q_rsu;
};

struct ConfirmBody {
  Pseudonym fid{};
  G1Elem t_v;
  G1Elem n1_q_v;
  GElem k_v;
};

inline Bytes encode_body(const SystemParams& sp, const ChallengeBody& b) {
  ByteWriter w;
  put(w, sp, b.t_rsu);
  put(w, sp, b.n1_q_rsu);
  return std::move(w).bytes();
}

inline ChallengeBody decode_challenge_body(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  ChallengeBody b{get_g1(r, sp), get_g1(r, sp)};
  r.expect_end();
  return b;
}

inline Bytes encode_body(const SystemParams& sp, const ConfirmBody& b) {
  ByteWriter w;
  w.raw(b.fid);
  put(w, sp, b.t_v);
  put(w, sp, b.n1_q_v);
  put(w, sp, b.k_v);
  return std::move(w).bytes();
}

inline ConfirmBody decode_confirm_body(const SystemParams& sp, ByteView in) {
  ByteReader r(in);
  ConfirmBody b;
  b.fid = r.fixed<kPseudonymWidth>();
  b.t_v = get_g1(r, sp);
  b.n1_q_v = get_g1(r, sp);
  b.k_v = get_g(r, sp);
  r.expect_end();
  return b;
}

// ---- neighbour group keys (filled by GK transfer) --------------------------------

struct StoredGk {
  Bytes source;
  std::uint64_t epoch = 0;
  GElem gk;
};

/// Latest transferred GK per neighbouring RSU; a higher epoch supersedes a lower one.
class NeighborGkStore {
 public:
  /// Returns false (and keeps the current entry) when the offer is not newer.
  bool offer(const Bytes& source, std::uint64_t epoch, const GElem& gk) {
    auto it = entries_.find(source);
    if (it != entries_.end() && it->second.epoch >= epoch) return false;
    entries_[source] = StoredGk{source, epoch, gk};
    return true;
  }
  const std::map<Bytes, StoredGk>& entries() const { return entries_; }

 private:
  std::map<Bytes, StoredGk> entries_;
};

// ---- vehicle side -------------------------------------------------------------------

class VehicleSession {
 public:
  VehicleSession(SystemParams sp, ta::NodeCredentials creds, ta::VehicleEpoch epoch)
      : sp_(std::move(sp)), creds_(std::move(creds)), epoch_(std::move(epoch)) {}

  void on_beacon(const msg::Beacon& b) {
    require(State::Idle, "beacon");
    verify_beacon(sp_, b);
    pk_rsu_ = b.pk_rsu;
    state_ = State::BeaconVerified;
  }

  /// Meg2. Without a neighbour GK the E_GKprev(FID) field is random filler of the same length.
  msg::Hello make_hello(const std::optional<GElem>& neighbor_gk, std::uint64_t now_ms, Rng& rng,
                        std::optional<Scalar> n1 = {}) {
    require(State::BeaconVerified, "make_hello");
    n1_ = n1 ? *n1 : crypto::random_scalar(sp_, rng);
    keys_ = n1_keys(sp_, n1_);

    msg::Hello h;
    h.pk_v = epoch_.pk_v;
    h.ts_ms = now_ms;
    h.gk_fid_ct = neighbor_gk ? crypto::sym_encrypt(gk_fid_key(sp_, *neighbor_gk), epoch_.fid, rng)
                              : rng.bytes(crypto::kNonceWidth + kPseudonymWidth);
    const auto u = crypto::random_scalar(sp_, rng);
    h.kem_ephemeral = crypto::g_pow(sp_, u);
    const auto kem_key = crypto::kdf(sp_, crypto::g_exp(sp_, pk_rsu_, u), "meg2-kem");
    ByteWriter w;
    w.raw(epoch_.fid);
    put(w, sp_, n1_);
    h.kem_ct = crypto::sym_encrypt(kem_key, w.bytes(), rng);
    h.mac = crypto::hmac(keys_.mac, auth_input(sp_, h));
    state_ = State::HelloSent;
    return h;
  }

  /// Meg3 -> Meg4.
  msg::Confirm on_challenge(const msg::Challenge& m, Rng& rng, std::optional<Scalar> beta = {}) {
    require(State::HelloSent, "challenge");
    const auto body = decode_challenge_body(sp_, open(sp_, keys_, m));
    beta_ = beta ? *beta : crypto::random_scalar(sp_, rng);
    ConfirmBody c;
    c.fid = epoch_.fid;
    c.t_v = crypto::g1_scale(sp_, beta_, crypto::g1_generator());
    c.n1_q_v = crypto::g1_scale(sp_, n1_, creds_.q_u);
    c.k_v = k_vehicle(sp_, beta_, n1_, body.n1_q_rsu, creds_.s_u, body.t_rsu);
    k_v_ = c.k_v;
    state_ = State::Confirmed;
    return seal<msg::Confirm>(sp_, keys_, encode_body(sp_, c), rng);
  }

  void on_fast_path_ack(const msg::FastPathAck& m) {
    require(State::HelloSent, "fast-path ack");
    auto body = open(sp_, keys_, m);
    if (body.size() != kPseudonymWidth || !std::equal(body.begin(), body.end(), epoch_.fid.begin()))
      throw Error(Errc::MacFail, "fast-path ack for another pseudonym");
    state_ = State::FastPathDone;
  }

  State state() const { return state_; }
  const Pseudonym& fid() const { return epoch_.fid; }
  const ta::VehicleEpoch& epoch() const { return epoch_; }
  const ta::NodeCredentials& credentials() const { return creds_; }
  const Scalar& n1() const { return n1_; }
  const ChannelKeys& keys() const { return keys_; }
  const GElem& k_v() const { return k_v_; }
  const SystemParams& params() const { return sp_; }

 private:
  void require(State s, std::string_view what) const {
    if (state_ != s)
      throw Error(Errc::InvalidState,
                  std::string(what) + " in state " + std::string(state_name(state_)));
  }

  SystemParams sp_;
  ta::NodeCredentials creds_;
  ta::VehicleEpoch epoch_;
  State state_ = State::Idle;
  GElem pk_rsu_;
  Scalar n1_, beta_;
  ChannelKeys keys_{};
  GElem k_v_;
};

// ---- RSU side -----------------------------------------------------------------------

struct RsuSession {
  Pseudonym fid{};
  GElem pk_v;
  Scalar n1;
  ChannelKeys keys{};
  Scalar alpha;
  G1Elem t_rsu;
  State state = State::Challenged;
};

struct HelloOutcome {
  Pseudonym fid{};
  bool fast_path = false;
  std::optional<msg::Challenge> challenge;
  std::optional<msg::FastPathAck> ack;
};

class RsuAuthenticator {
 public:
  RsuAuthenticator(SystemParams sp, ta::NodeCredentials creds, std::uint64_t delta_max_ms = kDefaultDeltaMaxMs)
      : sp_(std::move(sp)), creds_(std::move(creds)), delta_max_ms_(delta_max_ms) {}

  HelloOutcome process_hello(const msg::Hello& h, std::uint64_t now_ms, Rng& rng,
                             std::optional<Scalar> alpha = {}) {
    const auto dt = now_ms >= h.ts_ms ? now_ms - h.ts_ms : h.ts_ms - now_ms;
    if (dt > delta_max_ms_) throw Error(Errc::StaleTimestamp, "|CT - TS| = " + std::to_string(dt) + " ms");

    const auto kem_key = crypto::kdf(sp_, crypto::g_exp(sp_, h.kem_ephemeral, creds_.sk), "meg2-kem");
    const auto plain = crypto::sym_decrypt(kem_key, h.kem_ct);
    if (plain.size() != kPseudonymWidth + sp_.element_width) throw Error(Errc::DecryptFail, "Meg2 KEM payload size");
    RsuSession s;
    std::copy_n(plain.begin(), kPseudonymWidth, s.fid.begin());
    try {
      s.n1 = crypto::decode_scalar(sp_, ByteView(plain).subspan(kPseudonymWidth));
    } catch (const Error&) {
      throw Error(Errc::DecryptFail, "Meg2 KEM payload is not a scalar");
    }
    if (s.n1.v == 0) throw Error(Errc::DecryptFail, "N1 = 0");
    s.keys = n1_keys(sp_, s.n1);
    if (!mac_valid(sp_, s.keys.mac, h)) throw Error(Errc::MacFail, "Meg2 HMAC_N1");
    s.pk_v = h.pk_v;

    HelloOutcome out;
    out.fid = s.fid;
    if (h.gk_fid_ct.size() == crypto::kNonceWidth + kPseudonymWidth) {
      for (const auto& [src, stored] : neighbors_.entries()) {
        auto cand = crypto::sym_decrypt(gk_fid_key(sp_, stored.gk), h.gk_fid_ct);
        if (std::equal(cand.begin(), cand.end(), s.fid.begin())) {
          out.fast_path = true;
          break;
        }
      }
    }
    if (out.fast_path) {
      s.state = State::FastPathDone;
      out.ack = seal<msg::FastPathAck>(sp_, s.keys, s.fid, rng);
    } else {
      s.alpha = alpha ? *alpha : crypto::random_scalar(sp_, rng);
      s.t_rsu = crypto::g1_scale(sp_, s.alpha, crypto::g1_generator());
      s.state = State::Challenged;
      ChallengeBody body{s.t_rsu, crypto::g1_scale(sp_, s.n1, creds_.q_u)};
      out.challenge = seal<msg::Challenge>(sp_, s.keys, encode_body(sp_, body), rng);
    }
    sessions_[s.fid] = std::move(s);
    return out;
  }

  /// Key confirmation. Returns the confirmed pseudonym; throws KeyConfirmFail (session dropped) or MacFail.
  Pseudonym verify_confirm(const msg::Confirm& m) {
    RsuSession* s = nullptr;
    for (auto& [fid, cand] : sessions_)
      if (cand.state == State::Challenged && mac_valid(sp_, cand.keys.mac, m)) {
        s = &cand;
        break;
      }
    if (s == nullptr) throw Error(Errc::MacFail, "Meg4 matches no pending challenge");
    const auto body = decode_confirm_body(sp_, crypto::sym_decrypt(s->keys.enc, m.ct));
    if (body.fid != s->fid) throw Error(Errc::MacFail, "Meg4 pseudonym differs from Meg2");
    const auto k = k_rsu(sp_, s->alpha, s->n1, body.n1_q_v, creds_.s_u, body.t_v);
    if (k != body.k_v) {
      s->state = State::Failed;
      throw Error(Errc::KeyConfirmFail, "K_RSU != K_V");
    }
    s->state = State::Confirmed;
    return s->fid;
  }

  const RsuSession& session(const Pseudonym& fid) const {
    auto it = sessions_.find(fid);
    if (it == sessions_.end()) throw Error(Errc::UnknownFid, "no session for pseudonym");
    return it->second;
  }
  const RsuSession* find_session(const Pseudonym& fid) const {
    auto it = sessions_.find(fid);
    return it == sessions_.end() ? nullptr : &it->second;
  }
  const std::map<Pseudonym, RsuSession>& sessions() const { return sessions_; }
  void drop_session(const Pseudonym& fid) { sessions_.erase(fid); }

  NeighborGkStore& neighbors() { return neighbors_; }
  const NeighborGkStore& neighbors() const { return neighbors_; }
  const ta::NodeCredentials& credentials() const { return creds_; }
  const SystemParams& params() const { return sp_; }
  std::uint64_t delta_max_ms() const { return delta_max_ms_; }

 private:
  SystemParams sp_;
  ta::NodeCredentials creds_;
  std::uint64_t delta_max_ms_;
  NeighborGkStore neighbors_;
  std::map<Pseudonym, RsuSession> sessions_;
};

}  // namespace vgka::auth
