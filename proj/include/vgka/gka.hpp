#pragma once

// Two-round deniable group key agreement among RSUs.
//
// Round 1: each RSU_j broadcasts signed commitments X_j = g^x_j, R_j = g^r_j, T_j = g^t_j.
// Round 2: RSU_i broadcasts Y_i = X_{i+1}^x_i / X_{i-1}^x_i, the Schnorr response
//          s_i = r_i - v_i * xi_i and deniability tokens T_{i,j} = T_j^r_i.
// Finalize: check tokens addressed to us, walk the Y chain around the ring,
//           re-check every Schnorr response, and multiply the reconstructed
//           Y^R values: sk = g^(x_1 x_2 + x_2 x_3 + ... + x_n x_1).
//
// The roster is sorted by TID; ring neighbours and pid follow that order.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vgka/codec.hpp"

namespace vgka::gka {

enum class Phase { Init, Round1Done, Round2Done, Keyed };

struct Member {
  Bytes tid;
  GElem pk;  // long-term PK_RSU
};

class GkaSession {
 public:
  GkaSession(SystemParams sp, std::vector<Member> roster, Bytes self_tid, Scalar long_term_sk)
      : sp_(std::move(sp)), roster_(std::move(roster)), sk_lt_(std::move(long_term_sk)) {
    if (roster_.size() < 2) throw Error(Errc::InvalidArgument, "key agreement needs at least 2 RSUs");
    std::sort(roster_.begin(), roster_.end(), [](const Member& a, const Member& b) { return a.tid < b.tid; });
    for (std::size_t k = 1; k < roster_.size(); ++k)
      if (roster_[k].tid == roster_[k - 1].tid)
        throw Error(Errc::InvalidArgument, "duplicate roster TID '" + to_string(roster_[k].tid) + "'");
    auto it = std::find_if(roster_.begin(), roster_.end(), [&](const Member& m) { return m.tid == self_tid; });
    if (it == roster_.end()) throw Error(Errc::UnknownTid, "self TID not in roster");
    self_ = static_cast<std::size_t>(it - roster_.begin());
    if (crypto::g_pow(sp_, sk_lt_) != roster_[self_].pk)
      throw Error(Errc::InvalidArgument, "long-term key does not match roster PK");

    ByteWriter w;
    for (const auto& m : roster_) w.var(m.tid);
    pid_ = crypto::hash_to_scalar(sp_, w.bytes());
  }

  msg::GkaRound1 round1(Rng& rng) {
    auto x = crypto::random_scalar(sp_, rng);
    auto r = crypto::random_scalar(sp_, rng);
    auto t = crypto::random_scalar(sp_, rng);
    return round1(x, r, t, rng);
  }

  /// Round 1 with caller-chosen ephemerals (test vectors).
  msg::GkaRound1 round1(const Scalar& x, const Scalar& r, const Scalar& t, Rng& rng) {
    require(Phase::Init, "round1");
    x_ = x, r_ = r, t_ = t;
    msg::GkaRound1 m;
    m.tid = self().tid;
    m.x = crypto::g_pow(sp_, x_);
    m.r = crypto::g_pow(sp_, r_);
    m.t = crypto::g_pow(sp_, t_);
    m.sig = crypto::schnorr_sign(sp_, sk_lt_, auth_input(sp_, m), rng);
    own1_ = m;
    phase_ = Phase::Round1Done;
    return m;
  }

  msg::GkaRound2 round2(std::span<const msg::GkaRound1> received, Rng& rng) {
    require(Phase::Round1Done, "round2");
    round1_ = collect(received, *own1_);
    const auto n = size();
    const auto& left = round1_[(self_ + n - 1) % n];
    const auto& right = round1_[(self_ + 1) % n];
    y_left_ = crypto::g_exp(sp_, left.x, x_);
    y_right_ = crypto::g_exp(sp_, right.x, x_);

    msg::GkaRound2 m;
    m.tid = self().tid;
    m.y = crypto::g_div(sp_, y_right_, y_left_);
    v_ = challenge(y_left_, y_right_);
    m.s = crypto::sc_sub(sp_, r_, crypto::sc_mul(sp_, v_, sk_lt_));
    for (std::size_t j = 0; j < n; ++j)
      if (j != self_) m.tokens.push_back(crypto::g_exp(sp_, round1_[j].t, r_));
    m.sig = crypto::schnorr_sign(sp_, sk_lt_, auth_input(sp_, m), rng);
    own2_ = m;
    phase_ = Phase::Round2Done;
    return m;
  }

  GElem finalize(std::span<const msg::GkaRound2> received) {
    require(Phase::Round2Done, "finalize");
    const auto round2 = collect(received, *own2_);
    const auto n = size();

    for (std::size_t i = 0; i < n; ++i) {
      if (round2[i].tokens.size() != n - 1)
        throw Error(Errc::TokenMismatch, "token count from '" + to_string(roster_[i].tid) + "'");
      if (i == self_) continue;
      const auto& token = round2[i].tokens[self_ < i ? self_ : self_ - 1];
      if (token != crypto::g_exp(sp_, round1_[i].r, t_))
        throw Error(Errc::TokenMismatch,
                    "T(" + to_string(roster_[i].tid) + ", " + to_string(self().tid) + ") != R^t");
    }

    std::vector<GElem> chain(n);
    chain[self_] = y_right_;
    for (std::size_t k = 1; k < n; ++k) {
      const auto idx = (self_ + k) % n;
      chain[idx] = crypto::g_mul(sp_, round2[idx].y, chain[(idx + n - 1) % n]);
    }
    if (chain[(self_ + n - 1) % n] != y_left_) throw Error(Errc::ChainBreak, "ring chain does not close");

    for (std::size_t i = 0; i < n; ++i) {
      const auto v_hat = challenge(chain[(i + n - 1) % n], chain[i]);
      const auto lhs = crypto::g_mul(sp_, crypto::g_pow(sp_, round2[i].s), crypto::g_exp(sp_, roster_[i].pk, v_hat));
      if (lhs != round1_[i].r) throw Error(Errc::SchnorrFail, "response of '" + to_string(roster_[i].tid) + "'");
    }

    GElem sk = crypto::g_identity();
    for (const auto& y : chain) sk = crypto::g_mul(sp_, sk, y);
    chain_ = std::move(chain);
    sk_ = sk;
    phase_ = Phase::Keyed;
    return sk;
  }

  Phase phase() const { return phase_; }
  std::size_t size() const { return roster_.size(); }
  std::size_t self_index() const { return self_; }
  const Member& self() const { return roster_[self_]; }
  const std::vector<Member>& roster() const { return roster_; }
  const Scalar& pid() const { return pid_; }
  const GElem& y_left() const { return y_left_; }
  const GElem& y_right() const { return y_right_; }
  /// v_i as computed in round 2.
  const Scalar& v() const { return v_; }
  /// Reconstructed Y^R_k for every ring position (after finalize).
  const std::vector<GElem>& chain() const { return chain_; }
  /// v-hat_i recomputed from the reconstructed chain (after finalize).
  Scalar v_hat(std::size_t i) const {
    const auto n = size();
    return challenge(chain_.at((i + n - 1) % n), chain_.at(i));
  }

  const GElem& session_key() const {
    if (!sk_) throw Error(Errc::NoSessionKey, "session not keyed");
    return *sk_;
  }

 private:
  void require(Phase p, std::string_view op) const {
    if (phase_ != p) throw Error(Errc::InvalidState, std::string(op) + " called out of order");
  }

  Scalar challenge(const GElem& yl, const GElem& yr) const {
    ByteWriter w;
    put(w, sp_, yl);
    put(w, sp_, yr);
    for (const auto& m : round1_) put(w, sp_, m.x);
    put(w, sp_, pid_);
    return crypto::hash_to_scalar(sp_, w.bytes());
  }

  /// One signed message per roster member, in roster order. Our own message may be omitted.
  template <class M>
  std::vector<M> collect(std::span<const M> received, const M& own) const {
    std::vector<std::optional<M>> slots(size());
    for (const auto& m : received) {
      auto it = std::find_if(roster_.begin(), roster_.end(), [&](const Member& r) { return r.tid == m.tid; });
      if (it == roster_.end()) throw Error(Errc::UnknownTid, "message from non-member '" + to_string(m.tid) + "'");
      const auto idx = static_cast<std::size_t>(it - roster_.begin());
      if (slots[idx]) throw Error(Errc::DuplicateMessage, "two messages from '" + to_string(m.tid) + "'");
      if (!crypto::schnorr_verify(sp_, it->pk, auth_input(sp_, m), m.sig))
        throw Error(Errc::BadSignature, "signature of '" + to_string(m.tid) + "'");
      if (idx == self_ && !(m == own)) throw Error(Errc::BadSignature, "foreign copy of own message");
      slots[idx] = m;
    }
    slots[self_] = own;
    std::vector<M> out;
    out.reserve(size());
    for (std::size_t k = 0; k < size(); ++k) {
      if (!slots[k]) throw Error(Errc::MissingMessage, "no message from '" + to_string(roster_[k].tid) + "'");
      out.push_back(std::move(*slots[k]));
    }
    return out;
  }

  SystemParams sp_;
  std::vector<Member> roster_;
  std::size_t self_ = 0;
  Scalar sk_lt_;
  Scalar pid_;
  Phase phase_ = Phase::Init;

  Scalar x_, r_, t_, v_;
  GElem y_left_, y_right_;
  std::optional<msg::GkaRound1> own1_;
  std::optional<msg::GkaRound2> own2_;
  std::vector<msg::GkaRound1> round1_;
  std::vector<GElem> chain_;
  std::optional<GElem> sk_;
};

/// Transcript of a complete honest run.
struct GkaRun {
  std::vector<msg::GkaRound1> round1;
  std::vector<msg::GkaRound2> round2;
  std::vector<GElem> keys;  // in roster order
  std::vector<Member> roster;
};

/// Drive every member of the roster through both rounds. `secrets[k]` is the
/// long-term key of `roster[k]` (any order; sessions sort internally).
inline GkaRun run_all(const SystemParams& sp, const std::vector<Member>& roster, const std::vector<Scalar>& secrets,
                      Rng& rng) {
  std::vector<GkaSession> sessions;
  for (std::size_t k = 0; k < roster.size(); ++k) sessions.emplace_back(sp, roster, roster[k].tid, secrets.at(k));
  std::sort(sessions.begin(), sessions.end(),
            [](const GkaSession& a, const GkaSession& b) { return a.self_index() < b.self_index(); });
  GkaRun run;
  run.roster = sessions.front().roster();
  for (auto& s : sessions) run.round1.push_back(s.round1(rng));
  for (auto& s : sessions) run.round2.push_back(s.round2(run.round1, rng));
  for (auto& s : sessions) run.keys.push_back(s.finalize(run.round2));
  return run;
}

}  // namespace vgka::gka
