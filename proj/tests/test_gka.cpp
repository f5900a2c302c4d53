#include <gtest/gtest.h>

#include <cstdio>

#include "vgka/vgka.hpp"

using namespace vgka;
using crypto::GElem;
using crypto::Profile;
using crypto::Scalar;
using crypto::SystemParams;

namespace {

Scalar sc(long v) { return Scalar{mpz_class(v)}; }
GElem ge(long v) { return GElem{mpz_class(v)}; }

struct Ring {
  std::vector<gka::Member> roster;
  std::vector<Scalar> secrets;
};

Ring make_ring(const SystemParams& sp, std::size_t n, Rng& rng) {
  Ring r;
  for (std::size_t k = 0; k < n; ++k) {
    char tid[16];
    std::snprintf(tid, sizeof tid, "RSU-%02zu", k);
    r.secrets.push_back(crypto::random_scalar(sp, rng));
    r.roster.push_back({to_bytes(tid), crypto::g_pow(sp, r.secrets.back())});
  }
  return r;
}

std::vector<gka::GkaSession> sessions(const SystemParams& sp, const Ring& r) {
  std::vector<gka::GkaSession> out;
  for (std::size_t k = 0; k < r.roster.size(); ++k) out.emplace_back(sp, r.roster, r.roster[k].tid, r.secrets[k]);
  return out;
}

/// g^(x_1 x_2 + ... + x_n x_1), evaluated in the exponent.
GElem closed_form(const SystemParams& sp, const std::vector<Scalar>& x) {
  Scalar e{0};
  for (std::size_t i = 0; i < x.size(); ++i) e = crypto::sc_add(sp, e, crypto::sc_mul(sp, x[i], x[(i + 1) % x.size()]));
  return crypto::g_pow(sp, e);
}

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

}  // namespace

TEST(Gka, ThreeMemberVector) {
  const auto sp = crypto::profile_params(Profile::Test);
  Rng rng(1);
  const auto ring = make_ring(sp, 3, rng);
  auto ss = sessions(sp, ring);
  const std::vector<Scalar> x{sc(2), sc(3), sc(4)};
  std::vector<msg::GkaRound1> m1;
  for (std::size_t k = 0; k < 3; ++k)
    m1.push_back(ss[k].round1(x[k], crypto::random_scalar(sp, rng), crypto::random_scalar(sp, rng), rng));
  EXPECT_EQ(m1[0].x, ge(4));
  EXPECT_EQ(m1[1].x, ge(8));
  EXPECT_EQ(m1[2].x, ge(7));

  std::vector<msg::GkaRound2> m2;
  for (auto& s : ss) m2.push_back(s.round2(m1, rng));
  EXPECT_EQ(ss[0].y_left(), ge(3));
  EXPECT_EQ(ss[0].y_right(), ge(5));
  EXPECT_EQ(m2[0].y, ge(6));

  for (auto& s : ss) EXPECT_EQ(s.finalize(m2), ge(7));
  for (auto& s : ss) EXPECT_EQ(s.phase(), gka::Phase::Keyed);
}

TEST(Gka, Round1CommitsToEphemerals) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(2);
  const auto ring = make_ring(sp, 2, rng);
  auto a = sessions(sp, ring), b = sessions(sp, ring);
  Rng r1(10), r2(11);
  const auto m = a[0].round1(r1);
  const auto other = b[0].round1(r2);
  EXPECT_NE(m.x, other.x);
  EXPECT_NE(m.r, other.r);
  EXPECT_NE(m.t, other.t);
  EXPECT_TRUE(crypto::schnorr_verify(sp, ring.roster[0].pk, auth_input(sp, m), m.sig));
  EXPECT_EQ(error_code([&] { a[0].round1(r1); }), Errc::InvalidState);
}

TEST(Gka, TokenVector) {
  const auto sp = crypto::profile_params(Profile::Test);
  EXPECT_EQ(crypto::g_exp(sp, crypto::g_pow(sp, sc(3)), sc(5)), ge(7));
}

TEST(Gka, SchnorrResponseVector) {
  const auto sp = crypto::profile_params(Profile::Test);
  const auto s = crypto::sc_sub(sp, sc(5), crypto::sc_mul(sp, sc(3), sc(2)));
  EXPECT_EQ(s, sc(10));
  EXPECT_EQ(crypto::g_pow(sp, s), ge(11));
  EXPECT_EQ(crypto::g_exp(sp, crypto::g_pow(sp, sc(2)), sc(3)), ge(5));
  EXPECT_EQ(crypto::g_mul(sp, ge(11), ge(5)), crypto::g_pow(sp, sc(5)));
}

TEST(Gka, AgreementMatchesClosedForm) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(4);
  for (std::size_t n = 2; n <= 8; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto ring = make_ring(sp, n, rng);
      auto ss = sessions(sp, ring);
      std::vector<Scalar> x;
      std::vector<msg::GkaRound1> m1;
      for (auto& s : ss) {
        x.push_back(crypto::random_scalar(sp, rng));
        m1.push_back(s.round1(x.back(), crypto::random_scalar(sp, rng), crypto::random_scalar(sp, rng), rng));
      }
      std::vector<msg::GkaRound2> m2;
      for (auto& s : ss) m2.push_back(s.round2(m1, rng));
      GElem ring_product = crypto::g_identity();
      for (const auto& m : m2) ring_product = crypto::g_mul(sp, ring_product, m.y);
      ASSERT_EQ(ring_product, crypto::g_identity());
      if (n == 2) {
        ASSERT_EQ(m2[0].y, crypto::g_identity());
        ASSERT_EQ(m2[1].y, crypto::g_identity());
      }
      const auto expected = closed_form(sp, x);
      for (std::size_t k = 0; k < n; ++k) {
        ASSERT_EQ(ss[k].finalize(m2), expected) << "n=" << n << " member " << k;
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(ss[k].chain()[i], ss[(i + 1) % n].y_left());
        ASSERT_EQ(ss[k].v_hat(k), ss[k].v());
      }
    }
  }
}

TEST(Gka, TokensAreSymmetric) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = crypto::random_scalar(sp, rng), t = crypto::random_scalar(sp, rng);
    ASSERT_EQ(crypto::g_exp(sp, crypto::g_pow(sp, t), r), crypto::g_exp(sp, crypto::g_pow(sp, r), t));
  }
}

TEST(Gka, ReplacedRingValueBreaksChain) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(6);
  int chain_breaks = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + trial % 4;
    const auto ring = make_ring(sp, n, rng);
    auto ss = sessions(sp, ring);
    std::vector<msg::GkaRound1> m1;
    for (auto& s : ss) m1.push_back(s.round1(rng));
    std::vector<msg::GkaRound2> m2;
    for (auto& s : ss) m2.push_back(s.round2(m1, rng));
    const std::size_t bad = static_cast<std::size_t>(trial) % n;
    auto& idx_msg = m2[ss[bad].self_index()];
    const auto old = idx_msg.y;
    do idx_msg.y = crypto::g_pow(sp, crypto::random_scalar(sp, rng));
    while (idx_msg.y == old);
    idx_msg.sig = crypto::schnorr_sign(sp, ring.secrets[bad], auth_input(sp, idx_msg), rng);
    const std::size_t victim = (bad + 1) % n;
    if (error_code([&] { ss[victim].finalize(m2); }) == Errc::ChainBreak) ++chain_breaks;
    EXPECT_NE(ss[victim].phase(), gka::Phase::Keyed);
  }
  EXPECT_EQ(chain_breaks, 100);
}

TEST(Gka, AnyTamperedFieldAborts) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(7);
  int silent = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto ring = make_ring(sp, 4, rng);
    auto ss = sessions(sp, ring);
    std::vector<msg::GkaRound1> m1;
    for (auto& s : ss) m1.push_back(s.round1(rng));
    std::vector<msg::GkaRound2> m2;
    for (auto& s : ss) m2.push_back(s.round2(m1, rng));
    // The victim is member 0; tamper with a message from member 1..3, optionally re-signed by its sender.
    const std::size_t sender = 1 + trial % 3;
    auto& m = m2[sender];
    const bool resign = trial % 2 == 0;
    const auto bump = [&](GElem& e) { e = crypto::g_mul(sp, e, sp.g); };
    switch ((trial / 2) % 3) {
      case 0: bump(m.y); break;
      case 1: m.s = crypto::sc_add(sp, m.s, sc(1)); break;
      case 2: bump(m.tokens[0]); break;
    }
    if (resign) m.sig = crypto::schnorr_sign(sp, ring.secrets[sender], auth_input(sp, m), rng);
    bool threw = false;
    try {
      ss[0].finalize(m2);
    } catch (const Error&) {
      threw = true;
    }
    if (!threw) ++silent;
  }
  EXPECT_EQ(silent, 0);
}

TEST(Gka, RosterAndMessageValidation) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(8);
  const auto ring = make_ring(sp, 3, rng);
  EXPECT_EQ(error_code([&] { gka::GkaSession(sp, {ring.roster[0]}, ring.roster[0].tid, ring.secrets[0]); }),
            Errc::InvalidArgument);
  EXPECT_EQ(error_code([&] { gka::GkaSession(sp, ring.roster, to_bytes("nobody"), ring.secrets[0]); }),
            Errc::UnknownTid);
  EXPECT_EQ(error_code([&] { gka::GkaSession(sp, ring.roster, ring.roster[0].tid, ring.secrets[1]); }),
            Errc::InvalidArgument);

  auto ss = sessions(sp, ring);
  std::vector<msg::GkaRound1> m1;
  for (auto& s : ss) m1.push_back(s.round1(rng));
  EXPECT_EQ(error_code([&] { ss[0].finalize({}); }), Errc::InvalidState);
  std::vector<msg::GkaRound1> missing{m1[0], m1[1]};
  EXPECT_EQ(error_code([&] { ss[0].round2(missing, rng); }), Errc::MissingMessage);
  std::vector<msg::GkaRound1> dup{m1[0], m1[1], m1[1], m1[2]};
  EXPECT_EQ(error_code([&] { ss[0].round2(dup, rng); }), Errc::DuplicateMessage);
  auto forged = m1;
  forged[2].x = crypto::g_mul(sp, forged[2].x, sp.g);
  EXPECT_EQ(error_code([&] { ss[0].round2(forged, rng); }), Errc::BadSignature);
  EXPECT_NO_THROW(ss[0].round2(m1, rng));
}

TEST(Gka, PidFollowsSortedRoster) {
  const auto sp = crypto::profile_params(Profile::Test64);
  Rng rng(9);
  auto ring = make_ring(sp, 3, rng);
  const gka::GkaSession a(sp, ring.roster, ring.roster[0].tid, ring.secrets[0]);
  std::reverse(ring.roster.begin(), ring.roster.end());
  const gka::GkaSession b(sp, ring.roster, ring.roster[2].tid, ring.secrets[0]);
  EXPECT_EQ(a.pid(), b.pid());
  ByteWriter w;
  for (const char* t : {"RSU-00", "RSU-01", "RSU-02"}) w.var(to_bytes(t));
  EXPECT_EQ(a.pid(), crypto::hash_to_scalar(sp, w.bytes()));
}

TEST(Gka, RunAllAgrees) {
  const auto sp = crypto::profile_params(Profile::Default);
  Rng rng(10);
  const auto ring = make_ring(sp, 5, rng);
  const auto run = gka::run_all(sp, ring.roster, ring.secrets, rng);
  ASSERT_EQ(run.keys.size(), 5u);
  for (const auto& k : run.keys) EXPECT_EQ(k, run.keys.front());
}
