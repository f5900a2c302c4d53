#include <gtest/gtest.h>

#include <map>

#include "vgka/vgka.hpp"

using namespace vgka;
using crypto::ChannelKeys;
using crypto::GElem;
using crypto::Profile;
using crypto::Scalar;
using crypto::SystemParams;

namespace {

Scalar sc(long v) { return Scalar{mpz_class(v)}; }
GElem ge(long v) { return GElem{mpz_class(v)}; }

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

/// RSU group plus vehicle-side members kept in sync through Pag2/Pag3.
struct Group {
  SystemParams sp;
  Rng rng;
  group::RsuGroup rsu;
  std::vector<group::GroupMember> members;

  Group(Profile profile, std::uint64_t seed) : sp(crypto::profile_params(profile)), rng(seed), rsu(sp) {}

  group::GroupMember& join(std::optional<Scalar> lambda = {}, std::optional<Scalar> gamma = {}) {
    Pseudonym fid{};
    rng.fill(fid);
    ChannelKeys keys{};
    rng.fill(keys.enc);
    rng.fill(keys.mac);
    const auto l = lambda ? *lambda : crypto::random_scalar(sp, rng);
    const auto out = rsu.handle_join(group::Offer{fid, crypto::g_pow(sp, l), keys}, rng, gamma);
    members.emplace_back(sp, fid, l, keys);
    for (auto& m : members) m.member_derive(out.pag2.at(m.fid()));
    return members.back();
  }
};

}  // namespace

TEST(GroupComm, BroadcastRoundTripAmongMembers) {
  Group g(Profile::Test64, 1);
  for (int i = 0; i < 3; ++i) g.join();
  const auto payload = g.rng.bytes(200);
  const auto m = comm::broadcast(g.members[0], payload, g.rng);
  for (const auto& member : g.members) {
    const auto got = comm::receive_broadcast(g.sp, member.gk(), m);
    EXPECT_EQ(got.sender, g.members[0].fid());
    EXPECT_EQ(got.payload, payload);
  }
  EXPECT_EQ(encode_message(g.sp, m).size(), 1 + 4 + crypto::kNonceWidth + kPseudonymWidth + 4 + 200 + kMacWidth);
  EXPECT_EQ(measure_overhead(m), 58u);
}

TEST(GroupComm, DepartedMemberCannotAuthenticateLaterBroadcasts) {
  Group g(Profile::Test64, 2);
  for (int i = 0; i < 4; ++i) g.join();
  int accepted = 0;
  for (int round = 0; round < 20; ++round) {
    const auto leaver = g.members.front();
    g.members.erase(g.members.begin());
    const auto bm1 = g.rsu.handle_leave(leaver.fid(), g.rng);
    for (auto& m : g.members) m.member_derive_from_bm1(*bm1);
    const auto msg = comm::broadcast(g.members[0], to_bytes("after leave"), g.rng);
    if (error_code([&] { comm::receive_broadcast(g.sp, leaver.gk(), msg); }) != Errc::MacFail) ++accepted;
    g.join();
  }
  EXPECT_EQ(accepted, 0);
}

TEST(GroupComm, ToRsuUsesPerVehicleChannel) {
  Rng rng(3);
  auto ta = ta::ta_init(Profile::Test64, rng);
  const auto reg = ta::register_rsu(ta, to_bytes("RSU-A"), {0, 0}, rng);
  auth::RsuAuthenticator rsu(ta.params, reg.creds);
  std::vector<auth::VehicleSession> cars;
  for (int i = 0; i < 2; ++i) {
    const auto creds = ta::register_vehicle(ta, to_bytes("CAR-" + std::to_string(i)));
    cars.emplace_back(ta.params, creds, ta::refresh_vehicle_epoch(creds, ta.params, rng));
    cars.back().on_beacon(reg.beacon);
    const auto out = rsu.process_hello(cars.back().make_hello(std::nullopt, 0, rng), 0, rng);
    rsu.verify_confirm(cars.back().on_challenge(*out.challenge, rng));
  }
  const auto payload = rng.bytes(200);
  const auto m = comm::to_rsu(ta.params, cars[0].fid(), cars[0].keys(), payload, rng);
  EXPECT_EQ(comm::receive_to_rsu(rsu, m), payload);
  EXPECT_EQ(measure_overhead(m), 58u);
  EXPECT_EQ(error_code([&] { open(ta.params, cars[1].keys(), m); }), Errc::MacFail);
  auto spoofed = m;
  spoofed.fid = cars[1].fid();
  EXPECT_EQ(error_code([&] { comm::receive_to_rsu(rsu, spoofed); }), Errc::MacFail);
}

TEST(GroupComm, DirectoryServesCurrentMembers) {
  Group g(Profile::Test64, 4);
  for (int i = 0; i < 5; ++i) g.join();
  const auto req = comm::request_directory(g.members[2], g.rng);
  EXPECT_EQ(measure_overhead(req), 58u);
  Pseudonym who{};
  const auto w2 = comm::rsu_serve_directory(g.rsu, req, g.rng, &who);
  EXPECT_EQ(who, g.members[2].fid());
  for (const auto& m : g.members) {
    const auto dir = comm::read_directory(g.sp, m.gk(), w2);
    EXPECT_EQ(dir.entries.size(), 5u);
    EXPECT_EQ(dir.epoch, g.rsu.epoch());
  }
  const GElem outsider = crypto::g_mul(g.sp, g.members[0].gk(), g.sp.g);
  EXPECT_EQ(error_code([&] { comm::read_directory(g.sp, outsider, w2); }), Errc::MacFail);

  Group other(Profile::Test64, 40);
  auto& foreign = other.join();
  const auto foreign_req = comm::request_directory(foreign, other.rng);
  EXPECT_EQ(error_code([&] { comm::rsu_serve_directory(g.rsu, foreign_req, g.rng); }), Errc::MacFail);
}

TEST(GroupComm, RequestConstantIsChecked) {
  Group g(Profile::Test64, 5);
  g.join();
  ByteWriter w;
  w.raw(Bytes(8, 'X')).raw(g.members[0].fid());
  const auto bad = seal<msg::Word1>(g.sp, group::gk_keys(g.sp, g.members[0].gk()), w.bytes(), g.rng);
  EXPECT_EQ(error_code([&] { comm::rsu_serve_directory(g.rsu, bad, g.rng); }), Errc::Decode);
}

TEST(GroupComm, VvkVector) {
  const auto sp = crypto::profile_params(Profile::Test);
  const auto share_j = group::ShareEntry{crypto::g_pow(sp, sc(10)), Pseudonym{}};
  const auto share_i = group::ShareEntry{crypto::g_pow(sp, sc(6)), Pseudonym{}};
  EXPECT_EQ(comm::derive_vvk(sp, sc(3), share_j, 1).vvk, ge(3));
  EXPECT_EQ(comm::derive_vvk(sp, sc(5), share_i, 1).vvk, ge(3));
  const auto share_k = group::ShareEntry{crypto::g_pow(sp, sc(14)), Pseudonym{}};
  EXPECT_NE(comm::derive_vvk(sp, sc(3), share_k, 1).vvk, ge(3));
}

TEST(GroupComm, VvkIsSymmetricExhaustively) {
  const auto sp = crypto::profile_params(Profile::Test);
  for (long li = 1; li < 11; ++li)
    for (long lj = 1; lj < 11; ++lj)
      for (long gamma = 1; gamma < 11; ++gamma) {
        const auto a = crypto::g_exp(sp, crypto::g_pow(sp, sc(lj * gamma)), sc(li));
        const auto b = crypto::g_exp(sp, crypto::g_pow(sp, sc(li * gamma)), sc(lj));
        ASSERT_EQ(a, b);
      }
}

TEST(GroupComm, PeerMessagingRoundTrip) {
  Group g(Profile::Test64, 6);
  for (int i = 0; i < 3; ++i) g.join();
  auto& a = g.members[0];
  auto& b = g.members[1];
  auto& c = g.members[2];
  const auto w2 = comm::rsu_serve_directory(g.rsu, comm::request_directory(a, g.rng), g.rng);
  const auto dir = comm::read_directory(g.sp, a.gk(), w2);
  const auto ab = comm::derive_vvk(a, dir, b.fid());
  const auto ba = comm::derive_vvk(b, dir, a.fid());
  EXPECT_EQ(ab.vvk, ba.vvk);
  EXPECT_NE(comm::derive_vvk(c, dir, a.fid()).vvk, ab.vvk);

  const auto payload = g.rng.bytes(200);
  const auto w3 = comm::send_peer(g.sp, ab, a.gk(), a.fid(), payload, g.rng);
  EXPECT_EQ(comm::recv_peer(g.sp, ba, b.gk(), b.fid(), w3), payload);

  const auto ca = comm::derive_vvk(c, dir, a.fid());
  EXPECT_EQ(error_code([&] { comm::recv_peer(g.sp, ca, c.gk(), c.fid(), w3); }), Errc::UnknownFid);
  EXPECT_EQ(error_code([&] { comm::recv_peer(g.sp, ca, c.gk(), b.fid(), w3); }), Errc::MacFail);
  auto stale = ba;
  stale.epoch -= 1;
  EXPECT_EQ(error_code([&] { comm::recv_peer(g.sp, stale, b.gk(), b.fid(), w3); }), Errc::EpochMismatch);
}

TEST(GroupComm, GroupKeyAloneCannotForgePeerTraffic) {
  Group g(Profile::Test64, 7);
  for (int i = 0; i < 3; ++i) g.join();
  const auto& a = g.members[0];
  const auto& b = g.members[1];
  const auto dir = comm::Directory{g.rsu.epoch(), g.rsu.directory()};
  const auto ba = comm::derive_vvk(b, dir, a.fid());
  int forged = 0;
  for (int i = 0; i < 200; ++i) {
    // Holder of gk only: guesses a VVK and builds a well-formed envelope from a's identity.
    comm::VvkChannel guess{b.fid(), crypto::g_pow(g.sp, crypto::random_scalar(g.sp, g.rng)), dir.epoch};
    if (guess.vvk == ba.vvk) continue;
    const auto w3 = comm::send_peer(g.sp, guess, a.gk(), a.fid(), to_bytes("forged"), g.rng);
    if (error_code([&] { comm::recv_peer(g.sp, ba, b.gk(), b.fid(), w3); }) != Errc::MacFail) ++forged;
  }
  EXPECT_EQ(forged, 0);
}

TEST(GroupComm, OverheadIsLinear) {
  Group g(Profile::Test64, 8);
  g.join();
  std::size_t total = 0;
  for (int i = 1; i <= 50; ++i) {
    total += measure_overhead(comm::broadcast(g.members[0], g.rng.bytes(i), g.rng));
    ASSERT_EQ(total, 58u * static_cast<std::size_t>(i));
  }
}
