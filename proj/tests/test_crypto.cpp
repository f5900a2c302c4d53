#include <gtest/gtest.h>

#include <array>
#include <set>

#include "vgka/vgka.hpp"

using namespace vgka;
using namespace vgka::crypto;

namespace {

const SystemParams& tiny() {
  static const SystemParams sp = profile_params(Profile::Test);
  return sp;
}

GElem ge(long v) { return GElem{mpz_class(v)}; }
Scalar sc(long v) { return Scalar{mpz_class(v)}; }
G1Elem g1(long v) { return G1Elem{mpz_class(v)}; }

}  // namespace

TEST(Group, FoldVectors) {
  const auto& sp = tiny();
  EXPECT_EQ(fold(sp, 9), ge(9));
  EXPECT_EQ(fold(sp, 16), ge(7));
  EXPECT_EQ(fold(sp, 22), ge(1));
  EXPECT_THROW(fold(sp, 0), Error);
  EXPECT_THROW(fold(sp, 23), Error);
}

TEST(Group, ExpAndMulVectors) {
  const auto& sp = tiny();
  EXPECT_EQ(g_exp(sp, ge(2), sc(4)), ge(7));
  EXPECT_EQ(g_exp(sp, ge(2), sc(12)), ge(2));
  for (long a = 1; a <= 11; ++a) EXPECT_EQ(g_exp(sp, ge(a), sc(0)), ge(1));
  EXPECT_EQ(g_mul(sp, ge(4), ge(9)), ge(10));
  EXPECT_EQ(g_mul(sp, ge(11), ge(5)), ge(9));
}

TEST(Group, PairingVectors) {
  const auto& sp = tiny();
  EXPECT_EQ(pair(sp, g1(1), g1(1)), ge(2));
  EXPECT_EQ(pair(sp, g1(3), g1(4)), ge(2));
  for (long b = 0; b < 11; ++b) EXPECT_EQ(pair(sp, g1(0), g1(b)), ge(1));
  EXPECT_NE(pair(sp, g1(1), g1(1)), g_identity());
}

TEST(Group, ExhaustiveClosureAndLaws) {
  const auto& sp = tiny();
  for (long a = 1; a <= 11; ++a) {
    for (long b = 1; b <= 11; ++b) {
      const auto ab = g_mul(sp, ge(a), ge(b));
      ASSERT_TRUE(in_group(sp, ab));
      ASSERT_EQ(ab, g_mul(sp, ge(b), ge(a)));
      for (long c = 1; c <= 11; ++c)
        ASSERT_EQ(g_mul(sp, ab, ge(c)), g_mul(sp, ge(a), g_mul(sp, ge(b), ge(c))));
    }
    for (long s = 0; s < 11; ++s) {
      const auto as = g_exp(sp, ge(a), sc(s));
      ASSERT_TRUE(in_group(sp, as));
      for (long t = 0; t < 11; ++t) ASSERT_EQ(g_exp(sp, as, sc(t)), g_exp(sp, ge(a), sc(s * t % 11)));
    }
  }
}

TEST(Group, GroupHasExactlyQElements) {
  const auto& sp = tiny();
  std::set<long> seen;
  for (long s = 0; s < 11; ++s) seen.insert(g_pow(sp, sc(s)).v.get_si());
  EXPECT_EQ(seen.size(), 11u);
}

TEST(Pairing, ExhaustiveBilinearity) {
  const auto& sp = tiny();
  const auto base = pair(sp, g1(1), g1(1));
  for (long x = 0; x < 11; ++x)
    for (long y = 0; y < 11; ++y) ASSERT_EQ(pair(sp, g1(x), g1(y)), g_exp(sp, base, sc(x * y)));
}

TEST(Pairing, RandomizedBilinearityAtDefaultSize) {
  const auto sp = profile_params(Profile::Default);
  Rng rng(11);
  const auto base = pair(sp, g1_generator(), g1_generator());
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_scalar(sp, rng), y = random_scalar(sp, rng);
    ASSERT_EQ(pair(sp, g1_scale(sp, x, g1_generator()), g1_scale(sp, y, g1_generator())),
              g_exp(sp, base, sc_mul(sp, x, y)));
  }
}

TEST(Params, ProfilesValidate) {
  for (auto p : {Profile::Test, Profile::Test64, Profile::Default}) EXPECT_NO_THROW(validate(profile_params(p)));
  EXPECT_EQ(profile_params(Profile::Test).element_width, 1u);
  EXPECT_EQ(profile_params(Profile::Default).element_width, 33u);
}

TEST(Params, RejectsBadGroups) {
  EXPECT_THROW(make_params(12, 2), Error);
  EXPECT_THROW(make_params(13, 2), Error);  // 27 is composite
  EXPECT_THROW(make_params(11, 1), Error);
}

TEST(Params, JsonRoundTrip) {
  auto sp = profile_params(Profile::Test64);
  const auto back = params_from_json(nlohmann::json::parse(to_json(sp).dump()));
  EXPECT_EQ(back.p, sp.p);
  EXPECT_EQ(back.q, sp.q);
  EXPECT_EQ(back.g, sp.g);
  EXPECT_EQ(back.element_width, sp.element_width);
  EXPECT_TRUE(to_json(sp)["q"].is_string());
  EXPECT_THROW(params_from_json(nlohmann::json{{"p", "23"}}), Error);
}

TEST(Params, GeneratedSafePrime) {
  Rng rng(5);
  const auto sp = generate_params(32, rng);
  EXPECT_EQ(sp.p, 2 * sp.q + 1);
  EXPECT_EQ(mpz_sizeinbase(sp.q.get_mpz_t(), 2), 32u);
}

TEST(Serialization, FixedWidthRoundTrip) {
  const auto sp = profile_params(Profile::Default);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_scalar(sp, rng);
    const auto e = g_pow(sp, s);
    ASSERT_EQ(encode(sp, e).size(), sp.element_width);
    ASSERT_EQ(decode_g(sp, encode(sp, e)), e);
    ASSERT_EQ(decode_scalar(sp, encode(sp, s)), s);
  }
  const auto& t = tiny();
  EXPECT_THROW(decode_g(t, Bytes{0}), Error);
  EXPECT_THROW(decode_g(t, Bytes{12}), Error);
  EXPECT_THROW(decode_g1(t, Bytes{11}), Error);
}

TEST(Hash, HashToG1IsUniformOnTestGroup) {
  const auto& sp = tiny();
  std::array<int, 11> counts{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto h = hash_to_g1(sp, to_bytes("input-" + std::to_string(i)));
    ASSERT_GE(h.v, 1);
    ASSERT_LE(h.v, 10);
    ++counts[h.v.get_si()];
  }
  const double expected = n / 10.0;
  double chi2 = 0;
  for (int v = 1; v <= 10; ++v) chi2 += (counts[v] - expected) * (counts[v] - expected) / expected;
  EXPECT_LT(chi2, 27.88);  // df = 9, p = 0.001
}

TEST(Hash, MaskHashBitsAreBalanced) {
  const auto sp = profile_params(Profile::Test64);
  Rng rng(9);
  long ones = 0, total = 0;
  for (int i = 0; i < 2000; ++i) {
    for (auto b : mask_hash(sp, g_pow(sp, random_scalar(sp, rng)), 42)) {
      ones += __builtin_popcount(b);
      total += 8;
    }
  }
  const double frac = static_cast<double>(ones) / total;
  EXPECT_NEAR(frac, 0.5, 0.005);
}

TEST(Hash, KdfHasNoCollisions) {
  const auto sp = profile_params(Profile::Test64);
  std::set<SymKey> keys;
  for (long i = 1; i <= 10000; ++i) keys.insert(kdf(sp, GElem{mpz_class(i)}, "ctx"));
  EXPECT_EQ(keys.size(), 10000u);
  EXPECT_NE(kdf(sp, ge(4), "a"), kdf(sp, ge(4), "b"));
  EXPECT_NE(kdf(sp, ge(4), "a"), kdf(sp, sc(4), "a"));
}

TEST(Hash, Deterministic) {
  const auto sp = profile_params(Profile::Default);
  EXPECT_EQ(hash_to_scalar(sp, to_bytes("x")), hash_to_scalar(sp, to_bytes("x")));
  EXPECT_NE(hash_to_scalar(sp, to_bytes("x")), hash_to_scalar(sp, to_bytes("y")));
  EXPECT_EQ(sha256(Bytes{}).size(), 32u);
  EXPECT_EQ(to_hex(sha256(to_bytes("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Symmetric, RoundTrip) {
  Rng rng(1);
  SymKey k{};
  rng.fill(k);
  for (std::size_t len : {0u, 1u, 16u, 200u, 1000u}) {
    const auto pt = rng.bytes(len);
    const auto ct = sym_encrypt(k, pt, rng);
    ASSERT_EQ(ct.size(), len + kNonceWidth);
    ASSERT_EQ(sym_decrypt(k, ct), pt);
  }
  EXPECT_THROW(sym_decrypt(k, Bytes(5)), Error);
}

TEST(Symmetric, FreshNoncesGiveDistinctCiphertexts) {
  Rng rng(2);
  SymKey k{};
  const auto pt = to_bytes("same plaintext");
  EXPECT_NE(sym_encrypt(k, pt, rng), sym_encrypt(k, pt, rng));
}

TEST(Symmetric, HmacIsDeterministicAndDetectsEveryBitFlip) {
  Rng rng(4);
  SymKey k{};
  rng.fill(k);
  const auto msg = rng.bytes(125);
  const auto tag = hmac(k, msg);
  EXPECT_TRUE(mac_equal(tag, hmac(k, msg)));
  for (int i = 0; i < 1000; ++i) {
    auto m = msg;
    m[i % m.size()] ^= static_cast<std::uint8_t>(1u << ((i / m.size()) % 8));
    ASSERT_FALSE(mac_equal(tag, hmac(k, m)));
  }
}

TEST(Symmetric, HmacMatchesKnownAnswer) {
  // RFC 4231 case 2 uses a 4-byte key; zero padding to 32 bytes is the same HMAC key.
  SymKey k{};
  const auto key = to_bytes("Jefe");
  std::copy(key.begin(), key.end(), k.begin());
  EXPECT_EQ(to_hex(hmac_sha256(k, to_bytes("what do ya want for nothing?"))),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Schnorr, SignVerify) {
  const auto sp = profile_params(Profile::Test64);
  Rng rng(8);
  const auto sk = random_scalar(sp, rng);
  const auto pk = g_pow(sp, sk);
  const auto msg = to_bytes("beacon");
  const auto sig = schnorr_sign(sp, sk, msg, rng);
  EXPECT_TRUE(schnorr_verify(sp, pk, msg, sig));
  EXPECT_FALSE(schnorr_verify(sp, pk, to_bytes("beacoN"), sig));
  EXPECT_FALSE(schnorr_verify(sp, g_pow(sp, sc_add(sp, sk, sc(1))), msg, sig));
}

TEST(Rng, DerivedStreamsAreReproducible) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.below(1000), b.below(1000));
}
