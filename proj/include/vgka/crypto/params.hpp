#pragma once

#include <string>
#include <string_view>

#include <gmpxx.h>
#include <json.hpp>

#include "vgka/crypto/group.hpp"

namespace vgka::crypto {

/// Parameter scales. Test: p = 23 for exhaustive checks. Test64: 64-bit p for
/// randomized checks where q = 11 collisions would swamp the signal.
/// Default: 256-bit q.
enum class Profile { Test, Test64, Default };

inline Profile parse_profile(std::string_view s) {
  if (s == "test") return Profile::Test;
  if (s == "test64") return Profile::Test64;
  if (s == "default") return Profile::Default;
  throw Error(Errc::Config, "unknown profile '" + std::string(s) + "' (expected test|test64|default)");
}

inline constexpr int kPrimalityReps = 40;

inline bool is_probable_prime(const mpz_class& n) { return mpz_probab_prime_p(n.get_mpz_t(), kPrimalityReps) > 0; }

/// Throws Errc::Primality / Errc::InvalidArgument if the group description is inconsistent.
inline void validate(const SystemParams& sp) {
  if (sp.p != 2 * sp.q + 1) throw Error(Errc::InvalidArgument, "p != 2q + 1");
  if (!is_probable_prime(sp.q)) throw Error(Errc::Primality, "q is not prime");
  if (!is_probable_prime(sp.p)) throw Error(Errc::Primality, "p is not prime");
  if (sp.element_width != width_for(sp.p)) throw Error(Errc::InvalidArgument, "element_width != ceil(bitlen(p)/8)");
  for (const auto* e : {&sp.g, &sp.gt}) {
    if (!in_group(sp, *e)) throw Error(Errc::InvalidArgument, "generator outside [1, q]");
    if (e->v == 1) throw Error(Errc::InvalidArgument, "generator is the identity");
    if (g_exp(sp, *e, Scalar{sp.q}) != g_identity()) throw Error(Errc::InvalidArgument, "generator order != q");
  }
}

inline SystemParams make_params(const mpz_class& q, const mpz_class& g) {
  SystemParams sp;
  sp.q = q;
  sp.p = 2 * q + 1;
  sp.g = GElem{g};
  sp.gt = GElem{g};
  sp.element_width = width_for(sp.p);
  validate(sp);
  return sp;
}

inline SystemParams profile_params(Profile profile) {
  switch (profile) {
    case Profile::Test:
      return make_params(11, 2);
    case Profile::Test64:
      return make_params(mpz_class("7486034836602509669"), 4);
    case Profile::Default:
      return make_params(
          mpz_class("104338367565912481595629976526891406656317592405129477362851379535217865801441"), 4);
  }
  throw Error(Errc::Config, "unknown profile");
}

/// Random safe prime p = 2q + 1 with bitlen(q) = q_bits. 4 = 2^2 is always a
/// nontrivial quadratic residue, hence a generator of the order-q subgroup.
inline SystemParams generate_params(unsigned q_bits, Rng& rng) {
  if (q_bits < 3) throw Error(Errc::InvalidArgument, "q_bits too small");
  const mpz_class top = mpz_class(1) << (q_bits - 1);
  for (;;) {
    mpz_class q = rng.below(top) + top;
    q |= 1;
    if (!is_probable_prime(q)) continue;
    if (!is_probable_prime(2 * q + 1)) continue;
    return make_params(q, q > 3 ? 4 : 2);
  }
}

// ---- JSON ----------------------------------------------------------------

inline nlohmann::json to_json(const SystemParams& sp) {
  return {
      {"p", to_dec(sp.p)},
      {"q", to_dec(sp.q)},
      {"g", to_dec(sp.g.v)},
      {"gt", to_dec(sp.gt.v)},
      {"P", "1"},
      {"element_width", sp.element_width},
      {"hash_config", {{"h1", sp.hash.h1}, {"h", sp.hash.h}, {"mask", sp.hash.mask}, {"kdf", sp.hash.kdf}}},
      {"pk_ta_g", to_dec(sp.pk_ta_g.v)},
      {"pk_ta_g1", to_dec(sp.pk_ta_g1.v)},
  };
}

inline SystemParams params_from_json(const nlohmann::json& j) {
  try {
    SystemParams sp;
    sp.p = mpz_class(j.at("p").get<std::string>());
    sp.q = mpz_class(j.at("q").get<std::string>());
    sp.g = GElem{mpz_class(j.at("g").get<std::string>())};
    sp.gt = GElem{mpz_class(j.at("gt").get<std::string>())};
    sp.element_width = j.at("element_width").get<std::size_t>();
    if (j.contains("hash_config")) {
      const auto& h = j["hash_config"];
      sp.hash = HashConfig{h.at("h1"), h.at("h"), h.at("mask"), h.at("kdf")};
    }
    sp.pk_ta_g = GElem{mpz_class(j.value("pk_ta_g", std::string("1")))};
    sp.pk_ta_g1 = G1Elem{mpz_class(j.value("pk_ta_g1", std::string("0")))};
    validate(sp);
    return sp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, std::string("malformed params JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(Errc::Config, std::string("malformed integer in params JSON: ") + e.what());
  }
}

}  // namespace vgka::crypto
