#pragma once

// Trust authority: system initialization, RSU / vehicle registration,
// per-RSU-range pseudonyms and the identity trace.

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "vgka/codec.hpp"
#include "vgka/crypto/params.hpp"

namespace vgka::ta {

using crypto::Profile;

enum class Role { Rsu, Vehicle };

inline std::string_view role_name(Role r) { return r == Role::Rsu ? "rsu" : "vehicle"; }

/// TIDs are carried as length byte || bytes || zero padding inside a 42-byte pseudonym.
inline constexpr std::size_t kMaxTidLength = kPseudonymWidth - 1;

struct NodeCredentials {
  Bytes tid;
  Role role = Role::Vehicle;
  // Long-term key pair; RSUs only. Vehicle keys are per-epoch (VehicleEpoch).
  Scalar sk;
  GElem pk;
  G1Elem q_u;  // H1(TID)
  G1Elem s_u;  // psi_TA * Q_U
  std::optional<Location> loc;
};

struct VehicleEpoch {
  Scalar alpha;
  GElem pk_v;
  Pseudonym fid{};
};

struct RegistryRecord {
  Role role = Role::Vehicle;
  std::optional<GElem> pk;
  G1Elem q_u;
  std::optional<Location> loc;
};

struct TaState {
  SystemParams params;
  Scalar sk_ta;
  std::map<Bytes, RegistryRecord> registry;
  // Issued secrets, persisted separately from the public registry.
  std::map<Bytes, NodeCredentials> keystore;
};

struct RsuRegistration {
  NodeCredentials creds;
  msg::Beacon beacon;
};

/// TA key pair over existing group parameters; publishes PK_TA in G and in G1.
inline TaState ta_init(SystemParams params, const Scalar& sk_ta) {
  if (sk_ta.v <= 0 || sk_ta.v >= params.q) throw Error(Errc::OutOfRange, "TA private key outside Z_q^*");
  TaState ta;
  params.pk_ta_g = crypto::g_pow(params, sk_ta);
  params.pk_ta_g1 = crypto::g1_scale(params, sk_ta, crypto::g1_generator());
  ta.params = std::move(params);
  ta.sk_ta = sk_ta;
  return ta;
}

inline TaState ta_init(Profile profile, Rng& rng) {
  auto params = crypto::profile_params(profile);
  auto sk = crypto::random_scalar(params, rng);
  return ta_init(std::move(params), sk);
}

/// s_U = psi * Q_U.
inline G1Elem certify(const SystemParams& sp, const Scalar& sk_ta, const G1Elem& q_u) {
  return crypto::g1_scale(sp, sk_ta, q_u);
}

/// e(s_U, P) == e(Q_U, psi*P).
inline bool credential_sound(const SystemParams& sp, const NodeCredentials& c) {
  return crypto::pair(sp, c.s_u, crypto::g1_generator()) == crypto::pair(sp, c.q_u, sp.pk_ta_g1);
}

inline Bytes encode_location(const Location& loc) {
  ByteWriter w;
  w.i64(loc.x_mm).i64(loc.y_mm);
  return std::move(w).bytes();
}

inline Scalar location_hash(const SystemParams& sp, const Location& loc) {
  return crypto::hash_to_scalar(sp, encode_location(loc));
}

/// TA-signed (PK_RSU, Loc, h(Loc)).
inline msg::Beacon make_beacon(const TaState& ta, const GElem& pk_rsu, const Location& loc, Rng& rng) {
  msg::Beacon b;
  b.pk_rsu = pk_rsu;
  b.loc = loc;
  b.loc_hash = location_hash(ta.params, loc);
  b.ta_sig = crypto::schnorr_sign(ta.params, ta.sk_ta, auth_input(ta.params, b), rng);
  return b;
}

namespace detail {
inline void check_new_tid(const TaState& ta, const Bytes& tid) {
  if (tid.empty() || tid.size() > kMaxTidLength)
    throw Error(Errc::InvalidArgument, "TID length must be in [1, " + std::to_string(kMaxTidLength) + "]");
  if (ta.registry.contains(tid)) throw Error(Errc::DuplicateTid, "TID '" + to_string(tid) + "' already registered");
}

inline NodeCredentials base_credentials(const TaState& ta, const Bytes& tid, Role role) {
  NodeCredentials c;
  c.tid = tid;
  c.role = role;
  c.q_u = crypto::hash_to_g1(ta.params, tid);
  c.s_u = certify(ta.params, ta.sk_ta, c.q_u);
  return c;
}
}  // namespace detail

inline RsuRegistration register_rsu(TaState& ta, const Bytes& tid, const Location& loc, Rng& rng) {
  detail::check_new_tid(ta, tid);
  auto c = detail::base_credentials(ta, tid, Role::Rsu);
  c.sk = crypto::random_scalar(ta.params, rng);
  c.pk = crypto::g_pow(ta.params, c.sk);
  c.loc = loc;
  ta.registry[tid] = RegistryRecord{Role::Rsu, c.pk, c.q_u, loc};
  ta.keystore[tid] = c;
  return RsuRegistration{c, make_beacon(ta, c.pk, loc, rng)};
}

inline NodeCredentials register_vehicle(TaState& ta, const Bytes& tid) {
  detail::check_new_tid(ta, tid);
  auto c = detail::base_credentials(ta, tid, Role::Vehicle);
  ta.registry[tid] = RegistryRecord{Role::Vehicle, std::nullopt, c.q_u, std::nullopt};
  ta.keystore[tid] = c;
  return c;
}

inline Pseudonym pad_tid(ByteView tid) {
  if (tid.size() > kMaxTidLength) throw Error(Errc::InvalidArgument, "TID longer than 41 bytes");
  Pseudonym out{};
  out[0] = static_cast<std::uint8_t>(tid.size());
  std::copy(tid.begin(), tid.end(), out.begin() + 1);
  return out;
}

inline Bytes unpad_tid(const Pseudonym& padded) {
  const std::size_t n = padded[0];
  if (n > kMaxTidLength) throw Error(Errc::Unpad, "length byte out of range");
  for (std::size_t i = 1 + n; i < padded.size(); ++i)
    if (padded[i] != 0) throw Error(Errc::Unpad, "nonzero padding");
  return Bytes(padded.begin() + 1, padded.begin() + 1 + static_cast<std::ptrdiff_t>(n));
}

inline Pseudonym xor_mask(const Pseudonym& a, ByteView mask) {
  Pseudonym out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ mask[i];
  return out;
}

/// FID = pad(TID) XOR Hmask(PK_TA^alpha).
inline VehicleEpoch vehicle_epoch(const SystemParams& sp, const NodeCredentials& creds, const Scalar& alpha) {
  if (alpha.v <= 0 || alpha.v >= sp.q) throw Error(Errc::OutOfRange, "alpha outside Z_q^*");
  VehicleEpoch e;
  e.alpha = alpha;
  e.pk_v = crypto::g_pow(sp, alpha);
  e.fid = xor_mask(pad_tid(creds.tid), crypto::mask_hash(sp, crypto::g_exp(sp, sp.pk_ta_g, alpha), kPseudonymWidth));
  return e;
}

inline VehicleEpoch refresh_vehicle_epoch(const NodeCredentials& creds, const SystemParams& sp, Rng& rng) {
  return vehicle_epoch(sp, creds, crypto::random_scalar(sp, rng));
}

/// TID = FID XOR Hmask(PK_V^psi). Throws Errc::Unpad when fid and pk_v do not belong together.
/// A 41-byte TID leaves no padding to check, so the result must also be a registered vehicle.
inline Bytes trace(const TaState& ta, const Pseudonym& fid, const GElem& pk_v) {
  const auto& sp = ta.params;
  auto tid = unpad_tid(xor_mask(fid, crypto::mask_hash(sp, crypto::g_exp(sp, pk_v, ta.sk_ta), kPseudonymWidth)));
  auto it = ta.registry.find(tid);
  if (it == ta.registry.end() || it->second.role != Role::Vehicle)
    throw Error(Errc::Unpad, "unmasked identity is not a registered vehicle");
  return tid;
}

// ---- persistence ------------------------------------------------------------------

namespace detail {
inline nlohmann::json loc_json(const Location& l) { return {{"x_mm", l.x_mm}, {"y_mm", l.y_mm}}; }
inline Location loc_from(const nlohmann::json& j) { return {j.at("x_mm").get<std::int64_t>(), j.at("y_mm").get<std::int64_t>()}; }
inline Role role_from(const std::string& s) {
  if (s == "rsu") return Role::Rsu;
  if (s == "vehicle") return Role::Vehicle;
  throw Error(Errc::Config, "unknown role '" + s + "'");
}
}  // namespace detail

/// Public registry: parameters (with TA public keys) and per-TID public material.
inline nlohmann::json registry_to_json(const TaState& ta) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [tid, rec] : ta.registry) {
    nlohmann::json n = {{"tid_hex", to_hex(tid)}, {"role", role_name(rec.role)}, {"q_u", crypto::to_dec(rec.q_u.v)}};
    if (rec.pk) n["pk"] = crypto::to_dec(rec.pk->v);
    if (rec.loc) n["loc"] = detail::loc_json(*rec.loc);
    nodes.push_back(std::move(n));
  }
  return {{"params", crypto::to_json(ta.params)}, {"nodes", std::move(nodes)}};
}

/// Secrets: psi_TA and every issued private value.
inline nlohmann::json keystore_to_json(const TaState& ta) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [tid, c] : ta.keystore) {
    nlohmann::json n = {{"tid_hex", to_hex(tid)}, {"role", role_name(c.role)}, {"s_u", crypto::to_dec(c.s_u.v)}};
    if (c.role == Role::Rsu) n["sk"] = crypto::to_dec(c.sk.v);
    nodes.push_back(std::move(n));
  }
  return {{"sk_ta", crypto::to_dec(ta.sk_ta.v)}, {"nodes", std::move(nodes)}};
}

inline TaState ta_from_json(const nlohmann::json& registry, const nlohmann::json& keystore) {
  try {
    auto params = crypto::params_from_json(registry.at("params"));
    TaState ta = ta_init(params, Scalar{mpz_class(keystore.at("sk_ta").get<std::string>())});
    if (ta.params.pk_ta_g != params.pk_ta_g || ta.params.pk_ta_g1 != params.pk_ta_g1)
      throw Error(Errc::Config, "keystore does not match registry TA public key");
    for (const auto& n : registry.at("nodes")) {
      RegistryRecord rec;
      rec.role = detail::role_from(n.at("role"));
      rec.q_u = G1Elem{mpz_class(n.at("q_u").get<std::string>())};
      if (n.contains("pk")) rec.pk = GElem{mpz_class(n["pk"].get<std::string>())};
      if (n.contains("loc")) rec.loc = detail::loc_from(n["loc"]);
      ta.registry[from_hex(n.at("tid_hex").get<std::string>())] = rec;
    }
    for (const auto& n : keystore.at("nodes")) {
      auto tid = from_hex(n.at("tid_hex").get<std::string>());
      auto it = ta.registry.find(tid);
      if (it == ta.registry.end()) throw Error(Errc::Config, "keystore entry without registry record");
      NodeCredentials c;
      c.tid = tid;
      c.role = it->second.role;
      c.q_u = it->second.q_u;
      c.s_u = G1Elem{mpz_class(n.at("s_u").get<std::string>())};
      c.loc = it->second.loc;
      if (n.contains("sk")) {
        c.sk = Scalar{mpz_class(n["sk"].get<std::string>())};
        c.pk = it->second.pk.value_or(GElem{});
      }
      ta.keystore[tid] = c;
    }
    return ta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Config, std::string("malformed TA state: ") + e.what());
  }
}

}  // namespace vgka::ta
