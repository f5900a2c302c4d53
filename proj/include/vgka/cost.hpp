#pragma once

// Closed-form verification delay (per scheme, per side), transmission
// overhead, and the averaged end-to-end message delay.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vgka/error.hpp"

namespace vgka::cost {

/// Primitive costs in milliseconds (Pentium IV 3.0 GHz reference figures).
struct PrimitiveTimings {
  double t_par = 4.5;
  double t_mul = 0.6;
  double t_mp = 0.6;
  double t_hmac = 0.006;
  double t_sym = 0.01;  // one symmetric decrypt / encrypt of a short message
};

enum class Scheme { IBV, ECPP, RMAKA, ACP, ABAKA, ARGBV, Ours };
enum class Side { OBU, RSU };

inline constexpr std::array kDelaySchemes{Scheme::IBV, Scheme::ECPP, Scheme::RMAKA, Scheme::ACP, Scheme::Ours};
inline constexpr std::array kOverheadSchemes{Scheme::RMAKA, Scheme::ABAKA, Scheme::ARGBV, Scheme::Ours};

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::IBV: return "IBV";
    case Scheme::ECPP: return "ECPP";
    case Scheme::RMAKA: return "RMAKA";
    case Scheme::ACP: return "ACP";
    case Scheme::ABAKA: return "ABAKA";
    case Scheme::ARGBV: return "ARGBV";
    case Scheme::Ours: return "Ours";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  for (auto sc : {Scheme::IBV, Scheme::ECPP, Scheme::RMAKA, Scheme::ACP, Scheme::ABAKA, Scheme::ARGBV, Scheme::Ours})
    if (scheme_name(sc) == s) return sc;
  throw Error(Errc::UnknownScheme, std::string(s));
}

inline std::string_view side_name(Side s) { return s == Side::OBU ? "OBU" : "RSU"; }

/// n-proportional and constant coefficients of T_mp, T_mul, T_par.
struct LinearForm {
  double mp_n = 0, mul_n = 0, par_n = 0;
  double mp_c = 0, mul_c = 0, par_c = 0;

  double per_message(const PrimitiveTimings& t) const { return mp_n * t.t_mp + mul_n * t.t_mul + par_n * t.t_par; }
  double constant(const PrimitiveTimings& t) const { return mp_c * t.t_mp + mul_c * t.t_mul + par_c * t.t_par; }
};

/// Verification-delay rows for completing n verifications.
inline LinearForm delay_form(Scheme s, Side side) {
  const bool obu = side == Side::OBU;
  switch (s) {
    case Scheme::IBV:  // 5n Tmul + 2n Tmp | (n+1) Tmul + 3 Tpar + n Tmp
      return obu ? LinearForm{.mp_n = 2, .mul_n = 5} : LinearForm{.mp_n = 1, .mul_n = 1, .mul_c = 1, .par_c = 3};
    case Scheme::ECPP:  // 4n Tmul + n Tpar | 2n Tmul + 3n Tpar
      return obu ? LinearForm{.mul_n = 4, .par_n = 1} : LinearForm{.mul_n = 2, .par_n = 3};
    case Scheme::RMAKA:  // 4n Tmul | 4n Tmul
      return LinearForm{.mul_n = 4};
    case Scheme::ACP:  // n Tmul | 3 Tpar + (2n+1) Tmul
      return obu ? LinearForm{.mul_n = 1} : LinearForm{.mul_n = 2, .mul_c = 1, .par_c = 3};
    case Scheme::Ours:  // n Tmp + 5n Tmul + 2n Tpar | 4n Tmul + 2n Tpar
      return obu ? LinearForm{.mp_n = 1, .mul_n = 5, .par_n = 2} : LinearForm{.mul_n = 4, .par_n = 2};
    default:
      throw Error(Errc::UnknownScheme, std::string(scheme_name(s)) + " has no verification-delay model");
  }
}

/// Milliseconds to complete n verifications. A batch of zero costs nothing; constant
/// terms (IBV, ACP at the RSU) apply once per non-empty batch.
inline double verification_delay(Scheme s, Side side, std::uint64_t n, const PrimitiveTimings& t = {}) {
  const auto f = delay_form(s, side);
  if (n == 0) return 0.0;
  return static_cast<double>(n) * f.per_message(t) + f.constant(t);
}

/// Re-admission through the neighbour-GK fast path: two HMACs and one symmetric decrypt.
inline double fastpath_cost(const PrimitiveTimings& t = {}) { return 2 * t.t_hmac + t.t_sym; }

/// RSU delay when only illegal and re-authenticating vehicles take the full path.
inline double effective_rsu_delay(std::uint64_t n, double illegal_fraction, double reauth_fraction,
                                  const PrimitiveTimings& t = {}) {
  if (illegal_fraction < 0 || illegal_fraction > 1 || reauth_fraction < 0 || reauth_fraction > 1)
    throw Error(Errc::OutOfRange, "fractions must lie in [0, 1]");
  const double full = illegal_fraction + reauth_fraction;
  if (full > 1 + 1e-12) throw Error(Errc::OutOfRange, "illegal + reauth fraction exceeds 1");
  return static_cast<double>(n) *
         (full * verification_delay(Scheme::Ours, Side::RSU, 1, t) + (1 - full) * fastpath_cost(t));
}

/// Identity + integrity bytes per OBU -> RSU message.
inline std::uint64_t overhead_per_message(Scheme s) {
  switch (s) {
    case Scheme::RMAKA: return 167;
    case Scheme::ABAKA: return 84;
    case Scheme::ARGBV: return 63;
    case Scheme::Ours: return 58;
    default:
      throw Error(Errc::UnknownScheme, std::string(scheme_name(s)) + " has no overhead model");
  }
}

inline std::uint64_t transmission_overhead(Scheme s, std::uint64_t n) { return overhead_per_message(s) * n; }

// ---- message delay ---------------------------------------------------------------

struct DelaySample {
  std::uint64_t creator = 0;
  std::uint64_t message = 0;
  std::uint64_t receiver = 0;
  double t_create = 0;
  double t_transmit = 0;
  double t_verify = 0;
  double total() const { return t_create + t_transmit + t_verify; }
};

/// Delay = (1/N) sum_n (1/M_n) sum_m (T_create + T_transmit + T_verify).
/// A message delivered to several receivers contributes its mean over receivers.
/// Every creator named in `creators` (if non-empty) must have at least one message.
inline double average_delay(std::span<const DelaySample> samples, std::span<const std::uint64_t> creators = {}) {
  if (samples.empty()) throw Error(Errc::InvalidArgument, "no delay samples");
  struct Acc {
    double sum = 0;
    std::uint64_t count = 0;
  };
  std::map<std::uint64_t, std::map<std::uint64_t, Acc>> per_creator;
  for (const auto& s : samples) {
    if (s.t_create < 0 || s.t_transmit < 0 || s.t_verify < 0) throw Error(Errc::OutOfRange, "negative delay sample");
    auto& a = per_creator[s.creator][s.message];
    a.sum += s.total();
    ++a.count;
  }
  for (auto c : creators)
    if (!per_creator.contains(c)) throw Error(Errc::InvalidArgument, "creator " + std::to_string(c) + " sent no message");
  double outer = 0;
  for (const auto& [creator, msgs] : per_creator) {
    double inner = 0;
    for (const auto& [id, a] : msgs) inner += a.sum / static_cast<double>(a.count);
    outer += inner / static_cast<double>(msgs.size());
  }
  return outer / static_cast<double>(per_creator.size());
}

}  // namespace vgka::cost
