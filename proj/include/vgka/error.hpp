#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vgka {

/// Typed failure codes. Every rejecting operation throws vgka::Error carrying one of these.
enum class Errc {
  // input validation
  InvalidArgument,
  OutOfRange,
  Decode,
  Config,
  Primality,
  // registry
  DuplicateTid,
  UnknownTid,
  Unpad,
  // generic protocol
  InvalidState,
  // rsu-gka
  MissingMessage,
  DuplicateMessage,
  BadSignature,
  TokenMismatch,
  ChainBreak,
  SchnorrFail,
  // v2r-auth
  SigFail,
  LocHashMismatch,
  StaleTimestamp,
  MacFail,
  DecryptFail,
  KeyConfirmFail,
  // group-key / group-comm
  Unauthenticated,
  EmptyGroup,
  UnknownFid,
  FidAbsent,
  DuplicateFid,
  NoSessionKey,
  EpochMismatch,
  GkMismatch,
  // cost-metrics
  UnknownScheme,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::Decode: return "Decode";
    case Errc::Config: return "Config";
    case Errc::Primality: return "Primality";
    case Errc::DuplicateTid: return "DuplicateTid";
    case Errc::UnknownTid: return "UnknownTid";
    case Errc::Unpad: return "Unpad";
    case Errc::InvalidState: return "InvalidState";
    case Errc::MissingMessage: return "MissingMessage";
    case Errc::DuplicateMessage: return "DuplicateMessage";
    case Errc::BadSignature: return "BadSignature";
    case Errc::TokenMismatch: return "TokenMismatch";
    case Errc::ChainBreak: return "ChainBreak";
    case Errc::SchnorrFail: return "SchnorrFail";
    case Errc::SigFail: return "SigFail";
    case Errc::LocHashMismatch: return "LocHashMismatch";
    case Errc::StaleTimestamp: return "StaleTimestamp";
    case Errc::MacFail: return "MacFail";
    case Errc::DecryptFail: return "DecryptFail";
    case Errc::KeyConfirmFail: return "KeyConfirmFail";
    case Errc::Unauthenticated: return "Unauthenticated";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::UnknownFid: return "UnknownFid";
    case Errc::FidAbsent: return "FidAbsent";
    case Errc::DuplicateFid: return "DuplicateFid";
    case Errc::NoSessionKey: return "NoSessionKey";
    case Errc::EpochMismatch: return "EpochMismatch";
    case Errc::GkMismatch: return "GkMismatch";
    case Errc::UnknownScheme: return "UnknownScheme";
  }
  return "Unknown";
}

/// True for failures raised by a protocol check (as opposed to bad input or configuration).
constexpr bool is_protocol_failure(Errc e) {
  switch (e) {
    case Errc::InvalidArgument:
    case Errc::OutOfRange:
    case Errc::Decode:
    case Errc::Config:
    case Errc::Primality:
    case Errc::DuplicateTid:
    case Errc::UnknownTid:
    case Errc::UnknownScheme:
      return false;
    default:
      return true;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace vgka
