#include "inblock/errors.hpp"

namespace inblock {

std::string_view to_string(errc code) noexcept {
  switch (code) {
    case errc::MalformedAddress: return "MalformedAddress";
    case errc::LengthOutOfRange: return "LengthOutOfRange";
    case errc::NonCanonicalPrefix: return "NonCanonicalPrefix";
    case errc::PoolExhausted: return "PoolExhausted";
    case errc::NotAllocated: return "NotAllocated";
    case errc::InsufficientFee: return "InsufficientFee";
    case errc::UnsupportedLength: return "UnsupportedLength";
    case errc::RegistryPaused: return "RegistryPaused";
    case errc::InvalidGrowthProof: return "InvalidGrowthProof";
    case errc::ExperimentEnded: return "ExperimentEnded";
    case errc::NotHolder: return "NotHolder";
    case errc::AlreadyExpired: return "AlreadyExpired";
    case errc::UnknownAllocation: return "UnknownAllocation";
    case errc::RoaOutsideAllocation: return "RoaOutsideAllocation";
    case errc::InvalidRoa: return "InvalidRoa";
    case errc::AsnCapExceeded: return "AsnCapExceeded";
    case errc::UnknownRoa: return "UnknownRoa";
    case errc::InvalidRate: return "InvalidRate";
    case errc::NotPaused: return "NotPaused";
    case errc::NotSupervisor: return "NotSupervisor";
    case errc::NoSample: return "NoSample";
    case errc::StaleSample: return "StaleSample";
    case errc::NotOracleAccount: return "NotOracleAccount";
    case errc::StaleUpdate: return "StaleUpdate";
    case errc::BadSignature: return "BadSignature";
    case errc::BadNonce: return "BadNonce";
    case errc::InsufficientBalance: return "InsufficientBalance";
    case errc::MisdirectedPayload: return "MisdirectedPayload";
    case errc::MalformedTransaction: return "MalformedTransaction";
    case errc::ClockNotAdvanced: return "ClockNotAdvanced";
    case errc::UnreadableInput: return "UnreadableInput";
    case errc::UnknownSize: return "UnknownSize";
    case errc::ScenarioParseError: return "ScenarioParseError";
    case errc::CorruptSnapshot: return "CorruptSnapshot";
    case errc::VersionMismatch: return "VersionMismatch";
    case errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

namespace {

std::string compose(errc code, const std::string& detail) {
  std::string msg{to_string(code)};
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}

} // namespace

Error::Error(errc code, const std::string& detail)
  : std::runtime_error(compose(code, detail)), code_(code) {
}

} // namespace inblock
