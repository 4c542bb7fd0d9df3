#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace inblock {

/// Every failure the registry, ledger, and tooling can report.
enum class errc {
  // prefix_core
  MalformedAddress,
  LengthOutOfRange,
  NonCanonicalPrefix,
  // pool_allocator
  PoolExhausted,
  NotAllocated,
  // registry_contract
  InsufficientFee,
  UnsupportedLength,
  RegistryPaused,
  InvalidGrowthProof,
  ExperimentEnded,
  NotHolder,
  AlreadyExpired,
  UnknownAllocation,
  RoaOutsideAllocation,
  InvalidRoa,
  AsnCapExceeded,
  UnknownRoa,
  InvalidRate,
  NotPaused,
  NotSupervisor,
  // oracles
  NoSample,
  StaleSample,
  NotOracleAccount,
  StaleUpdate,
  // ledger_sim
  BadSignature,
  BadNonce,
  InsufficientBalance,
  MisdirectedPayload,
  MalformedTransaction,
  ClockNotAdvanced,
  // rir_stats
  UnreadableInput,
  UnknownSize,
  // cli / persistence
  ScenarioParseError,
  CorruptSnapshot,
  VersionMismatch,
  BadConfig,
};

std::string_view to_string(errc code) noexcept;

class Error : public std::runtime_error {
public:
  explicit Error(errc code, const std::string& detail = {});

  errc code() const noexcept { return code_; }

private:
  errc code_;
};

/// A refused contract operation. Rejections are ordinary outcomes that end
/// up in the event log, so they travel as values rather than exceptions.
struct Rejection {
  errc code;
  std::string detail;
};

template <class T>
class Result {
public:
  Result(T value) : v_(std::move(value)) {}
  Result(Rejection r) : v_(std::move(r)) {}

  bool ok() const noexcept { return v_.index() == 0; }
  explicit operator bool() const noexcept { return ok(); }

  const T& value() const& {
    if (!ok())
      throw Error(error().code, error().detail);
    return std::get<0>(v_);
  }
  T& value() & {
    if (!ok())
      throw Error(error().code, error().detail);
    return std::get<0>(v_);
  }
  T&& value() && {
    if (!ok())
      throw Error(error().code, error().detail);
    return std::get<0>(std::move(v_));
  }

  const Rejection& error() const { return std::get<1>(v_); }

  errc code() const { return error().code; }

private:
  std::variant<T, Rejection> v_;
};

using Status = Result<std::monostate>;

inline Status ok_status() { return Status{std::monostate{}}; }

inline Rejection reject(errc code, std::string detail = {}) {
  return Rejection{code, std::move(detail)};
}

} // namespace inblock
