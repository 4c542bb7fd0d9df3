#pragma once

#include "inblock/errors.hpp"
#include "inblock/rational.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inblock {

using Timestamp = std::int64_t;

enum class OracleKind : std::uint8_t { ExchangeRate = 0, GdpIndex = 1, TxFeeEstimate = 2 };

std::string_view to_string(OracleKind kind) noexcept;
/// Throws Error(BadConfig) on an unknown name.
OracleKind parse_oracle_kind(std::string_view name);

struct OracleSample {
  OracleKind kind{};
  Rational value;
  Timestamp as_of{0};
  std::string source_id;

  friend bool operator==(const OracleSample&, const OracleSample&) = default;
};

/// Fiat units per coin, with the time the quote was taken.
struct ExchangeRate {
  Rational fiat_per_coin;
  Timestamp as_of{0};
};

/// Source of external data for the registry.
class OracleProvider {
public:
  virtual ~OracleProvider() = default;

  /// Latest sample with as_of <= now. Throws Error(NoSample) or
  /// Error(StaleSample) when older than the configured max age.
  virtual OracleSample get_sample(OracleKind kind, Timestamp now) const = 0;
};

/// Constant values; every sample is reported as taken at `now`.
class StaticProvider final : public OracleProvider {
public:
  StaticProvider() = default;
  StaticProvider& set(OracleKind kind, Rational value, std::string source_id = "static");

  OracleSample get_sample(OracleKind kind, Timestamp now) const override;

private:
  std::map<OracleKind, std::pair<Rational, std::string>> values_;
};

/// Timestamped series loaded from a JSON-lines fixture:
///   {"kind": "ExchangeRate", "value": "180.5", "as_of": 100, "source_id": "x"}
class FixtureProvider final : public OracleProvider {
public:
  explicit FixtureProvider(std::vector<OracleSample> samples,
                           std::optional<Timestamp> max_age = std::nullopt);

  static FixtureProvider load(std::istream& in, std::optional<Timestamp> max_age = std::nullopt);
  static FixtureProvider load_file(const std::string& path,
                                   std::optional<Timestamp> max_age = std::nullopt);

  OracleSample get_sample(OracleKind kind, Timestamp now) const override;

  /// All samples, ordered by (as_of, kind).
  std::vector<OracleSample> samples() const;

private:
  std::map<OracleKind, std::vector<OracleSample>> series_;
  std::optional<Timestamp> max_age_;
};

} // namespace inblock
