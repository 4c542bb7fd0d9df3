#pragma once

#include "inblock/prefix.hpp"
#include "inblock/rational.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace inblock {

enum class DelegationStatus : std::uint8_t { Allocated, Assigned, Available, Reserved };

std::string_view to_string(DelegationStatus s) noexcept;

/// One ipv6 row of an NRO delegated-extended statistics file.
struct DelegationStat {
  std::string registry;
  std::string country;
  std::string af;
  u128 start{0};
  /// For ipv6 rows the "value" column is the prefix length.
  unsigned prefix_length{0};
  std::string date;
  DelegationStatus status{DelegationStatus::Allocated};
  std::optional<std::string> opaque_id;
  std::vector<std::string> extensions;

  /// Pipe-separated row as it appears in the file.
  std::string to_line() const;

  friend bool operator==(const DelegationStat&, const DelegationStat&) = default;
};

struct ParseDiagnostic {
  std::size_t line{0};
  std::string message;
  std::string text;
};

struct DelegationFile {
  /// ipv6 rows with status allocated or assigned.
  std::vector<DelegationStat> records;
  std::vector<ParseDiagnostic> diagnostics;
  std::size_t header_lines{0};
  std::size_t summary_lines{0};
  std::size_t comment_lines{0};
  std::size_t skipped_other_af{0};
  std::size_t skipped_status{0};
};

/// Parses the pipe-separated delegated-extended format. Malformed rows become
/// diagnostics; only a stream failure throws (Error(UnreadableInput)).
DelegationFile parse_delegated_extended(std::istream& in);
DelegationFile parse_delegated_extended_file(const std::string& path);

struct SizeHistogram {
  std::map<unsigned, std::uint64_t> counts;
  /// Rows with a prefix shorter than `reference_length` (larger blocks).
  std::uint64_t larger_than_reference{0};
  unsigned reference_length{29};
  std::uint64_t total{0};
};

SizeHistogram size_distribution(std::span<const DelegationStat> stats,
                                unsigned reference_length = 29);

inline constexpr std::uint64_t kSecondsPerNonLeapYear = 31'536'000;

/// Transactions per second needed to process `yearly_tx` in a 365-day year.
Rational throughput_requirement(std::uint64_t yearly_tx);

/// Cost of holding every /32 inside a prefix of `space_length` at
/// `fee_per_32` each: fee x 2^(32 - space_length). Throws
/// Error(LengthOutOfRange) when space_length > 32.
Rational whole_space_cost(const Rational& fee_per_32, unsigned space_length);

/// Published headline for the whole-space cost at $3000 per /32. It does not
/// equal 3000 x 2^32; reports show both.
Rational published_whole_space_cost();

struct FeeRange {
  Rational low;
  Rational high;
};

/// RIR yearly fee ranges per allocation size, in US$.
using RirFeeTable = std::map<unsigned, FeeRange>;

/// /32: 1000-2500, /48: 100-800.
const RirFeeTable& default_rir_fee_table();

/// Reads "size,low,high" CSV rows (with an optional header line).
RirFeeTable load_rir_fee_table(std::istream& in);

enum class FeeComparison : std::uint8_t { Below, Within, Above };

std::string_view to_string(FeeComparison c) noexcept;

struct FeePosition {
  unsigned size{0};
  Rational fee;
  FeeRange rir_range;
  FeeComparison position{FeeComparison::Within};

  bool above_rir_maximum() const noexcept { return position == FeeComparison::Above; }
};

/// Throws Error(UnknownSize) when the table has no row for `size`.
FeePosition fee_position(const Rational& fee, unsigned size,
                         const RirFeeTable& table = default_rir_fee_table());

struct EconomicsParams {
  Rational fee_32{3000};
  Rational fee_48{300};
  Rational gdp_index{1};
  unsigned pool_length{20};
  std::uint64_t yearly_tx{58'700};
  std::int64_t inclusion_delay{120};
  std::int64_t block_interval{17};
  std::uint32_t confirmation_depth{12};
};

struct EconomicsReport {
  Rational fee_32;
  Rational fee_48;
  FeePosition position_32;
  FeePosition position_48;
  unsigned pool_length{20};
  std::uint64_t pool_blocks_32{0};
  Rational pool_stockpile_cost;
  Rational whole_space_cost;
  Rational published_whole_space_cost;
  /// whole_space_cost / published - 1.
  Rational whole_space_discrepancy;
  std::uint64_t yearly_tx{0};
  Rational throughput_tx_per_s;
  std::string throughput_2sf;
  std::int64_t latency_seconds{0};
};

EconomicsReport economics_report(const EconomicsParams& params,
                                 const RirFeeTable& table = default_rir_fee_table());

} // namespace inblock
