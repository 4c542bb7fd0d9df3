#include "inblock/rir_stats.hpp"

#include "inblock/errors.hpp"
#include "inblock/ledger.hpp"
#include "inblock/registry.hpp"

#include <charconv>
#include <fstream>
#include <istream>

namespace inblock {

namespace {

std::vector<std::string> split_fields(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

bool is_number(std::string_view s) {
  if (s.empty())
    return false;
  for (char c : s)
    if ((c < '0' || c > '9') && c != '.')
      return false;
  return true;
}

std::optional<DelegationStatus> parse_status(std::string_view s) {
  if (s == "allocated")
    return DelegationStatus::Allocated;
  if (s == "assigned")
    return DelegationStatus::Assigned;
  if (s == "available")
    return DelegationStatus::Available;
  if (s == "reserved")
    return DelegationStatus::Reserved;
  return std::nullopt;
}

bool valid_date(std::string_view s) {
  if (s.empty())
    return true;
  if (s.size() != 8)
    return false;
  for (char c : s)
    if (c < '0' || c > '9')
      return false;
  return true;
}

} // namespace

std::string_view to_string(DelegationStatus s) noexcept {
  switch (s) {
    case DelegationStatus::Allocated: return "allocated";
    case DelegationStatus::Assigned: return "assigned";
    case DelegationStatus::Available: return "available";
    case DelegationStatus::Reserved: return "reserved";
  }
  return "unknown";
}

std::string_view to_string(FeeComparison c) noexcept {
  switch (c) {
    case FeeComparison::Below: return "below";
    case FeeComparison::Within: return "within";
    case FeeComparison::Above: return "above";
  }
  return "unknown";
}

std::string DelegationStat::to_line() const {
  std::string out = registry + "|" + country + "|" + af + "|" + format_address(start) + "|"
                    + std::to_string(prefix_length) + "|" + date + "|"
                    + std::string(to_string(status));
  if (opaque_id)
    out += "|" + *opaque_id;
  for (const auto& ext : extensions)
    out += "|" + ext;
  return out;
}

DelegationFile parse_delegated_extended(std::istream& in) {
  if (!in)
    throw Error(errc::UnreadableInput, "stream not readable");
  DelegationFile file;
  std::string line;
  std::size_t lineno = 0;
  auto diag = [&](std::string message) {
    file.diagnostics.push_back({lineno, std::move(message), line});
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (line.front() == '#') {
      ++file.comment_lines;
      continue;
    }
    auto f = split_fields(line, '|');
    if (is_number(f[0])) {
      ++file.header_lines;
      continue;
    }
    if (f.size() >= 6 && f[5] == "summary") {
      ++file.summary_lines;
      continue;
    }
    if (f.size() < 7) {
      diag("expected at least 7 fields, found " + std::to_string(f.size()));
      continue;
    }
    if (f[2] != "ipv6") {
      ++file.skipped_other_af;
      continue;
    }

    DelegationStat rec;
    rec.registry = f[0];
    rec.country = f[1];
    rec.af = f[2];
    try {
      rec.start = parse_address(f[3]);
    } catch (const Error&) {
      diag("bad start address '" + f[3] + "'");
      continue;
    }
    unsigned len = 0;
    auto [end, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), len);
    if (ec != std::errc{} || end != f[4].data() + f[4].size() || len < 1 || len > 128) {
      diag("bad prefix length '" + f[4] + "'");
      continue;
    }
    rec.prefix_length = len;
    if ((rec.start & Ipv6Prefix::host_mask(len)) != 0) {
      diag("start address not aligned to /" + f[4]);
      continue;
    }
    if (!valid_date(f[5])) {
      diag("bad date '" + f[5] + "'");
      continue;
    }
    rec.date = f[5];
    auto status = parse_status(f[6]);
    if (!status) {
      diag("unknown status '" + f[6] + "'");
      continue;
    }
    rec.status = *status;
    if (f.size() >= 8)
      rec.opaque_id = f[7];
    for (std::size_t i = 8; i < f.size(); ++i)
      rec.extensions.push_back(f[i]);

    if (rec.status == DelegationStatus::Allocated || rec.status == DelegationStatus::Assigned)
      file.records.push_back(std::move(rec));
    else
      ++file.skipped_status;
  }
  if (in.bad())
    throw Error(errc::UnreadableInput, "read error");
  return file;
}

DelegationFile parse_delegated_extended_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(errc::UnreadableInput, path);
  return parse_delegated_extended(in);
}

SizeHistogram size_distribution(std::span<const DelegationStat> stats,
                                unsigned reference_length) {
  SizeHistogram h;
  h.reference_length = reference_length;
  for (const auto& s : stats) {
    ++h.counts[s.prefix_length];
    ++h.total;
    if (s.prefix_length < reference_length)
      ++h.larger_than_reference;
  }
  return h;
}

Rational throughput_requirement(std::uint64_t yearly_tx) {
  return Rational(BigInt(yearly_tx), BigInt(kSecondsPerNonLeapYear));
}

Rational whole_space_cost(const Rational& fee_per_32, unsigned space_length) {
  if (space_length > 32)
    throw Error(errc::LengthOutOfRange, "space must be /32 or larger");
  return fee_per_32 * Rational(pow2(32 - space_length));
}

Rational published_whole_space_cost() {
  return Rational(BigInt("12600000000000"));
}

const RirFeeTable& default_rir_fee_table() {
  static const RirFeeTable table{
    {32, FeeRange{Rational(1000), Rational(2500)}},
    {48, FeeRange{Rational(100), Rational(800)}},
  };
  return table;
}

RirFeeTable load_rir_fee_table(std::istream& in) {
  RirFeeTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    auto f = split_fields(line, ',');
    if (f.size() != 3)
      throw Error(errc::BadConfig, "fee table rows are size,low,high");
    if (!is_number(f[0]))
      continue; // header
    unsigned size = static_cast<unsigned>(std::stoul(f[0]));
    table[size] = FeeRange{parse_rational(f[1]), parse_rational(f[2])};
  }
  return table;
}

FeePosition fee_position(const Rational& fee, unsigned size, const RirFeeTable& table) {
  auto it = table.find(size);
  if (it == table.end())
    throw Error(errc::UnknownSize, "/" + std::to_string(size));
  FeePosition p;
  p.size = size;
  p.fee = fee;
  p.rir_range = it->second;
  if (fee < it->second.low)
    p.position = FeeComparison::Below;
  else if (fee > it->second.high)
    p.position = FeeComparison::Above;
  else
    p.position = FeeComparison::Within;
  return p;
}

EconomicsReport economics_report(const EconomicsParams& params, const RirFeeTable& table) {
  FeeSchedule schedule;
  schedule.base_fee_fiat = {{32, params.fee_32}, {48, params.fee_48}};
  schedule.current_gdp_index = params.gdp_index;

  EconomicsReport r;
  r.fee_32 = effective_fee(schedule, 32);
  r.fee_48 = effective_fee(schedule, 48);
  r.position_32 = fee_position(r.fee_32, 32, table);
  r.position_48 = fee_position(r.fee_48, 48, table);
  r.pool_length = params.pool_length;
  r.pool_blocks_32 = static_cast<std::uint64_t>(pow2(32 - params.pool_length));
  r.pool_stockpile_cost = whole_space_cost(r.fee_32, params.pool_length);
  r.whole_space_cost = whole_space_cost(r.fee_32, 0);
  r.published_whole_space_cost = published_whole_space_cost();
  r.whole_space_discrepancy = r.whole_space_cost / r.published_whole_space_cost - 1;
  r.yearly_tx = params.yearly_tx;
  r.throughput_tx_per_s = throughput_requirement(params.yearly_tx);
  r.throughput_2sf = format_significant(r.throughput_tx_per_s, 2);
  r.latency_seconds = end_to_end_allocation_latency(params.inclusion_delay,
                                                    params.block_interval,
                                                    params.confirmation_depth);
  return r;
}

} // namespace inblock
