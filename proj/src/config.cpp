#include "inblock/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

extern char** environ;

namespace inblock {

namespace {

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int out{};
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || end != value.data() + value.size())
    throw Error(errc::BadConfig, std::string(key) + ": not an integer: " + std::string(value));
  return out;
}

std::set<unsigned> parse_lengths(std::string_view key, std::string_view value) {
  std::set<unsigned> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    auto item = value.substr(start, comma == std::string_view::npos ? value.npos : comma - start);
    unsigned len = parse_int<unsigned>(key, item);
    if (len < 1 || len > 128)
      throw Error(errc::BadConfig, std::string(key) + ": length out of range");
    out.insert(len);
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return out;
}

std::optional<Timestamp> parse_optional_time(std::string_view key, std::string_view value) {
  if (value == "none" || value.empty())
    return std::nullopt;
  return parse_int<Timestamp>(key, value);
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

} // namespace

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys{
    "pool",
    "allocation_lengths",
    "lifetime_seconds",
    "rate_limit",
    "rate_window_seconds",
    "asn_cap",
    "asn_capped_lengths",
    "hold_down_seconds",
    "experiment_end",
    "max_rate_age_seconds",
    "genesis_rate",
    "base_gdp_index",
    "fee_destination",
    "genesis_time",
    "block_interval",
    "confirmation_depth",
    "inclusion_delay",
    "max_txs_per_block",
    "seed",
    "signature_scheme",
  };
  return keys;
}

void apply_setting(SimulationConfig& c, std::string_view key, std::string_view value) {
  auto& r = c.registry;
  auto& l = c.ledger;
  try {
    if (key == "pool") {
      r.pool = parse_prefix(value);
    } else if (key == "allocation_lengths") {
      r.allocation_lengths = parse_lengths(key, value);
    } else if (key == "lifetime_seconds") {
      r.lifetime_seconds = parse_int<Timestamp>(key, value);
      if (r.lifetime_seconds <= 0)
        throw Error(errc::BadConfig, "lifetime_seconds must be positive");
    } else if (key == "rate_limit") {
      r.rate_limit = parse_int<std::uint32_t>(key, value);
    } else if (key == "rate_window_seconds") {
      r.rate_window_seconds = parse_int<Timestamp>(key, value);
    } else if (key == "asn_cap") {
      r.asn_cap = parse_int<std::uint32_t>(key, value);
    } else if (key == "asn_capped_lengths") {
      r.asn_capped_lengths = value == "none" ? std::set<unsigned>{} : parse_lengths(key, value);
    } else if (key == "hold_down_seconds") {
      r.hold_down_seconds = parse_int<Timestamp>(key, value);
    } else if (key == "experiment_end") {
      r.experiment_end = parse_optional_time(key, value);
    } else if (key == "max_rate_age_seconds") {
      r.max_rate_age_seconds = parse_optional_time(key, value);
    } else if (key == "genesis_rate") {
      if (value == "none") {
        r.genesis_rate.reset();
      } else {
        r.genesis_rate = parse_rational(value);
        if (*r.genesis_rate <= 0)
          throw Error(errc::BadConfig, "genesis_rate must be positive");
      }
    } else if (key == "base_gdp_index") {
      r.fees.base_gdp_index = parse_rational(value);
      r.fees.current_gdp_index = r.fees.base_gdp_index;
      if (r.fees.base_gdp_index <= 0)
        throw Error(errc::BadConfig, "base_gdp_index must be positive");
    } else if (key.starts_with("fee_") && key != "fee_destination") {
      unsigned len = parse_int<unsigned>(key, key.substr(4));
      Rational fee = parse_rational(value);
      if (fee <= 0)
        throw Error(errc::BadConfig, std::string(key) + " must be positive");
      r.fees.base_fee_fiat[len] = fee;
    } else if (key == "fee_destination") {
      if (value == "contract")
        r.fee_destination = FeeDestination::Contract;
      else if (value == "burn")
        r.fee_destination = FeeDestination::Burn;
      else if (value == "beneficiary")
        r.fee_destination = FeeDestination::Beneficiary;
      else
        throw Error(errc::BadConfig, "fee_destination must be contract, burn, or beneficiary");
    } else if (key == "genesis_time") {
      l.genesis_time = parse_int<Timestamp>(key, value);
    } else if (key == "block_interval") {
      l.block_interval = parse_int<Timestamp>(key, value);
      if (l.block_interval <= 0)
        throw Error(errc::BadConfig, "block_interval must be positive");
    } else if (key == "confirmation_depth") {
      l.confirmation_depth = parse_int<std::uint32_t>(key, value);
    } else if (key == "inclusion_delay") {
      l.inclusion_delay = parse_int<Timestamp>(key, value);
    } else if (key == "max_txs_per_block") {
      l.max_txs_per_block = parse_int<std::size_t>(key, value);
    } else if (key == "seed") {
      c.seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "signature_scheme") {
      scheme_by_name(value);
      c.signature_scheme = std::string(value);
    } else {
      throw Error(errc::BadConfig, "unknown setting: " + std::string(key));
    }
  } catch (const Error& e) {
    if (e.code() == errc::BadConfig)
      throw;
    throw Error(errc::BadConfig, std::string(key) + ": " + e.what());
  }
}

void apply_settings(SimulationConfig& config, const std::vector<Setting>& settings) {
  for (const auto& [k, v] : settings)
    apply_setting(config, k, v);
}

std::vector<Setting> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(errc::BadConfig, "cannot read config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::BadConfig, path + ": " + e.what());
  }
  if (!j.is_object())
    throw Error(errc::BadConfig, path + ": expected a JSON object");
  std::vector<Setting> out;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string())
      out.emplace_back(key, value.get<std::string>());
    else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value)
        joined += (joined.empty() ? "" : ",") + item.dump();
      out.emplace_back(key, joined);
    } else if (value.is_null())
      out.emplace_back(key, "none");
    else
      out.emplace_back(key, value.dump());
  }
  return out;
}

std::vector<Setting> read_environment() {
  std::vector<Setting> out;
  for (auto key : config_keys()) {
    std::string var = "INBLOCK_" + upper(key);
    if (const char* v = std::getenv(var.c_str()))
      out.emplace_back(std::string(key), v);
  }
  // INBLOCK_FEE_<LEN> in the order the environment lists them.
  for (char** env = environ; env != nullptr && *env != nullptr; ++env) {
    std::string_view entry(*env);
    if (!entry.starts_with("INBLOCK_FEE_"))
      continue;
    auto eq = entry.find('=');
    auto name = entry.substr(8, eq - 8);
    if (name == "FEE_DESTINATION")
      continue;
    std::string key = "fee_" + std::string(name.substr(4));
    out.emplace_back(key, std::string(entry.substr(eq + 1)));
  }
  return out;
}

} // namespace inblock
