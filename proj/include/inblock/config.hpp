#pragma once

#include "inblock/ledger.hpp"
#include "inblock/registry.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace inblock {

struct SimulationConfig {
  LedgerConfig ledger;
  RegistryConfig registry;
  std::uint64_t seed{0};
  std::string signature_scheme{"ed25519"};
};

using Setting = std::pair<std::string, std::string>;

/// Recognised keys, shared by scenario `set` lines, config files,
/// INBLOCK_* environment variables, and --set flags. `fee_<length>` keys
/// (fee_32, fee_48, ...) set the base fee for that allocation length.
const std::vector<std::string_view>& config_keys();

/// Throws Error(BadConfig) on an unknown key or unparsable value.
void apply_setting(SimulationConfig& config, std::string_view key, std::string_view value);
void apply_settings(SimulationConfig& config, const std::vector<Setting>& settings);

/// A JSON object of key -> scalar.
std::vector<Setting> read_config_file(const std::string& path);

/// INBLOCK_<KEY> for every recognised key (and INBLOCK_FEE_<LEN>).
std::vector<Setting> read_environment();

} // namespace inblock
