#pragma once

#include "inblock/config.hpp"
#include "inblock/ledger.hpp"
#include "inblock/snapshot.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace inblock {

// Scenario files are line oriented. Blank lines and text after '#' are
// ignored. Directives:
//
//   name <text>
//   set <key> <value>
//   account <name> <balance> [supervisor] [oracle] [beneficiary]
//   oracle_fixture <path>            (relative to the scenario file)
//
// Steps, executed in order on the simulated clock:
//
//   advance <seconds>
//   advance_to <t> | +<seconds since genesis>
//   blocks <n>
//   settle                           (run until the mempool drains and the
//                                     last inclusion is confirmed)
//   submit <label> <account> <action> [pay <amount>|fee|fee*<n>] [tip <amount>]
//   repeat <n> submit <label> ...    (labels become label#1 .. label#n; {i}
//                                     in the action expands to 1 .. n)
//   expect <what> ...
//
// Actions: allocate <len> [grow <ref>] | renew <ref> | metadata <ref> <ptr|->
//          | roa <ref> <prefix> <asn> [max_len] | revoke_roa <ref> <prefix> <asn> [max_len]
//          | resume | oracle <kind> <value>|fixture | transfer <account> <amount>
// A <ref> is @label (first allocation granted to that submission),
// @label.<n> (its n-th, from 0), or a literal allocation id.

struct ScenarioAccount {
  std::string name;
  Rational balance{0};
  bool supervisor{false};
  bool oracle{false};
  bool beneficiary{false};
};

struct ScenarioStep {
  std::size_t line{0};
  std::vector<std::string> words;
};

struct Scenario {
  std::string name;
  std::vector<Setting> settings;
  std::vector<ScenarioAccount> accounts;
  std::optional<std::string> oracle_fixture;
  std::vector<ScenarioStep> steps;
};

/// Throws Error(ScenarioParseError) naming the offending line.
Scenario parse_scenario(std::string_view text, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);

struct ExpectationFailure {
  std::size_t line{0};
  std::string message;
};

struct RunResult {
  std::string name;
  SimulationConfig config;
  /// JSON lines, one per applied transaction, refused submission, or sweep.
  std::vector<std::string> events;
  std::vector<ExpectationFailure> failures;
  std::map<std::string, AccountId> names;
  std::shared_ptr<const Ledger> ledger;
  std::size_t submitted{0};

  bool passed() const noexcept { return failures.empty(); }
  std::string event_log() const;
  std::string chain_export() const;
  Snapshot snapshot() const;
};

/// Config precedence: defaults < scenario `set` lines < `overrides` (which
/// the caller assembles as config file, then environment, then flags).
/// Throws Error for input problems; failed expectations are collected.
RunResult run_scenario(const Scenario& scenario, const std::vector<Setting>& overrides = {});

AccountId scenario_account_id(const SimulationConfig& config, std::string_view name);

inline constexpr int kEventLogVersion = 1;

} // namespace inblock
