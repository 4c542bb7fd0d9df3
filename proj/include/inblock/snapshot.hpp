#pragma once

#include "inblock/crypto.hpp"
#include "inblock/ledger.hpp"
#include "inblock/registry.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace inblock {

inline constexpr int kSnapshotVersion = 1;

struct LedgerSummary {
  std::uint64_t height{0};
  Digest tip_hash;
  Timestamp clock{0};
  std::map<AccountId, Account> accounts;

  friend bool operator==(const LedgerSummary&, const LedgerSummary&) = default;
};

struct Snapshot {
  RegistryState registry;
  std::optional<LedgerSummary> ledger;
  /// Human-readable account labels (scenario names).
  std::map<std::string, AccountId> names;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

Snapshot snapshot_of(const Ledger& ledger, std::map<std::string, AccountId> names = {});

/// Canonical bytes: a single JSON line carrying the format version and a
/// digest over the format tag, version, and content.
std::string write_snapshot(const Snapshot& snapshot);

/// Throws Error(CorruptSnapshot) on any digest or structure mismatch and
/// Error(VersionMismatch) on an intact snapshot of another version.
Snapshot read_snapshot(std::string_view bytes);

Snapshot load_snapshot_file(const std::string& path);
void save_snapshot_file(const Snapshot& snapshot, const std::string& path);

} // namespace inblock
