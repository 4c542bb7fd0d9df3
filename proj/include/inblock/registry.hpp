#pragma once

#include "inblock/crypto.hpp"
#include "inblock/errors.hpp"
#include "inblock/oracles.hpp"
#include "inblock/pool.hpp"
#include "inblock/prefix.hpp"
#include "inblock/rational.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace inblock {

using AllocationId = std::uint64_t;

inline constexpr Timestamp kSecondsPerDay = 86'400;
inline constexpr Timestamp kSecondsPerYear = 365 * kSecondsPerDay;

struct RoaRecord {
  Ipv6Prefix prefix;
  std::uint32_t origin_asn{0};
  unsigned max_length{0};

  friend auto operator<=>(const RoaRecord&, const RoaRecord&) = default;
};

struct AllocationRecord {
  AllocationId id{0};
  Ipv6Prefix prefix;
  AccountId holder;
  Timestamp created{0};
  Timestamp expiration{0};
  std::optional<std::string> metadata_pointer;
  std::set<RoaRecord> roas;
  /// Set when the block was granted next to an existing holding: the
  /// aggregate route the two form together.
  std::optional<Ipv6Prefix> aggregatable_with;

  friend bool operator==(const AllocationRecord&, const AllocationRecord&) = default;
};

/// Fiat-denominated yearly fees, scaled by a GDP index.
struct FeeSchedule {
  std::map<unsigned, Rational> base_fee_fiat{{32, Rational(3000)}, {48, Rational(300)}};
  Rational base_gdp_index{1};
  Rational current_gdp_index{1};

  friend bool operator==(const FeeSchedule&, const FeeSchedule&) = default;
};

/// base fee x current index / base index. Throws Error(UnsupportedLength).
Rational effective_fee(const FeeSchedule& schedule, unsigned length);

/// fee / rate, exact. Throws Error(InvalidRate) for a non-positive rate.
Rational required_crypto_amount(const Rational& fee_fiat, const Rational& fiat_per_coin);

/// As above, also rejecting quotes older than `max_age` at `now`.
Rational required_crypto_amount(const Rational& fee_fiat, const ExchangeRate& rate,
                                Timestamp now, std::optional<Timestamp> max_age);

enum class FeeDestination : std::uint8_t { Contract, Burn, Beneficiary };

std::string_view to_string(FeeDestination d) noexcept;

struct RegistryConfig {
  Ipv6Prefix pool = parse_prefix("2001:1000::/20");
  std::set<unsigned> allocation_lengths{32, 48};
  Timestamp lifetime_seconds{kSecondsPerYear};
  std::uint32_t rate_limit{100};
  Timestamp rate_window_seconds{kSecondsPerDay};
  std::uint32_t asn_cap{100};
  std::set<unsigned> asn_capped_lengths{32};
  /// Seconds an expired block stays out of the pool before reuse.
  Timestamp hold_down_seconds{0};
  std::optional<Timestamp> experiment_end;
  std::optional<Timestamp> max_rate_age_seconds;
  /// Fiat-per-coin rate in force at genesis, before any oracle update.
  std::optional<Rational> genesis_rate;
  std::set<AccountId> supervisors;
  std::set<AccountId> oracle_accounts;
  FeeSchedule fees;
  FeeDestination fee_destination{FeeDestination::Contract};
  std::optional<AccountId> beneficiary;

  friend bool operator==(const RegistryConfig&, const RegistryConfig&) = default;
};

struct Accounting {
  Rational collected{0};
  Rational surplus{0};
  Rational rejected_payments{0};

  friend bool operator==(const Accounting&, const Accounting&) = default;
};

struct QuarantinedBlock {
  Ipv6Prefix prefix;
  Timestamp release_at{0};

  friend bool operator==(const QuarantinedBlock&, const QuarantinedBlock&) = default;
};

struct RegistryState {
  explicit RegistryState(RegistryConfig cfg);

  RegistryConfig config;
  PoolState pool;
  std::map<AllocationId, AllocationRecord> allocations;
  std::map<Ipv6Prefix, AllocationId> by_prefix;
  FeeSchedule fee_schedule;
  std::deque<Timestamp> rate_window;
  bool paused{false};
  AllocationId next_id{1};
  std::map<OracleKind, OracleSample> oracle;
  std::vector<QuarantinedBlock> quarantine;
  Accounting accounting;

  /// Empty when the indexes, pool, and records agree; else a description.
  std::string check_invariants() const;

  friend bool operator==(const RegistryState&, const RegistryState&) = default;
};

struct AllocationRequest {
  AccountId requester;
  unsigned length{0};
  Rational paid{0};
  /// An allocation the requester already holds; asks for the adjacent block.
  std::optional<AllocationId> growth_proof;
};

struct RenewalRequest {
  AccountId requester;
  AllocationId allocation_id{0};
  Rational paid{0};
};

struct MetadataUpdate {
  AccountId requester;
  AllocationId allocation_id{0};
  /// Empty clears the pointer.
  std::string pointer;
};

struct RoaRequest {
  AccountId requester;
  AllocationId allocation_id{0};
  RoaRecord roa;
};

struct AllocationGrant {
  std::vector<AllocationRecord> records;
  bool aggregatable{false};
  Rational required{0};
  Rational surplus{0};
};

/// The registry bylaws as a single-writer state machine.
///
/// Every mutating call either applies completely or returns a Rejection and
/// leaves the state untouched. Two deliberate exceptions: a rejected fee-
/// bearing request still books its payment, and tripping the rate limit
/// pauses the registry as part of rejecting the request.
class Registry {
public:
  explicit Registry(RegistryConfig config);
  explicit Registry(RegistryState state);

  const RegistryState& state() const noexcept { return state_; }
  const RegistryConfig& config() const noexcept { return state_.config; }

  Result<AllocationGrant> request_allocation(const AllocationRequest& req, Timestamp now,
                                             const ExchangeRate& rate);
  /// Uses the exchange rate last delivered by the oracle.
  Result<AllocationGrant> request_allocation(const AllocationRequest& req, Timestamp now);

  Result<AllocationRecord> renew(const RenewalRequest& req, Timestamp now,
                                 const ExchangeRate& rate);
  Result<AllocationRecord> renew(const RenewalRequest& req, Timestamp now);

  /// Removes every allocation with expiration < now and returns its prefix.
  std::vector<Ipv6Prefix> expire_sweep(Timestamp now);

  Status update_metadata(const MetadataUpdate& update);
  Status register_roa(const RoaRequest& req);
  Status revoke_roa(const RoaRequest& req);
  Status governance_resume(const AccountId& supervisor);
  Status apply_oracle_update(const OracleSample& sample, const AccountId& signer);
  /// Installs config.genesis_rate as of `genesis`. Only valid on a fresh state.
  void seed_genesis_rate(Timestamp genesis);

  /// Books value that reached the contract without buying anything.
  void accept_untargeted_payment(const Rational& amount);

  std::optional<ExchangeRate> current_rate() const;
  const AllocationRecord* find(AllocationId id) const;
  std::vector<AllocationRecord> holdings(const AccountId& holder) const;

  /// The holder's allocations merged into the fewest covering prefixes.
  std::vector<Ipv6Prefix> route_report(const AccountId& holder) const;

  /// Crypto amount a fresh allocation of `length` costs right now.
  Result<Rational> quote(unsigned length, Timestamp now, const ExchangeRate& rate) const;

private:
  struct Plan {
    std::optional<Ipv6Prefix> block;  // contiguous block to tile, if any
    std::optional<Ipv6Prefix> sparse; // otherwise a single sparse slot
    std::optional<Ipv6Prefix> aggregate;
    std::size_t count{1};
  };

  Result<Plan> plan_allocation(const AllocationRequest& req) const;
  bool covered_by(const Ipv6Prefix& block, const AccountId& holder) const;
  void prune_rate_window(Timestamp now);
  Rejection rejected_payment(Rejection r, const Rational& paid);

  RegistryState state_;
};

} // namespace inblock
