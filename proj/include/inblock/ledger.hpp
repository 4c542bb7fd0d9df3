#pragma once

#include "inblock/crypto.hpp"
#include "inblock/errors.hpp"
#include "inblock/oracles.hpp"
#include "inblock/rational.hpp"
#include "inblock/registry.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace inblock {

// -- transaction payloads -----------------------------------------------------

struct TransferPayload {
  friend bool operator==(const TransferPayload&, const TransferPayload&) = default;
};

struct AllocatePayload {
  unsigned length{0};
  std::optional<AllocationId> growth_proof;
  friend bool operator==(const AllocatePayload&, const AllocatePayload&) = default;
};

struct RenewPayload {
  AllocationId allocation_id{0};
  friend bool operator==(const RenewPayload&, const RenewPayload&) = default;
};

struct MetadataPayload {
  AllocationId allocation_id{0};
  std::string pointer;
  friend bool operator==(const MetadataPayload&, const MetadataPayload&) = default;
};

struct RoaRegisterPayload {
  AllocationId allocation_id{0};
  RoaRecord roa;
  friend bool operator==(const RoaRegisterPayload&, const RoaRegisterPayload&) = default;
};

struct RoaRevokePayload {
  AllocationId allocation_id{0};
  RoaRecord roa;
  friend bool operator==(const RoaRevokePayload&, const RoaRevokePayload&) = default;
};

struct ResumePayload {
  friend bool operator==(const ResumePayload&, const ResumePayload&) = default;
};

struct OraclePayload {
  OracleSample sample;
  friend bool operator==(const OraclePayload&, const OraclePayload&) = default;
};

/// Variant index doubles as the wire tag, so keep the order stable.
using Payload = std::variant<TransferPayload, AllocatePayload, RenewPayload, MetadataPayload,
                             RoaRegisterPayload, RoaRevokePayload, ResumePayload, OraclePayload>;

std::string_view payload_kind(const Payload& p) noexcept;

// -- transactions and blocks --------------------------------------------------

struct Transaction {
  AccountId from;
  Bytes sender_key;
  AccountId to;
  Rational value{0};
  Rational tip{0};
  std::uint64_t nonce{0};
  Payload payload;
  Bytes signature;

  /// Canonical encoding without the signature: the signed message.
  Bytes signing_bytes() const;
  /// Canonical encoding: length-prefixed fields in declaration order,
  /// integers big-endian fixed width.
  Bytes encode() const;
  /// Strict inverse of encode(). Throws Error(MalformedTransaction).
  static Transaction decode(ByteView bytes);
  Digest hash() const;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

Transaction make_signed_transaction(const SignatureScheme& scheme, const KeyPair& key,
                                    const AccountId& to, Rational value, Rational tip,
                                    std::uint64_t nonce, Payload payload);

struct Block {
  std::uint64_t height{0};
  Digest parent_hash;
  Timestamp timestamp{0};
  std::vector<Transaction> transactions;
  Digest hash;

  /// 0x01 | height u64 | parent 32B | timestamp u64 | count u32 |
  /// per transaction: u32 length + canonical encoding.
  Bytes serialize() const;
  Digest compute_hash() const;
};

/// Recomputes every hash, parent link, and (when block_interval > 0) the
/// timestamp spacing. Returns the first failing height, or nullopt if the
/// chain is intact.
std::optional<std::uint64_t> verify_chain(std::span<const Block> chain,
                                          Timestamp block_interval = 0);

/// One JSON object per line: height, parent_hash, timestamp, hash, and the
/// hex-encoded canonical transactions.
std::string block_to_json_line(const Block& block);
/// Throws Error(MalformedTransaction) when the line cannot be decoded.
Block block_from_json_line(std::string_view line);

std::string export_chain(std::span<const Block> chain);
std::vector<Block> import_chain(std::istream& in);

// -- mempool ------------------------------------------------------------------

struct MempoolEntry {
  Transaction tx;
  Digest hash;
  std::uint64_t arrival{0};
  Timestamp submitted_at{0};
  Timestamp eligible_at{0};
};

/// Pending transactions. Selection order is tip descending, then arrival;
/// a sender's transactions are only taken in nonce order.
class Mempool {
public:
  void push(MempoolEntry entry);

  /// Removes and returns up to `max` transactions eligible at `mining_start`.
  /// `next_nonce(sender)` gives the nonce the chain expects next.
  template <class NextNonce>
  std::vector<MempoolEntry> take(Timestamp mining_start, std::size_t max, NextNonce next_nonce);

  std::size_t size() const noexcept { return entries_.size(); }
  std::uint64_t pending_count(const AccountId& sender) const;
  Rational pending_spend(const AccountId& sender) const;

private:
  struct Pending {
    std::uint64_t count{0};
    Rational spend{0};
  };

  void forget(const MempoolEntry& entry);

  std::vector<MempoolEntry> entries_;
  std::map<AccountId, Pending> pending_;
  std::uint64_t next_arrival_{0};
};

// -- ledger -------------------------------------------------------------------

struct LedgerConfig {
  Timestamp genesis_time{1'600'000'000};
  Timestamp block_interval{17};
  std::uint32_t confirmation_depth{12};
  /// Time a submitted transaction waits before a producer will pick it up.
  Timestamp inclusion_delay{120};
  std::size_t max_txs_per_block{500};

  friend bool operator==(const LedgerConfig&, const LedgerConfig&) = default;
};

struct Account {
  Rational balance{0};
  std::uint64_t nonce{0};

  friend bool operator==(const Account&, const Account&) = default;
};

enum class TxStatus { Pending, Included, Confirmed };

std::string_view to_string(TxStatus s) noexcept;

struct Confirmation {
  TxStatus status{TxStatus::Pending};
  std::optional<std::uint64_t> height;
};

/// Outcome of one applied transaction (or of a block's expiration sweep,
/// which carries no transaction hash).
struct Receipt {
  std::uint64_t block_height{0};
  std::optional<Digest> tx_hash;
  std::string kind;
  bool accepted{false};
  std::optional<errc> error;
  std::map<std::string, std::string> details;
};

/// A single deterministic block producer on a simulated clock, executing
/// registry payloads against the contract.
class Ledger {
public:
  Ledger(LedgerConfig config, RegistryConfig registry_config,
         std::shared_ptr<const SignatureScheme> scheme,
         std::map<AccountId, Rational> genesis_balances);

  static AccountId registry_address();
  static AccountId burn_address();
  static AccountId producer_address();

  const LedgerConfig& config() const noexcept { return config_; }
  const SignatureScheme& scheme() const noexcept { return *scheme_; }

  Result<Digest> submit(const Transaction& tx);

  Timestamp now() const noexcept { return now_; }
  /// Moves the clock forward, producing every block that falls due.
  void advance_to(Timestamp t);
  void advance_by(Timestamp dt) { advance_to(now_ + dt); }
  /// Produces the next block. Throws Error(ClockNotAdvanced) when the clock
  /// has not reached the next block time.
  const Block& produce_block();

  Confirmation confirmation_status(const Digest& tx_hash) const;
  Confirmation confirmation_status(const Digest& tx_hash, std::uint32_t depth) const;
  /// Seconds from submission to confirmation at the configured depth.
  std::optional<Timestamp> confirmation_latency(const Digest& tx_hash) const;

  const std::vector<Block>& chain() const noexcept { return chain_; }
  const Registry& registry() const noexcept { return registry_; }
  const std::map<AccountId, Account>& accounts() const noexcept { return accounts_; }
  const std::vector<Receipt>& receipts() const noexcept { return receipts_; }
  const Receipt* receipt(const Digest& tx_hash) const;
  const Mempool& mempool() const noexcept { return mempool_; }

  Rational balance(const AccountId& id) const;
  /// Nonce the next transaction from `id` must carry.
  std::uint64_t next_nonce(const AccountId& id) const;
  /// Sum of all balances, including the contract and fee sinks.
  Rational total_value() const;

private:
  Receipt apply(const MempoolEntry& entry, std::uint64_t height, Timestamp now);
  Receipt execute_payload(const Transaction& tx, const Digest& hash, std::uint64_t height,
                          Timestamp now);
  AccountId fee_sink() const;

  struct Inclusion {
    Timestamp submitted_at{0};
    std::optional<std::uint64_t> height;
    std::optional<std::size_t> receipt;
  };

  LedgerConfig config_;
  std::shared_ptr<const SignatureScheme> scheme_;
  Registry registry_;
  std::map<AccountId, Account> accounts_;
  Mempool mempool_;
  std::vector<Block> chain_;
  std::vector<Receipt> receipts_;
  std::map<Digest, Inclusion> tracked_;
  Timestamp now_;
};

/// Closed-form submission-to-confirmation delay:
/// inclusion_delay + block_interval + depth x block_interval.
Timestamp end_to_end_allocation_latency(Timestamp inclusion_delay, Timestamp block_interval,
                                        std::uint32_t depth);

// -- template implementation --------------------------------------------------

template <class NextNonce>
std::vector<MempoolEntry> Mempool::take(Timestamp mining_start, std::size_t max,
                                        NextNonce next_nonce) {
  std::vector<std::size_t> order;
  order.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].eligible_at <= mining_start)
      order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = entries_[a];
    const auto& y = entries_[b];
    if (x.tx.tip != y.tx.tip)
      return x.tx.tip > y.tx.tip;
    return x.arrival < y.arrival;
  });

  std::map<AccountId, std::uint64_t> expected;
  std::vector<bool> taken(entries_.size(), false);
  std::vector<MempoolEntry> out;
  // A transaction skipped for being ahead of its sender's nonce can become
  // ready once an earlier one is taken, so sweep until nothing moves.
  bool progress = true;
  while (progress && out.size() < max) {
    progress = false;
    for (std::size_t idx : order) {
      if (out.size() >= max)
        break;
      if (taken[idx])
        continue;
      const auto& e = entries_[idx];
      auto it = expected.find(e.tx.from);
      if (it == expected.end())
        it = expected.emplace(e.tx.from, next_nonce(e.tx.from)).first;
      if (e.tx.nonce != it->second)
        continue;
      ++it->second;
      taken[idx] = true;
      forget(e);
      out.push_back(e);
      progress = true;
    }
  }

  std::vector<MempoolEntry> rest;
  rest.reserve(entries_.size() - out.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (!taken[i])
      rest.push_back(std::move(entries_[i]));
  entries_ = std::move(rest);
  return out;
}

} // namespace inblock
