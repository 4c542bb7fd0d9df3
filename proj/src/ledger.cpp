#include "inblock/ledger.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <sstream>

namespace inblock {

namespace {

constexpr std::uint8_t kBlockVersion = 0x01;

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void i64(std::int64_t v) { be(static_cast<std::uint64_t>(v), 8); }
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void digest(const Digest& d) { raw(d.bytes); }
  void bytes(ByteView b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }
  void str(std::string_view s) {
    bytes(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }
  void rational(const Rational& r) { str(to_canonical(r)); }
  void prefix(const Ipv6Prefix& p) {
    u128 a = p.address();
    for (int shift = 120; shift >= 0; shift -= 8)
      u8(static_cast<std::uint8_t>(a >> shift));
    u8(static_cast<std::uint8_t>(p.length()));
  }

  Bytes take() { return std::move(out_); }

private:
  void be(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i)
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

class Reader {
public:
  explicit Reader(ByteView in) : in_(in) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(be(8)); }
  Digest digest() {
    auto s = need(32);
    Digest d;
    std::copy(s.begin(), s.end(), d.bytes.begin());
    return d;
  }
  Bytes bytes() {
    auto n = u32();
    auto s = need(n);
    return Bytes(s.begin(), s.end());
  }
  std::string str() {
    auto b = bytes();
    return std::string(b.begin(), b.end());
  }
  Rational rational() {
    std::string s = str();
    Rational r;
    try {
      r = parse_rational(s);
    } catch (const Error&) {
      fail("bad rational");
    }
    if (to_canonical(r) != s)
      fail("non-canonical rational");
    return r;
  }
  bool flag() {
    auto v = u8();
    if (v > 1)
      fail("bad flag");
    return v == 1;
  }
  Ipv6Prefix prefix() {
    u128 a = 0;
    for (int i = 0; i < 16; ++i)
      a = (a << 8) | u8();
    unsigned len = u8();
    try {
      return Ipv6Prefix::make(a, len);
    } catch (const Error&) {
      fail("bad prefix");
    }
  }
  bool done() const { return pos_ == in_.size(); }

  [[noreturn]] static void fail(const std::string& why) {
    throw Error(errc::MalformedTransaction, why);
  }

private:
  ByteView need(std::size_t n) {
    if (in_.size() - pos_ < n)
      fail("truncated");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t be(int width) {
    auto s = need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (auto b : s)
      v = (v << 8) | b;
    return v;
  }

  ByteView in_;
  std::size_t pos_{0};
};

void write_roa(Writer& w, AllocationId id, const RoaRecord& roa) {
  w.u64(id);
  w.prefix(roa.prefix);
  w.u32(roa.origin_asn);
  w.u8(static_cast<std::uint8_t>(roa.max_length));
}

std::pair<AllocationId, RoaRecord> read_roa(Reader& r) {
  AllocationId id = r.u64();
  RoaRecord roa;
  roa.prefix = r.prefix();
  roa.origin_asn = r.u32();
  roa.max_length = r.u8();
  return {id, roa};
}

void write_unsigned(Writer& w, const Transaction& tx) {
  w.digest(tx.from.digest);
  w.bytes(tx.sender_key);
  w.digest(tx.to.digest);
  w.rational(tx.value);
  w.rational(tx.tip);
  w.u64(tx.nonce);
  w.u8(static_cast<std::uint8_t>(tx.payload.index()));
  std::visit(
    [&w](const auto& p) {
      using T = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<T, AllocatePayload>) {
        w.u8(static_cast<std::uint8_t>(p.length));
        w.u8(p.growth_proof ? 1 : 0);
        if (p.growth_proof)
          w.u64(*p.growth_proof);
      } else if constexpr (std::is_same_v<T, RenewPayload>) {
        w.u64(p.allocation_id);
      } else if constexpr (std::is_same_v<T, MetadataPayload>) {
        w.u64(p.allocation_id);
        w.str(p.pointer);
      } else if constexpr (std::is_same_v<T, RoaRegisterPayload>
                           || std::is_same_v<T, RoaRevokePayload>) {
        write_roa(w, p.allocation_id, p.roa);
      } else if constexpr (std::is_same_v<T, OraclePayload>) {
        w.u8(static_cast<std::uint8_t>(p.sample.kind));
        w.rational(p.sample.value);
        w.i64(p.sample.as_of);
        w.str(p.sample.source_id);
      }
    },
    tx.payload);
}

std::string join_prefixes(const std::vector<Ipv6Prefix>& ps) {
  std::string out;
  for (const auto& p : ps) {
    if (!out.empty())
      out += ',';
    out += format_prefix(p);
  }
  return out;
}

} // namespace

std::string_view payload_kind(const Payload& p) noexcept {
  static constexpr std::string_view names[] = {"transfer",     "allocate",   "renew",
                                                "metadata",     "roa_register", "roa_revoke",
                                                "resume",       "oracle_update"};
  return names[p.index()];
}

std::string_view to_string(TxStatus s) noexcept {
  switch (s) {
    case TxStatus::Pending: return "pending";
    case TxStatus::Included: return "included";
    case TxStatus::Confirmed: return "confirmed";
  }
  return "unknown";
}

Bytes Transaction::signing_bytes() const {
  Writer w;
  write_unsigned(w, *this);
  return w.take();
}

Bytes Transaction::encode() const {
  Writer w;
  write_unsigned(w, *this);
  w.bytes(signature);
  return w.take();
}

Transaction Transaction::decode(ByteView bytes) {
  Reader r(bytes);
  Transaction tx;
  tx.from.digest = r.digest();
  tx.sender_key = r.bytes();
  tx.to.digest = r.digest();
  tx.value = r.rational();
  tx.tip = r.rational();
  tx.nonce = r.u64();
  switch (r.u8()) {
    case 0: tx.payload = TransferPayload{}; break;
    case 1: {
      AllocatePayload p;
      p.length = r.u8();
      if (r.flag())
        p.growth_proof = r.u64();
      tx.payload = p;
      break;
    }
    case 2: tx.payload = RenewPayload{r.u64()}; break;
    case 3: {
      MetadataPayload p;
      p.allocation_id = r.u64();
      p.pointer = r.str();
      tx.payload = std::move(p);
      break;
    }
    case 4: {
      auto [id, roa] = read_roa(r);
      tx.payload = RoaRegisterPayload{id, roa};
      break;
    }
    case 5: {
      auto [id, roa] = read_roa(r);
      tx.payload = RoaRevokePayload{id, roa};
      break;
    }
    case 6: tx.payload = ResumePayload{}; break;
    case 7: {
      OraclePayload p;
      auto kind = r.u8();
      if (kind > 2)
        Reader::fail("bad oracle kind");
      p.sample.kind = static_cast<OracleKind>(kind);
      p.sample.value = r.rational();
      p.sample.as_of = r.i64();
      p.sample.source_id = r.str();
      tx.payload = std::move(p);
      break;
    }
    default: Reader::fail("unknown payload kind");
  }
  tx.signature = r.bytes();
  if (!r.done())
    Reader::fail("trailing bytes");
  return tx;
}

Digest Transaction::hash() const {
  return sha256(encode());
}

Transaction make_signed_transaction(const SignatureScheme& scheme, const KeyPair& key,
                                    const AccountId& to, Rational value, Rational tip,
                                    std::uint64_t nonce, Payload payload) {
  Transaction tx;
  tx.from = key.id();
  tx.sender_key = key.public_key;
  tx.to = to;
  tx.value = std::move(value);
  tx.tip = std::move(tip);
  tx.nonce = nonce;
  tx.payload = std::move(payload);
  tx.signature = scheme.sign(key, tx.signing_bytes());
  return tx;
}

// -- blocks -------------------------------------------------------------------

Bytes Block::serialize() const {
  Writer w;
  w.u8(kBlockVersion);
  w.u64(height);
  w.digest(parent_hash);
  w.i64(timestamp);
  w.u32(static_cast<std::uint32_t>(transactions.size()));
  for (const auto& tx : transactions)
    w.bytes(tx.encode());
  return w.take();
}

Digest Block::compute_hash() const {
  return sha256(serialize());
}

std::optional<std::uint64_t> verify_chain(std::span<const Block> chain,
                                          Timestamp block_interval) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Block& b = chain[i];
    if (b.height != i || b.compute_hash() != b.hash)
      return i;
    if (i == 0) {
      if (b.parent_hash != Digest{})
        return i;
      continue;
    }
    const Block& prev = chain[i - 1];
    if (b.parent_hash != prev.hash)
      return i;
    if (block_interval > 0 ? b.timestamp != prev.timestamp + block_interval
                           : b.timestamp <= prev.timestamp)
      return i;
  }
  return std::nullopt;
}

std::string block_to_json_line(const Block& block) {
  nlohmann::ordered_json j;
  j["height"] = block.height;
  j["parent_hash"] = block.parent_hash.hex();
  j["timestamp"] = block.timestamp;
  j["hash"] = block.hash.hex();
  auto txs = nlohmann::ordered_json::array();
  for (const auto& tx : block.transactions)
    txs.push_back(to_hex(tx.encode()));
  j["transactions"] = std::move(txs);
  return j.dump();
}

Block block_from_json_line(std::string_view line) {
  try {
    auto j = nlohmann::json::parse(line);
    Block b;
    b.height = j.at("height").get<std::uint64_t>();
    b.parent_hash = Digest::from_hex(j.at("parent_hash").get<std::string>());
    b.timestamp = j.at("timestamp").get<Timestamp>();
    b.hash = Digest::from_hex(j.at("hash").get<std::string>());
    for (const auto& tx : j.at("transactions"))
      b.transactions.push_back(Transaction::decode(from_hex(tx.get<std::string>())));
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(errc::MalformedTransaction, e.what());
  }
}

std::string export_chain(std::span<const Block> chain) {
  std::string out;
  for (const auto& b : chain) {
    out += block_to_json_line(b);
    out += '\n';
  }
  return out;
}

std::vector<Block> import_chain(std::istream& in) {
  std::vector<Block> chain;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty())
      chain.push_back(block_from_json_line(line));
  return chain;
}

// -- mempool ------------------------------------------------------------------

void Mempool::push(MempoolEntry entry) {
  entry.arrival = next_arrival_++;
  auto& p = pending_[entry.tx.from];
  ++p.count;
  p.spend += entry.tx.value + entry.tx.tip;
  entries_.push_back(std::move(entry));
}

void Mempool::forget(const MempoolEntry& entry) {
  auto it = pending_.find(entry.tx.from);
  if (--it->second.count == 0)
    pending_.erase(it);
  else
    it->second.spend -= entry.tx.value + entry.tx.tip;
}

std::uint64_t Mempool::pending_count(const AccountId& sender) const {
  auto it = pending_.find(sender);
  return it == pending_.end() ? 0 : it->second.count;
}

Rational Mempool::pending_spend(const AccountId& sender) const {
  auto it = pending_.find(sender);
  return it == pending_.end() ? Rational(0) : it->second.spend;
}

// -- ledger -------------------------------------------------------------------

Timestamp end_to_end_allocation_latency(Timestamp inclusion_delay, Timestamp block_interval,
                                        std::uint32_t depth) {
  return inclusion_delay + block_interval + static_cast<Timestamp>(depth) * block_interval;
}

AccountId Ledger::registry_address() {
  static const AccountId id{sha256(std::string_view("inblock.registry"))};
  return id;
}

AccountId Ledger::burn_address() {
  return AccountId{};
}

AccountId Ledger::producer_address() {
  static const AccountId id{sha256(std::string_view("inblock.producer"))};
  return id;
}

Ledger::Ledger(LedgerConfig config, RegistryConfig registry_config,
               std::shared_ptr<const SignatureScheme> scheme,
               std::map<AccountId, Rational> genesis_balances)
  : config_(config), scheme_(std::move(scheme)), registry_(std::move(registry_config)),
    now_(config.genesis_time) {
  if (config_.block_interval <= 0)
    throw Error(errc::BadConfig, "block interval must be positive");
  for (auto& [id, balance] : genesis_balances) {
    if (balance < 0)
      throw Error(errc::BadConfig, "negative genesis balance");
    accounts_[id].balance = std::move(balance);
  }
  registry_.seed_genesis_rate(config_.genesis_time);
  Block genesis;
  genesis.height = 0;
  genesis.timestamp = config_.genesis_time;
  genesis.hash = genesis.compute_hash();
  chain_.push_back(std::move(genesis));
}

Rational Ledger::balance(const AccountId& id) const {
  auto it = accounts_.find(id);
  return it == accounts_.end() ? Rational(0) : it->second.balance;
}

std::uint64_t Ledger::next_nonce(const AccountId& id) const {
  auto it = accounts_.find(id);
  std::uint64_t confirmed = it == accounts_.end() ? 0 : it->second.nonce;
  return confirmed + mempool_.pending_count(id) + 1;
}

Rational Ledger::total_value() const {
  Rational total = 0;
  for (const auto& [id, acc] : accounts_)
    total += acc.balance;
  return total;
}

AccountId Ledger::fee_sink() const {
  const auto& cfg = registry_.config();
  switch (cfg.fee_destination) {
    case FeeDestination::Burn: return burn_address();
    case FeeDestination::Beneficiary:
      return cfg.beneficiary ? *cfg.beneficiary : registry_address();
    case FeeDestination::Contract: break;
  }
  return registry_address();
}

Result<Digest> Ledger::submit(const Transaction& tx) {
  if (AccountId::of_public_key(tx.sender_key) != tx.from
      || !scheme_->verify(tx.sender_key, tx.signing_bytes(), tx.signature))
    return reject(errc::BadSignature);
  if (tx.value < 0 || tx.tip < 0)
    return reject(errc::MalformedTransaction, "negative amount");
  if (!std::holds_alternative<TransferPayload>(tx.payload) && tx.to != registry_address())
    return reject(errc::MisdirectedPayload, "registry payloads must target the registry");
  if (tx.nonce != next_nonce(tx.from))
    return reject(errc::BadNonce, "expected " + std::to_string(next_nonce(tx.from)) + ", got "
                                    + std::to_string(tx.nonce));
  if (balance(tx.from) - mempool_.pending_spend(tx.from) < tx.value + tx.tip)
    return reject(errc::InsufficientBalance);

  MempoolEntry e;
  e.tx = tx;
  e.hash = tx.hash();
  e.submitted_at = now_;
  e.eligible_at = now_ + config_.inclusion_delay;
  Digest h = e.hash;
  tracked_[h] = Inclusion{now_, std::nullopt, std::nullopt};
  mempool_.push(std::move(e));
  return h;
}

void Ledger::advance_to(Timestamp t) {
  if (t < now_)
    throw Error(errc::ClockNotAdvanced, "clock cannot move backwards");
  now_ = t;
  while (chain_.back().timestamp + config_.block_interval <= now_)
    produce_block();
}

const Block& Ledger::produce_block() {
  const Block& parent = chain_.back();
  Timestamp ts = parent.timestamp + config_.block_interval;
  if (ts > now_)
    throw Error(errc::ClockNotAdvanced, "next block due at " + std::to_string(ts));

  Block block;
  block.height = parent.height + 1;
  block.parent_hash = parent.hash;
  block.timestamp = ts;

  auto reclaimed = registry_.expire_sweep(ts);
  if (!reclaimed.empty()) {
    Receipt sweep;
    sweep.block_height = block.height;
    sweep.kind = "expire_sweep";
    sweep.accepted = true;
    sweep.details["reclaimed"] = join_prefixes(reclaimed);
    receipts_.push_back(std::move(sweep));
  }

  auto selected = mempool_.take(ts - config_.block_interval, config_.max_txs_per_block,
                                [this](const AccountId& id) {
                                  auto it = accounts_.find(id);
                                  return (it == accounts_.end() ? 0 : it->second.nonce) + 1;
                                });
  for (auto& entry : selected) {
    Receipt r = apply(entry, block.height, ts);
    auto& inc = tracked_[entry.hash];
    inc.height = block.height;
    inc.receipt = receipts_.size();
    receipts_.push_back(std::move(r));
    block.transactions.push_back(std::move(entry.tx));
  }

  block.hash = block.compute_hash();
  chain_.push_back(std::move(block));
  return chain_.back();
}

Receipt Ledger::apply(const MempoolEntry& entry, std::uint64_t height, Timestamp now) {
  const Transaction& tx = entry.tx;
  Account& sender = accounts_[tx.from];
  // Submission reserved the funds, so the balance always covers the spend.
  sender.balance -= tx.value + tx.tip;
  sender.nonce = tx.nonce;
  accounts_[producer_address()].balance += tx.tip;

  if (tx.to != registry_address()) {
    accounts_[tx.to].balance += tx.value;
    Receipt r;
    r.block_height = height;
    r.tx_hash = entry.hash;
    r.kind = std::string(payload_kind(tx.payload));
    r.accepted = true;
    r.details["value"] = to_canonical(tx.value);
    r.details["to"] = tx.to.hex();
    return r;
  }
  accounts_[fee_sink()].balance += tx.value;
  return execute_payload(tx, entry.hash, height, now);
}

Receipt Ledger::execute_payload(const Transaction& tx, const Digest& hash, std::uint64_t height,
                                Timestamp now) {
  Receipt r;
  r.block_height = height;
  r.tx_hash = hash;
  r.kind = std::string(payload_kind(tx.payload));
  r.details["from"] = tx.from.hex();
  r.details["paid"] = to_canonical(tx.value);

  auto fail = [&r](const Rejection& rej) {
    r.accepted = false;
    r.error = rej.code;
    r.details["error"] = std::string(to_string(rej.code));
    if (!rej.detail.empty())
      r.details["reason"] = rej.detail;
  };
  auto done = [&](const Status& s) {
    if (s.ok())
      r.accepted = true;
    else
      fail(s.error());
  };

  std::visit(
    [&](const auto& p) {
      using T = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<T, TransferPayload>) {
        registry_.accept_untargeted_payment(tx.value);
        r.accepted = true;
      } else if constexpr (std::is_same_v<T, AllocatePayload>) {
        auto res = registry_.request_allocation({tx.from, p.length, tx.value, p.growth_proof}, now);
        if (!res.ok())
          return fail(res.error());
        const auto& g = res.value();
        std::string ids, prefixes;
        for (const auto& rec : g.records) {
          ids += (ids.empty() ? "" : ",") + std::to_string(rec.id);
          prefixes += (prefixes.empty() ? "" : ",") + format_prefix(rec.prefix);
        }
        r.accepted = true;
        r.details["allocation_ids"] = ids;
        r.details["prefixes"] = prefixes;
        r.details["aggregatable"] = g.aggregatable ? "true" : "false";
        r.details["required"] = to_canonical(g.required);
        r.details["surplus"] = to_canonical(g.surplus);
        r.details["expiration"] = std::to_string(g.records.front().expiration);
        if (g.records.front().aggregatable_with)
          r.details["aggregate"] = format_prefix(*g.records.front().aggregatable_with);
      } else if constexpr (std::is_same_v<T, RenewPayload>) {
        auto res = registry_.renew({tx.from, p.allocation_id, tx.value}, now);
        if (!res.ok())
          return fail(res.error());
        r.accepted = true;
        r.details["allocation_id"] = std::to_string(p.allocation_id);
        r.details["expiration"] = std::to_string(res.value().expiration);
      } else {
        if (tx.value > 0)
          registry_.accept_untargeted_payment(tx.value);
        if constexpr (std::is_same_v<T, MetadataPayload>) {
          r.details["allocation_id"] = std::to_string(p.allocation_id);
          done(registry_.update_metadata({tx.from, p.allocation_id, p.pointer}));
        } else if constexpr (std::is_same_v<T, RoaRegisterPayload>) {
          r.details["allocation_id"] = std::to_string(p.allocation_id);
          done(registry_.register_roa({tx.from, p.allocation_id, p.roa}));
        } else if constexpr (std::is_same_v<T, RoaRevokePayload>) {
          r.details["allocation_id"] = std::to_string(p.allocation_id);
          done(registry_.revoke_roa({tx.from, p.allocation_id, p.roa}));
        } else if constexpr (std::is_same_v<T, ResumePayload>) {
          done(registry_.governance_resume(tx.from));
        } else if constexpr (std::is_same_v<T, OraclePayload>) {
          r.details["oracle_kind"] = std::string(to_string(p.sample.kind));
          r.details["value"] = to_canonical(p.sample.value);
          done(registry_.apply_oracle_update(p.sample, tx.from));
        }
      }
    },
    tx.payload);
  return r;
}

const Receipt* Ledger::receipt(const Digest& tx_hash) const {
  auto it = tracked_.find(tx_hash);
  if (it == tracked_.end() || !it->second.receipt)
    return nullptr;
  return &receipts_[*it->second.receipt];
}

Confirmation Ledger::confirmation_status(const Digest& tx_hash) const {
  return confirmation_status(tx_hash, config_.confirmation_depth);
}

Confirmation Ledger::confirmation_status(const Digest& tx_hash, std::uint32_t depth) const {
  auto it = tracked_.find(tx_hash);
  if (it == tracked_.end() || !it->second.height)
    return {TxStatus::Pending, std::nullopt};
  std::uint64_t h = *it->second.height;
  std::uint64_t tip = chain_.back().height;
  return {tip - h >= depth ? TxStatus::Confirmed : TxStatus::Included, h};
}

std::optional<Timestamp> Ledger::confirmation_latency(const Digest& tx_hash) const {
  auto status = confirmation_status(tx_hash);
  if (status.status != TxStatus::Confirmed)
    return std::nullopt;
  const Block& confirming = chain_[*status.height + config_.confirmation_depth];
  return confirming.timestamp - tracked_.at(tx_hash).submitted_at;
}

} // namespace inblock
