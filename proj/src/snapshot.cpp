#include "inblock/snapshot.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace inblock {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatTag = "inblock-snapshot";

json opt_time(const std::optional<Timestamp>& t) {
  return t ? json(*t) : json(nullptr);
}

std::optional<Timestamp> get_opt_time(const json& j) {
  if (j.is_null())
    return std::nullopt;
  return j.get<Timestamp>();
}

json lengths_json(const std::set<unsigned>& s) {
  return json(std::vector<unsigned>(s.begin(), s.end()));
}

std::set<unsigned> get_lengths(const json& j) {
  auto v = j.get<std::vector<unsigned>>();
  return {v.begin(), v.end()};
}

json accounts_json(const std::set<AccountId>& ids) {
  json out = json::array();
  for (const auto& id : ids)
    out.push_back(id.hex());
  return out;
}

std::set<AccountId> get_accounts(const json& j) {
  std::set<AccountId> out;
  for (const auto& v : j)
    out.insert(AccountId::from_hex(v.get<std::string>()));
  return out;
}

json fees_json(const FeeSchedule& f) {
  json base = json::object();
  for (const auto& [len, fee] : f.base_fee_fiat)
    base[std::to_string(len)] = to_canonical(fee);
  return {{"base_fee_fiat", base},
          {"base_gdp_index", to_canonical(f.base_gdp_index)},
          {"current_gdp_index", to_canonical(f.current_gdp_index)}};
}

FeeSchedule get_fees(const json& j) {
  FeeSchedule f;
  f.base_fee_fiat.clear();
  for (const auto& [len, fee] : j.at("base_fee_fiat").items())
    f.base_fee_fiat[static_cast<unsigned>(std::stoul(len))] =
      parse_rational(fee.get<std::string>());
  f.base_gdp_index = parse_rational(j.at("base_gdp_index").get<std::string>());
  f.current_gdp_index = parse_rational(j.at("current_gdp_index").get<std::string>());
  return f;
}

FeeDestination get_destination(const std::string& s) {
  for (auto d : {FeeDestination::Contract, FeeDestination::Burn, FeeDestination::Beneficiary})
    if (to_string(d) == s)
      return d;
  throw Error(errc::CorruptSnapshot, "fee destination " + s);
}

json config_json(const RegistryConfig& c) {
  return {
    {"pool", format_prefix(c.pool)},
    {"allocation_lengths", lengths_json(c.allocation_lengths)},
    {"lifetime_seconds", c.lifetime_seconds},
    {"rate_limit", c.rate_limit},
    {"rate_window_seconds", c.rate_window_seconds},
    {"asn_cap", c.asn_cap},
    {"asn_capped_lengths", lengths_json(c.asn_capped_lengths)},
    {"hold_down_seconds", c.hold_down_seconds},
    {"experiment_end", opt_time(c.experiment_end)},
    {"max_rate_age_seconds", opt_time(c.max_rate_age_seconds)},
    {"genesis_rate", c.genesis_rate ? json(to_canonical(*c.genesis_rate)) : json(nullptr)},
    {"supervisors", accounts_json(c.supervisors)},
    {"oracle_accounts", accounts_json(c.oracle_accounts)},
    {"fees", fees_json(c.fees)},
    {"fee_destination", std::string(to_string(c.fee_destination))},
    {"beneficiary", c.beneficiary ? json(c.beneficiary->hex()) : json(nullptr)},
  };
}

RegistryConfig get_config(const json& j) {
  RegistryConfig c;
  c.pool = parse_prefix(j.at("pool").get<std::string>());
  c.allocation_lengths = get_lengths(j.at("allocation_lengths"));
  c.lifetime_seconds = j.at("lifetime_seconds").get<Timestamp>();
  c.rate_limit = j.at("rate_limit").get<std::uint32_t>();
  c.rate_window_seconds = j.at("rate_window_seconds").get<Timestamp>();
  c.asn_cap = j.at("asn_cap").get<std::uint32_t>();
  c.asn_capped_lengths = get_lengths(j.at("asn_capped_lengths"));
  c.hold_down_seconds = j.at("hold_down_seconds").get<Timestamp>();
  c.experiment_end = get_opt_time(j.at("experiment_end"));
  c.max_rate_age_seconds = get_opt_time(j.at("max_rate_age_seconds"));
  if (!j.at("genesis_rate").is_null())
    c.genesis_rate = parse_rational(j.at("genesis_rate").get<std::string>());
  c.supervisors = get_accounts(j.at("supervisors"));
  c.oracle_accounts = get_accounts(j.at("oracle_accounts"));
  c.fees = get_fees(j.at("fees"));
  c.fee_destination = get_destination(j.at("fee_destination").get<std::string>());
  if (!j.at("beneficiary").is_null())
    c.beneficiary = AccountId::from_hex(j.at("beneficiary").get<std::string>());
  return c;
}

json roa_json(const RoaRecord& r) {
  return {{"prefix", format_prefix(r.prefix)},
          {"origin_asn", r.origin_asn},
          {"max_length", r.max_length}};
}

RoaRecord get_roa(const json& j) {
  return RoaRecord{parse_prefix(j.at("prefix").get<std::string>()),
                   j.at("origin_asn").get<std::uint32_t>(),
                   j.at("max_length").get<unsigned>()};
}

json record_json(const AllocationRecord& r) {
  json roas = json::array();
  for (const auto& roa : r.roas)
    roas.push_back(roa_json(roa));
  return {
    {"id", r.id},
    {"prefix", format_prefix(r.prefix)},
    {"holder", r.holder.hex()},
    {"created", r.created},
    {"expiration", r.expiration},
    {"metadata_pointer", r.metadata_pointer ? json(*r.metadata_pointer) : json(nullptr)},
    {"roas", roas},
    {"aggregatable_with",
     r.aggregatable_with ? json(format_prefix(*r.aggregatable_with)) : json(nullptr)},
  };
}

AllocationRecord get_record(const json& j) {
  AllocationRecord r;
  r.id = j.at("id").get<AllocationId>();
  r.prefix = parse_prefix(j.at("prefix").get<std::string>());
  r.holder = AccountId::from_hex(j.at("holder").get<std::string>());
  r.created = j.at("created").get<Timestamp>();
  r.expiration = j.at("expiration").get<Timestamp>();
  if (!j.at("metadata_pointer").is_null())
    r.metadata_pointer = j.at("metadata_pointer").get<std::string>();
  for (const auto& roa : j.at("roas"))
    r.roas.insert(get_roa(roa));
  if (!j.at("aggregatable_with").is_null())
    r.aggregatable_with = parse_prefix(j.at("aggregatable_with").get<std::string>());
  return r;
}

json registry_json(const RegistryState& s) {
  json nodes = json::array();
  for (const auto& [p, st] : s.pool.nodes())
    nodes.push_back({format_prefix(p), std::string(to_string(st))});
  json allocations = json::array();
  for (const auto& [id, rec] : s.allocations)
    allocations.push_back(record_json(rec));
  json oracle = json::object();
  for (const auto& [kind, sample] : s.oracle)
    oracle[std::string(to_string(kind))] = {{"value", to_canonical(sample.value)},
                                            {"as_of", sample.as_of},
                                            {"source_id", sample.source_id}};
  json quarantine = json::array();
  for (const auto& q : s.quarantine)
    quarantine.push_back({{"prefix", format_prefix(q.prefix)}, {"release_at", q.release_at}});
  return {
    {"config", config_json(s.config)},
    {"pool", {{"root", format_prefix(s.pool.root())}, {"nodes", nodes}}},
    {"allocations", allocations},
    {"fee_schedule", fees_json(s.fee_schedule)},
    {"rate_window", json(std::vector<Timestamp>(s.rate_window.begin(), s.rate_window.end()))},
    {"paused", s.paused},
    {"next_id", s.next_id},
    {"oracle", oracle},
    {"quarantine", quarantine},
    {"accounting",
     {{"collected", to_canonical(s.accounting.collected)},
      {"surplus", to_canonical(s.accounting.surplus)},
      {"rejected_payments", to_canonical(s.accounting.rejected_payments)}}},
  };
}

NodeState get_node_state(const std::string& s) {
  for (auto st : {NodeState::Free, NodeState::Split, NodeState::Allocated})
    if (to_string(st) == s)
      return st;
  throw Error(errc::CorruptSnapshot, "node state " + s);
}

RegistryState get_registry(const json& j) {
  RegistryState s(get_config(j.at("config")));
  const auto& pool = j.at("pool");
  Ipv6Prefix root = parse_prefix(pool.at("root").get<std::string>());
  std::map<Ipv6Prefix, NodeState> nodes;
  for (const auto& n : pool.at("nodes"))
    nodes.emplace(parse_prefix(n.at(0).get<std::string>()),
                  get_node_state(n.at(1).get<std::string>()));
  s.pool = PoolState::from_nodes(root, nodes);
  for (const auto& a : j.at("allocations")) {
    AllocationRecord rec = get_record(a);
    s.by_prefix.emplace(rec.prefix, rec.id);
    s.allocations.emplace(rec.id, std::move(rec));
  }
  s.fee_schedule = get_fees(j.at("fee_schedule"));
  for (const auto& t : j.at("rate_window"))
    s.rate_window.push_back(t.get<Timestamp>());
  s.paused = j.at("paused").get<bool>();
  s.next_id = j.at("next_id").get<AllocationId>();
  for (const auto& [kind, v] : j.at("oracle").items())
    s.oracle[parse_oracle_kind(kind)] =
      OracleSample{parse_oracle_kind(kind), parse_rational(v.at("value").get<std::string>()),
                   v.at("as_of").get<Timestamp>(), v.at("source_id").get<std::string>()};
  for (const auto& q : j.at("quarantine"))
    s.quarantine.push_back(
      {parse_prefix(q.at("prefix").get<std::string>()), q.at("release_at").get<Timestamp>()});
  const auto& acc = j.at("accounting");
  s.accounting.collected = parse_rational(acc.at("collected").get<std::string>());
  s.accounting.surplus = parse_rational(acc.at("surplus").get<std::string>());
  s.accounting.rejected_payments = parse_rational(acc.at("rejected_payments").get<std::string>());
  if (auto why = s.check_invariants(); !why.empty())
    throw Error(errc::CorruptSnapshot, why);
  return s;
}

json ledger_json(const LedgerSummary& l) {
  json accounts = json::object();
  for (const auto& [id, acc] : l.accounts)
    accounts[id.hex()] = {{"balance", to_canonical(acc.balance)}, {"nonce", acc.nonce}};
  return {{"height", l.height},
          {"tip_hash", l.tip_hash.hex()},
          {"clock", l.clock},
          {"accounts", accounts}};
}

LedgerSummary get_ledger(const json& j) {
  LedgerSummary l;
  l.height = j.at("height").get<std::uint64_t>();
  l.tip_hash = Digest::from_hex(j.at("tip_hash").get<std::string>());
  l.clock = j.at("clock").get<Timestamp>();
  for (const auto& [id, acc] : j.at("accounts").items())
    l.accounts[AccountId::from_hex(id)] =
      Account{parse_rational(acc.at("balance").get<std::string>()),
              acc.at("nonce").get<std::uint64_t>()};
  return l;
}

std::string digest_input(const json& format, const json& version, const json& content) {
  return format.dump() + "|" + version.dump() + "|" + content.dump();
}

} // namespace

Snapshot snapshot_of(const Ledger& ledger, std::map<std::string, AccountId> names) {
  LedgerSummary summary;
  summary.height = ledger.chain().back().height;
  summary.tip_hash = ledger.chain().back().hash;
  summary.clock = ledger.now();
  summary.accounts = ledger.accounts();
  return Snapshot{ledger.registry().state(), std::move(summary), std::move(names)};
}

std::string write_snapshot(const Snapshot& snapshot) {
  json names = json::object();
  for (const auto& [name, id] : snapshot.names)
    names[name] = id.hex();
  json content = {
    {"registry", registry_json(snapshot.registry)},
    {"ledger", snapshot.ledger ? ledger_json(*snapshot.ledger) : json(nullptr)},
    {"names", names},
  };
  json format = std::string(kFormatTag);
  json version = kSnapshotVersion;
  json doc = {{"format", format},
              {"version", version},
              {"digest", sha256(digest_input(format, version, content)).hex()},
              {"content", content}};
  return doc.dump() + "\n";
}

Snapshot read_snapshot(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(errc::CorruptSnapshot, e.what());
  }
  try {
    if (!doc.is_object() || doc.size() != 4)
      throw Error(errc::CorruptSnapshot, "unexpected document shape");
    const json& content = doc.at("content");
    auto want = sha256(digest_input(doc.at("format"), doc.at("version"), content)).hex();
    if (doc.at("digest").get<std::string>() != want)
      throw Error(errc::CorruptSnapshot, "digest mismatch");
    if (doc.at("format").get<std::string>() != kFormatTag)
      throw Error(errc::CorruptSnapshot, "not an inblock snapshot");
    if (doc.at("version").get<int>() != kSnapshotVersion)
      throw Error(errc::VersionMismatch,
                  "snapshot version " + doc.at("version").dump() + ", expected "
                    + std::to_string(kSnapshotVersion));
    Snapshot s{get_registry(content.at("registry")), std::nullopt, {}};
    if (!content.at("ledger").is_null())
      s.ledger = get_ledger(content.at("ledger"));
    for (const auto& [name, id] : content.at("names").items())
      s.names[name] = AccountId::from_hex(id.get<std::string>());
    // Anything that survives parsing must also be byte-canonical.
    std::string canonical = write_snapshot(s);
    std::string_view trimmed = bytes;
    if (canonical != trimmed && canonical.substr(0, canonical.size() - 1) != trimmed)
      throw Error(errc::CorruptSnapshot, "non-canonical encoding");
    return s;
  } catch (const json::exception& e) {
    throw Error(errc::CorruptSnapshot, e.what());
  } catch (const Error& e) {
    if (e.code() == errc::VersionMismatch || e.code() == errc::CorruptSnapshot)
      throw;
    throw Error(errc::CorruptSnapshot, e.what());
  }
}

Snapshot load_snapshot_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(errc::UnreadableInput, path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_snapshot(ss.str());
}

void save_snapshot_file(const Snapshot& snapshot, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(errc::UnreadableInput, "cannot write " + path);
  out << write_snapshot(snapshot);
}

} // namespace inblock
