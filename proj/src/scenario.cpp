#include "inblock/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace inblock {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void parse_fail(std::size_t line, const std::string& message) {
  throw Error(errc::ScenarioParseError, "line " + std::to_string(line) + ": " + message);
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string w;
  while (in >> w) {
    if (w.front() == '#')
      break;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(',', start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

// `repeat` substitutes the 1-based iteration number for {i} in its words.
std::vector<std::string> substitute(const std::vector<std::string>& w, std::uint64_t i) {
  std::vector<std::string> out = w;
  for (auto& word : out)
    for (auto pos = word.find("{i}"); pos != std::string::npos; pos = word.find("{i}", pos))
      word.replace(pos, 3, std::to_string(i));
  return out;
}

bool is_uint(std::string_view s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (c < '0' || c > '9')
      return false;
  return true;
}

std::uint64_t to_uint(std::size_t line, std::string_view s) {
  if (!is_uint(s))
    parse_fail(line, "expected a non-negative integer, got '" + std::string(s) + "'");
  try {
    return std::stoull(std::string(s));
  } catch (const std::exception&) {
    parse_fail(line, "integer out of range: " + std::string(s));
  }
}

// -- static checking ----------------------------------------------------------

struct Checker {
  std::set<std::string> accounts;
  std::set<std::string> labels;

  void account(std::size_t line, const std::string& name) const {
    if (!accounts.count(name) && name != "registry" && name != "producer" && name != "burn")
      parse_fail(line, "unknown account '" + name + "'");
  }

  void ref(std::size_t line, const std::string& r) const {
    if (is_uint(r))
      return;
    if (r.size() < 2 || r.front() != '@')
      parse_fail(line, "expected @label or an allocation id, got '" + r + "'");
    std::string label = r.substr(1);
    if (auto dot = label.rfind('.'); dot != std::string::npos && is_uint(label.substr(dot + 1)))
      label.resize(dot);
    if (!labels.count(label))
      parse_fail(line, "reference to undefined label '" + label + "'");
  }

  void label(std::size_t line, const std::string& l) const {
    if (!labels.count(l))
      parse_fail(line, "undefined label '" + l + "'");
  }

  void need(std::size_t line, const std::vector<std::string>& w, std::size_t lo,
            std::size_t hi) const {
    if (w.size() < lo || w.size() > hi)
      parse_fail(line, "wrong number of arguments for '" + w[0] + "'");
  }

  // Checks `submit ...` starting at w[i] and returns its label.
  std::string submit(std::size_t line, const std::vector<std::string>& w, std::size_t i) const {
    if (w.size() < i + 4)
      parse_fail(line, "submit needs <label> <account> <action>");
    const std::string& label = w[i + 1];
    if (labels.count(label))
      parse_fail(line, "label '" + label + "' already defined");
    if (label.find_first_of("@.#,") != std::string::npos)
      parse_fail(line, "labels may not contain @ . # or ,");
    account(line, w[i + 2]);
    std::size_t a = i + 3;
    const std::string& action = w[a];
    std::size_t end = a + 1;
    auto arg = [&](std::size_t k) -> const std::string& {
      if (a + k >= w.size())
        parse_fail(line, "missing argument for " + action);
      return w[a + k];
    };
    if (action == "allocate") {
      to_uint(line, arg(1));
      end = a + 2;
      if (end < w.size() && w[end] == "grow") {
        ref(line, arg(3));
        end = a + 4;
      }
    } else if (action == "renew") {
      ref(line, arg(1));
      end = a + 2;
    } else if (action == "metadata") {
      ref(line, arg(1));
      arg(2);
      end = a + 3;
    } else if (action == "roa" || action == "revoke_roa") {
      ref(line, arg(1));
      try {
        parse_prefix(arg(2));
      } catch (const Error& e) {
        parse_fail(line, e.what());
      }
      to_uint(line, arg(3));
      end = a + 4;
      if (end < w.size() && is_uint(w[end]))
        ++end;
    } else if (action == "resume") {
      end = a + 1;
    } else if (action == "oracle") {
      try {
        parse_oracle_kind(arg(1));
        if (arg(2) != "fixture")
          parse_rational(arg(2));
      } catch (const Error& e) {
        parse_fail(line, e.what());
      }
      end = a + 3;
    } else if (action == "transfer") {
      account(line, arg(1));
      try {
        parse_rational(arg(2));
      } catch (const Error& e) {
        parse_fail(line, e.what());
      }
      end = a + 3;
    } else {
      parse_fail(line, "unknown action '" + action + "'");
    }
    while (end < w.size()) {
      if (end + 1 >= w.size())
        parse_fail(line, "dangling '" + w[end] + "'");
      const std::string& v = w[end + 1];
      if (w[end] == "pay") {
        if (v != "fee" && !v.starts_with("fee*")) {
          try {
            parse_rational(v);
          } catch (const Error& e) {
            parse_fail(line, e.what());
          }
        } else if (v.starts_with("fee*")) {
          to_uint(line, v.substr(4));
        }
      } else if (w[end] == "tip") {
        try {
          parse_rational(v);
        } catch (const Error& e) {
          parse_fail(line, e.what());
        }
      } else {
        parse_fail(line, "unexpected '" + w[end] + "'");
      }
      end += 2;
    }
    return label;
  }

  void expect(std::size_t line, const std::vector<std::string>& w) const {
    if (w.size() < 2)
      parse_fail(line, "expect what?");
    const std::string& what = w[1];
    if (what == "outcome") {
      need(line, w, 4, 5);
      label(line, w[2]);
    } else if (what == "prefix" || what == "aggregatable" || what == "status"
               || what == "latency") {
      need(line, w, 4, 4);
      label(line, w[2]);
    } else if (what == "allocations" || what == "paused" || what == "pool_free"
               || what == "collected" || what == "surplus" || what == "rejected_payments"
               || what == "height") {
      need(line, w, 3, 3);
    } else if (what == "chain") {
      need(line, w, 3, 3);
      if (w[2] != "ok")
        parse_fail(line, "expect chain ok");
    } else if (what == "value_conserved") {
      need(line, w, 2, 2);
    } else if (what == "routes" || what == "holdings") {
      need(line, w, 4, 4);
      account(line, w[2]);
    } else if (what == "balance") {
      need(line, w, 4, 4);
      account(line, w[2]);
    } else if (what == "active" || what == "expiration" || what == "roas"
               || what == "metadata") {
      need(line, w, 4, 4);
      ref(line, w[2]);
    } else if (what == "utilization") {
      need(line, w, 4, 4);
    } else if (what == "tally") {
      need(line, w, 7, 7);
      label(line, w[2] + "#1");
    } else if (what == "first_rejected") {
      need(line, w, 5, 5);
      label(line, w[2] + "#1");
    } else {
      parse_fail(line, "unknown expectation '" + what + "'");
    }
  }
};

} // namespace

Scenario parse_scenario(std::string_view text, const std::string& base_dir) {
  Scenario sc;
  Checker check;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  bool in_steps = false;
  while (std::getline(in, raw)) {
    ++lineno;
    auto w = tokenize(raw);
    if (w.empty())
      continue;
    const std::string& verb = w[0];
    if (verb == "name") {
      if (w.size() < 2)
        parse_fail(lineno, "name needs a value");
      std::string n;
      for (std::size_t i = 1; i < w.size(); ++i)
        n += (i > 1 ? " " : "") + w[i];
      sc.name = n;
    } else if (verb == "set") {
      check.need(lineno, w, 3, 3);
      sc.settings.emplace_back(w[1], w[2]);
    } else if (verb == "account") {
      if (in_steps)
        parse_fail(lineno, "accounts must be declared before the first step");
      if (w.size() < 3)
        parse_fail(lineno, "account needs <name> <balance>");
      if (check.accounts.count(w[1]) || w[1] == "registry" || w[1] == "producer"
          || w[1] == "burn")
        parse_fail(lineno, "account '" + w[1] + "' already defined");
      ScenarioAccount acc;
      acc.name = w[1];
      try {
        acc.balance = parse_rational(w[2]);
      } catch (const Error& e) {
        parse_fail(lineno, e.what());
      }
      if (acc.balance < 0)
        parse_fail(lineno, "negative balance");
      for (std::size_t i = 3; i < w.size(); ++i) {
        if (w[i] == "supervisor")
          acc.supervisor = true;
        else if (w[i] == "oracle")
          acc.oracle = true;
        else if (w[i] == "beneficiary")
          acc.beneficiary = true;
        else
          parse_fail(lineno, "unknown account role '" + w[i] + "'");
      }
      check.accounts.insert(acc.name);
      sc.accounts.push_back(std::move(acc));
    } else if (verb == "oracle_fixture") {
      check.need(lineno, w, 2, 2);
      std::filesystem::path p(w[1]);
      sc.oracle_fixture = p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
    } else if (verb == "advance" || verb == "blocks") {
      check.need(lineno, w, 2, 2);
      to_uint(lineno, w[1]);
      in_steps = true;
      sc.steps.push_back({lineno, w});
    } else if (verb == "advance_to") {
      check.need(lineno, w, 2, 2);
      to_uint(lineno, w[1].front() == '+' ? w[1].substr(1) : w[1]);
      in_steps = true;
      sc.steps.push_back({lineno, w});
    } else if (verb == "settle") {
      check.need(lineno, w, 1, 1);
      in_steps = true;
      sc.steps.push_back({lineno, w});
    } else if (verb == "submit") {
      check.labels.insert(check.submit(lineno, w, 0));
      in_steps = true;
      sc.steps.push_back({lineno, w});
    } else if (verb == "repeat") {
      if (w.size() < 3 || w[2] != "submit")
        parse_fail(lineno, "repeat <n> submit ...");
      auto n = to_uint(lineno, w[1]);
      if (n == 0)
        parse_fail(lineno, "repeat count must be positive");
      std::string base = check.submit(lineno, substitute(w, 1), 2);
      for (std::uint64_t i = 1; i <= n; ++i)
        check.labels.insert(base + "#" + std::to_string(i));
      in_steps = true;
      sc.steps.push_back({lineno, w});
    } else if (verb == "expect") {
      check.expect(lineno, w);
      in_steps = true;
      sc.steps.push_back({lineno, w});
    } else {
      parse_fail(lineno, "unknown directive '" + verb + "'");
    }
  }
  if (sc.name.empty())
    sc.name = "unnamed";
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(errc::ScenarioParseError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path();
  return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

AccountId scenario_account_id(const SimulationConfig& config, std::string_view name) {
  auto scheme = scheme_by_name(config.signature_scheme);
  auto seed = sha256("inblock.scenario|" + std::to_string(config.seed) + "|" + std::string(name));
  return scheme->derive_keypair(seed).id();
}

std::string RunResult::event_log() const {
  std::string out;
  for (const auto& e : events)
    out += e + "\n";
  return out;
}

std::string RunResult::chain_export() const {
  return export_chain(ledger->chain());
}

Snapshot RunResult::snapshot() const {
  return snapshot_of(*ledger, names);
}

// -- execution ----------------------------------------------------------------

namespace {

struct Submission {
  std::string account;
  std::optional<Digest> hash;
  std::optional<errc> refused;
};

class Runner {
public:
  Runner(const Scenario& sc, const std::vector<Setting>& overrides) : sc_(sc) {
    result_.name = sc.name;
    apply_settings(cfg_, sc.settings);
    apply_settings(cfg_, overrides);
    scheme_ = scheme_by_name(cfg_.signature_scheme);

    std::map<AccountId, Rational> balances;
    for (const auto& acc : sc.accounts) {
      auto seed =
        sha256("inblock.scenario|" + std::to_string(cfg_.seed) + "|" + acc.name);
      KeyPair kp = scheme_->derive_keypair(seed);
      AccountId id = kp.id();
      keys_.emplace(acc.name, kp);
      result_.names.emplace(acc.name, id);
      balances[id] += acc.balance;
      genesis_total_ += acc.balance;
      if (acc.supervisor)
        cfg_.registry.supervisors.insert(id);
      if (acc.oracle)
        cfg_.registry.oracle_accounts.insert(id);
      if (acc.beneficiary)
        cfg_.registry.beneficiary = id;
    }
    if (sc.oracle_fixture)
      fixture_.emplace(FixtureProvider::load_file(*sc.oracle_fixture));
    result_.config = cfg_;
    ledger_ = std::make_shared<Ledger>(cfg_.ledger, cfg_.registry, scheme_, balances);
  }

  RunResult run() {
    for (const auto& step : sc_.steps) {
      line_ = step.line;
      try {
        execute(step.words);
      } catch (const Error& e) {
        if (e.code() == errc::ScenarioParseError)
          throw;
        parse_fail(line_, e.what());
      }
      flush_receipts();
    }
    result_.ledger = ledger_;
    return std::move(result_);
  }

private:
  void execute(const std::vector<std::string>& w) {
    const std::string& verb = w[0];
    if (verb == "advance") {
      ledger_->advance_by(static_cast<Timestamp>(to_uint(line_, w[1])));
    } else if (verb == "advance_to") {
      Timestamp t = w[1].front() == '+'
                      ? cfg_.ledger.genesis_time
                          + static_cast<Timestamp>(to_uint(line_, w[1].substr(1)))
                      : static_cast<Timestamp>(to_uint(line_, w[1]));
      if (t < ledger_->now())
        parse_fail(line_, "advance_to moves the clock backwards");
      ledger_->advance_to(t);
    } else if (verb == "blocks") {
      auto n = static_cast<Timestamp>(to_uint(line_, w[1]));
      ledger_->advance_to(ledger_->chain().back().timestamp + n * cfg_.ledger.block_interval);
    } else if (verb == "settle") {
      settle();
    } else if (verb == "submit") {
      submit(w, 0, w[1]);
    } else if (verb == "repeat") {
      auto n = to_uint(line_, w[1]);
      for (std::uint64_t i = 1; i <= n; ++i)
        submit(substitute(w, i), 2, w[3] + "#" + std::to_string(i));
    } else if (verb == "expect") {
      if (auto failure = expect(w))
        result_.failures.push_back({line_, *failure});
    }
  }

  void next_block() {
    ledger_->advance_to(ledger_->chain().back().timestamp + cfg_.ledger.block_interval);
  }

  void settle() {
    while (ledger_->mempool().size() > 0)
      next_block();
    std::uint64_t last = 0;
    for (const auto& [label, s] : subs_)
      if (s.hash)
        if (auto c = ledger_->confirmation_status(*s.hash); c.height)
          last = std::max(last, *c.height);
    while (ledger_->chain().back().height < last + cfg_.ledger.confirmation_depth)
      next_block();
  }

  AccountId account_id(const std::string& name) const {
    if (name == "registry")
      return Ledger::registry_address();
    if (name == "producer")
      return Ledger::producer_address();
    if (name == "burn")
      return Ledger::burn_address();
    return result_.names.at(name);
  }

  const Receipt* receipt_of(const std::string& label) const {
    auto it = subs_.find(label);
    if (it == subs_.end() || !it->second.hash)
      return nullptr;
    return ledger_->receipt(*it->second.hash);
  }

  // Resolves a reference, or nullopt when the submission has not (yet)
  // produced the allocation.
  std::optional<AllocationId> resolve(const std::string& r) const {
    if (is_uint(r))
      return to_uint(line_, r);
    std::string label = r.substr(1);
    std::size_t index = 0;
    if (auto dot = label.rfind('.'); dot != std::string::npos && is_uint(label.substr(dot + 1))) {
      index = to_uint(line_, label.substr(dot + 1));
      label.resize(dot);
    }
    const Receipt* rc = receipt_of(label);
    if (!rc || !rc->accepted)
      return std::nullopt;
    auto it = rc->details.find("allocation_ids");
    if (it == rc->details.end())
      return std::nullopt;
    auto ids = split_commas(it->second);
    if (index >= ids.size())
      return std::nullopt;
    return to_uint(line_, ids[index]);
  }

  AllocationId must_resolve(const std::string& r) const {
    auto id = resolve(r);
    if (!id)
      parse_fail(line_, r + " has not produced an allocation yet");
    return *id;
  }

  Rational fee_for(unsigned length, std::uint64_t multiple) const {
    auto rate = ledger_->registry().current_rate();
    if (!rate)
      parse_fail(line_, "pay fee needs an exchange rate (set genesis_rate or submit an oracle update)");
    auto q = ledger_->registry().quote(length, ledger_->now(), *rate);
    if (!q)
      parse_fail(line_, "cannot quote /" + std::to_string(length) + ": "
                          + std::string(to_string(q.code())));
    return q.value() * multiple;
  }

  void submit(const std::vector<std::string>& w, std::size_t i, const std::string& label) {
    const std::string& account = w[i + 2];
    std::size_t a = i + 3;
    const std::string& action = w[a];
    Payload payload;
    AccountId to = Ledger::registry_address();
    Rational value = 0;
    std::optional<unsigned> fee_length;
    std::size_t end = a + 1;

    if (action == "allocate") {
      AllocatePayload p;
      p.length = static_cast<unsigned>(to_uint(line_, w[a + 1]));
      end = a + 2;
      if (end < w.size() && w[end] == "grow") {
        p.growth_proof = must_resolve(w[a + 3]);
        end = a + 4;
      }
      fee_length = p.length;
      payload = p;
    } else if (action == "renew") {
      RenewPayload p;
      p.allocation_id = must_resolve(w[a + 1]);
      if (const auto* rec = ledger_->registry().find(p.allocation_id))
        fee_length = rec->prefix.length();
      payload = p;
      end = a + 2;
    } else if (action == "metadata") {
      payload = MetadataPayload{must_resolve(w[a + 1]), w[a + 2] == "-" ? "" : w[a + 2]};
      end = a + 3;
    } else if (action == "roa" || action == "revoke_roa") {
      RoaRecord roa;
      roa.prefix = parse_prefix(w[a + 2]);
      roa.origin_asn = static_cast<std::uint32_t>(to_uint(line_, w[a + 3]));
      roa.max_length = roa.prefix.length();
      end = a + 4;
      if (end < w.size() && is_uint(w[end]))
        roa.max_length = static_cast<unsigned>(to_uint(line_, w[end++]));
      AllocationId id = must_resolve(w[a + 1]);
      if (action == "roa")
        payload = RoaRegisterPayload{id, roa};
      else
        payload = RoaRevokePayload{id, roa};
    } else if (action == "resume") {
      payload = ResumePayload{};
    } else if (action == "oracle") {
      OracleKind kind = parse_oracle_kind(w[a + 1]);
      OracleSample s;
      if (w[a + 2] == "fixture") {
        if (!fixture_)
          parse_fail(line_, "no oracle_fixture declared");
        s = fixture_->get_sample(kind, ledger_->now());
      } else {
        s = OracleSample{kind, parse_rational(w[a + 2]), ledger_->now(), "scenario"};
      }
      payload = OraclePayload{s};
      end = a + 3;
    } else if (action == "transfer") {
      payload = TransferPayload{};
      to = account_id(w[a + 1]);
      value = parse_rational(w[a + 2]);
      end = a + 3;
    }

    Rational tip = 0;
    for (; end + 1 < w.size(); end += 2) {
      const std::string& v = w[end + 1];
      if (w[end] == "tip") {
        tip = parse_rational(v);
      } else if (v == "fee" || v.starts_with("fee*")) {
        if (!fee_length)
          parse_fail(line_, "pay fee only applies to allocate and renew of a live allocation");
        value = fee_for(*fee_length, v == "fee" ? 1 : to_uint(line_, v.substr(4)));
      } else {
        value = parse_rational(v);
      }
    }

    const KeyPair& key = keys_.at(account);
    AccountId from = key.id();
    Transaction tx = make_signed_transaction(*scheme_, key, to, value, tip,
                                             ledger_->next_nonce(from), std::move(payload));
    Submission sub{account, std::nullopt, std::nullopt};
    ++result_.submitted;
    auto res = ledger_->submit(tx);
    if (res) {
      sub.hash = res.value();
      labels_.emplace(res.value(), label);
    } else {
      sub.refused = res.code();
      ordered_json details = ordered_json::object();
      details["error"] = std::string(to_string(res.code()));
      details["label"] = label;
      if (!res.error().detail.empty())
        details["reason"] = res.error().detail;
      ordered_json ev = {{"v", kEventLogVersion},
                         {"block_height", nullptr},
                         {"tx_hash", tx.hash().hex()},
                         {"kind", std::string(payload_kind(tx.payload))},
                         {"outcome", "refused"},
                         {"details", details}};
      result_.events.push_back(ev.dump());
    }
    subs_.emplace(label, std::move(sub));
  }

  void flush_receipts() {
    const auto& receipts = ledger_->receipts();
    for (; emitted_ < receipts.size(); ++emitted_) {
      const Receipt& r = receipts[emitted_];
      ordered_json details = ordered_json::object();
      for (const auto& [k, v] : r.details)
        details[k] = v;
      if (r.tx_hash)
        if (auto it = labels_.find(*r.tx_hash); it != labels_.end())
          details["label"] = it->second;
      ordered_json ev = {{"v", kEventLogVersion},
                         {"block_height", r.block_height},
                         {"tx_hash", r.tx_hash ? ordered_json(r.tx_hash->hex()) : ordered_json()},
                         {"kind", r.kind},
                         {"outcome", r.accepted ? "accepted" : "rejected"},
                         {"details", details}};
      result_.events.push_back(ev.dump());
    }
  }

  std::string outcome_of(const std::string& label, std::optional<errc>* error) const {
    const auto& s = subs_.at(label);
    if (s.refused) {
      *error = s.refused;
      return "refused";
    }
    const Receipt* r = receipt_of(label);
    if (!r)
      return "pending";
    *error = r->error;
    return r->accepted ? "accepted" : "rejected";
  }

  static std::optional<std::string> mismatch(const std::string& what, const std::string& want,
                                             const std::string& got) {
    if (want == got)
      return std::nullopt;
    return what + ": expected " + want + ", got " + got;
  }

  std::optional<std::string> expect(const std::vector<std::string>& w) {
    const std::string& what = w[1];
    const auto& reg = ledger_->registry();
    const auto& st = reg.state();

    if (what == "outcome") {
      std::optional<errc> err;
      std::string got = outcome_of(w[2], &err);
      if (auto m = mismatch("outcome of " + w[2], w[3], got))
        return *m + (err ? " (" + std::string(to_string(*err)) + ")" : "");
      if (w.size() == 5)
        return mismatch("error of " + w[2], w[4], err ? std::string(to_string(*err)) : "none");
      return std::nullopt;
    }
    if (what == "prefix") {
      const Receipt* r = receipt_of(w[2]);
      std::string got = "none";
      if (r && r->details.count("prefixes"))
        got = r->details.at("prefixes");
      return mismatch("prefix of " + w[2], w[3], got);
    }
    if (what == "aggregatable") {
      const Receipt* r = receipt_of(w[2]);
      std::string got = r && r->details.count("aggregatable") ? r->details.at("aggregatable")
                                                                : "none";
      return mismatch("aggregatable of " + w[2], w[3], got);
    }
    if (what == "status") {
      const auto& s = subs_.at(w[2]);
      std::string got =
        s.hash ? std::string(to_string(ledger_->confirmation_status(*s.hash).status)) : "refused";
      return mismatch("status of " + w[2], w[3], got);
    }
    if (what == "latency") {
      const auto& s = subs_.at(w[2]);
      std::optional<Timestamp> lat;
      if (s.hash)
        lat = ledger_->confirmation_latency(*s.hash);
      return mismatch("latency of " + w[2], w[3], lat ? std::to_string(*lat) : "unconfirmed");
    }
    if (what == "allocations")
      return mismatch("active allocations", w[2], std::to_string(st.allocations.size()));
    if (what == "paused")
      return mismatch("paused", w[2], st.paused ? "true" : "false");
    if (what == "height")
      return mismatch("chain height", w[2], std::to_string(ledger_->chain().back().height));
    if (what == "pool_free")
      return mismatch("pool free fraction", to_canonical(parse_rational(w[2])),
                      to_canonical(st.pool.utilization().free_fraction));
    if (what == "collected")
      return mismatch("collected fees", to_canonical(parse_rational(w[2])),
                      to_canonical(st.accounting.collected));
    if (what == "surplus")
      return mismatch("surplus", to_canonical(parse_rational(w[2])),
                      to_canonical(st.accounting.surplus));
    if (what == "rejected_payments")
      return mismatch("rejected payments", to_canonical(parse_rational(w[2])),
                      to_canonical(st.accounting.rejected_payments));
    if (what == "chain") {
      auto bad = verify_chain(ledger_->chain(), cfg_.ledger.block_interval);
      return mismatch("chain", "ok", bad ? "first bad height " + std::to_string(*bad) : "ok");
    }
    if (what == "value_conserved")
      return mismatch("total value", to_canonical(genesis_total_),
                      to_canonical(ledger_->total_value()));
    if (what == "routes") {
      std::string got;
      for (const auto& p : reg.route_report(account_id(w[2])))
        got += (got.empty() ? "" : ",") + format_prefix(p);
      return mismatch("routes of " + w[2], w[3], got.empty() ? "none" : got);
    }
    if (what == "holdings")
      return mismatch("holdings of " + w[2], w[3],
                      std::to_string(reg.holdings(account_id(w[2])).size()));
    if (what == "balance")
      return mismatch("balance of " + w[2], to_canonical(parse_rational(w[3])),
                      to_canonical(ledger_->balance(account_id(w[2]))));
    if (what == "active") {
      auto id = resolve(w[2]);
      bool active = id && reg.find(*id) != nullptr;
      return mismatch("active " + w[2], w[3], active ? "true" : "false");
    }
    if (what == "expiration" || what == "roas" || what == "metadata") {
      auto id = resolve(w[2]);
      const AllocationRecord* rec = id ? reg.find(*id) : nullptr;
      if (!rec)
        return what + " of " + w[2] + ": no active allocation";
      if (what == "roas")
        return mismatch("roas of " + w[2], w[3], std::to_string(rec->roas.size()));
      if (what == "metadata")
        return mismatch("metadata of " + w[2], w[3],
                        rec->metadata_pointer ? *rec->metadata_pointer : "-");
      Timestamp want = w[3].front() == '+'
                         ? cfg_.ledger.genesis_time
                             + static_cast<Timestamp>(to_uint(line_, w[3].substr(1)))
                         : static_cast<Timestamp>(to_uint(line_, w[3]));
      return mismatch("expiration of " + w[2], std::to_string(want),
                      std::to_string(rec->expiration));
    }
    if (what == "utilization") {
      auto u = st.pool.utilization();
      auto len = static_cast<unsigned>(to_uint(line_, w[2]));
      auto it = u.allocated_by_length.find(len);
      return mismatch("allocated /" + w[2], w[3],
                      std::to_string(it == u.allocated_by_length.end() ? 0 : it->second));
    }
    if (what == "tally") {
      std::uint64_t accepted = 0, rejected = 0;
      for (std::uint64_t i = 1;; ++i) {
        auto it = subs_.find(w[2] + "#" + std::to_string(i));
        if (it == subs_.end())
          break;
        std::optional<errc> err;
        auto o = outcome_of(it->first, &err);
        accepted += o == "accepted";
        rejected += o == "rejected" || o == "refused";
      }
      std::string got = "accepted " + std::to_string(accepted) + " rejected "
                        + std::to_string(rejected);
      return mismatch("tally of " + w[2], w[3] + " " + w[4] + " " + w[5] + " " + w[6], got);
    }
    if (what == "first_rejected") {
      for (std::uint64_t i = 1;; ++i) {
        auto it = subs_.find(w[2] + "#" + std::to_string(i));
        if (it == subs_.end())
          break;
        std::optional<errc> err;
        auto o = outcome_of(it->first, &err);
        if (o == "rejected" || o == "refused")
          return mismatch("first rejection in " + w[2], w[3] + " " + w[4],
                          std::to_string(i) + " " + std::string(err ? to_string(*err) : "none"));
      }
      return "first rejection in " + w[2] + ": none rejected";
    }
    return "unknown expectation " + what;
  }

  const Scenario& sc_;
  SimulationConfig cfg_;
  std::shared_ptr<const SignatureScheme> scheme_;
  std::shared_ptr<Ledger> ledger_;
  std::map<std::string, KeyPair> keys_;
  std::optional<FixtureProvider> fixture_;
  std::map<std::string, Submission> subs_;
  std::map<Digest, std::string> labels_;
  Rational genesis_total_{0};
  RunResult result_;
  std::size_t emitted_{0};
  std::size_t line_{0};
};

} // namespace

RunResult run_scenario(const Scenario& scenario, const std::vector<Setting>& overrides) {
  return Runner(scenario, overrides).run();
}

} // namespace inblock
