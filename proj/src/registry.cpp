#include "inblock/registry.hpp"

#include <algorithm>

namespace inblock {

std::string_view to_string(NodeState s) noexcept {
  switch (s) {
    case NodeState::Free: return "free";
    case NodeState::Split: return "split";
    case NodeState::Allocated: return "allocated";
  }
  return "unknown";
}

std::string_view to_string(FeeDestination d) noexcept {
  switch (d) {
    case FeeDestination::Contract: return "contract";
    case FeeDestination::Burn: return "burn";
    case FeeDestination::Beneficiary: return "beneficiary";
  }
  return "unknown";
}

Rational effective_fee(const FeeSchedule& schedule, unsigned length) {
  auto it = schedule.base_fee_fiat.find(length);
  if (it == schedule.base_fee_fiat.end())
    throw Error(errc::UnsupportedLength, "/" + std::to_string(length));
  return it->second * schedule.current_gdp_index / schedule.base_gdp_index;
}

Rational required_crypto_amount(const Rational& fee_fiat, const Rational& fiat_per_coin) {
  if (fiat_per_coin <= 0)
    throw Error(errc::InvalidRate, "rate must be positive");
  return fee_fiat / fiat_per_coin;
}

Rational required_crypto_amount(const Rational& fee_fiat, const ExchangeRate& rate,
                                Timestamp now, std::optional<Timestamp> max_age) {
  if (max_age && now - rate.as_of > *max_age)
    throw Error(errc::InvalidRate, "exchange rate as of " + std::to_string(rate.as_of)
                                     + " is stale");
  return required_crypto_amount(fee_fiat, rate.fiat_per_coin);
}

RegistryState::RegistryState(RegistryConfig cfg)
  : config(std::move(cfg)), pool(config.pool), fee_schedule(config.fees) {
}

std::string RegistryState::check_invariants() const {
  if (allocations.size() != by_prefix.size())
    return "index size mismatch";
  for (const auto& [prefix, id] : by_prefix) {
    auto it = allocations.find(id);
    if (it == allocations.end() || it->second.prefix != prefix)
      return "by_prefix entry without matching record: " + format_prefix(prefix);
    if (!pool.is_allocated(prefix))
      return "record not allocated in pool: " + format_prefix(prefix);
    if (config.allocation_lengths.count(prefix.length()) == 0)
      return "record with unsupported length: " + format_prefix(prefix);
    if (id >= next_id)
      return "record id beyond next_id";
  }
  std::size_t held = allocations.size() + quarantine.size();
  if (pool.allocated().size() != held)
    return "pool holds blocks without records";
  for (const auto& [id, rec] : allocations) {
    if (config.asn_capped_lengths.count(rec.prefix.length()) != 0) {
      std::set<std::uint32_t> asns;
      for (const auto& roa : rec.roas)
        asns.insert(roa.origin_asn);
      if (asns.size() > config.asn_cap)
        return "ASN cap exceeded on allocation " + std::to_string(id);
    }
    for (const auto& roa : rec.roas)
      if (!rec.prefix.contains(roa.prefix))
        return "ROA outside allocation " + std::to_string(id);
  }
  return pool.check_invariants();
}

Registry::Registry(RegistryConfig config) : state_(std::move(config)) {
}

Registry::Registry(RegistryState state) : state_(std::move(state)) {
  if (auto why = state_.check_invariants(); !why.empty())
    throw Error(errc::CorruptSnapshot, why);
}

std::optional<ExchangeRate> Registry::current_rate() const {
  auto it = state_.oracle.find(OracleKind::ExchangeRate);
  if (it == state_.oracle.end())
    return std::nullopt;
  return ExchangeRate{it->second.value, it->second.as_of};
}

const AllocationRecord* Registry::find(AllocationId id) const {
  auto it = state_.allocations.find(id);
  return it == state_.allocations.end() ? nullptr : &it->second;
}

std::vector<AllocationRecord> Registry::holdings(const AccountId& holder) const {
  std::vector<AllocationRecord> out;
  for (const auto& [id, rec] : state_.allocations)
    if (rec.holder == holder)
      out.push_back(rec);
  return out;
}

std::vector<Ipv6Prefix> Registry::route_report(const AccountId& holder) const {
  std::vector<Ipv6Prefix> held;
  for (const auto& [prefix, id] : state_.by_prefix)
    if (state_.allocations.at(id).holder == holder)
      held.push_back(prefix);
  // by_prefix iterates in address order and holdings are disjoint, so
  // buddies meet on top of the stack.
  std::vector<Ipv6Prefix> stack;
  for (const auto& p : held) {
    stack.push_back(p);
    while (stack.size() >= 2) {
      const auto& top = stack[stack.size() - 1];
      const auto& below = stack[stack.size() - 2];
      if (top.length() == 0 || top.length() != below.length() || top.buddy() != below)
        break;
      Ipv6Prefix merged = top.parent();
      stack.pop_back();
      stack.back() = merged;
    }
  }
  return stack;
}

bool Registry::covered_by(const Ipv6Prefix& block, const AccountId& holder) const {
  const u128 want = u128{1} << block.size_log2();
  u128 have = 0;
  for (auto it = state_.by_prefix.lower_bound(block);
       it != state_.by_prefix.end() && it->first.address() <= block.last_address(); ++it) {
    if (!block.contains(it->first) || state_.allocations.at(it->second).holder != holder)
      return false;
    have += u128{1} << it->first.size_log2();
  }
  return have == want;
}

Result<Registry::Plan> Registry::plan_allocation(const AllocationRequest& req) const {
  const auto& root = state_.pool.root();
  Plan plan;
  if (req.growth_proof) {
    const AllocationRecord* rec = find(*req.growth_proof);
    if (rec == nullptr || rec->holder != req.requester)
      return reject(errc::InvalidGrowthProof,
                    "allocation " + std::to_string(*req.growth_proof) + " not held by requester");
    if (rec->prefix.length() != req.length)
      return reject(errc::InvalidGrowthProof, "growth must request the held block's length");
    // Grow the holder's aggregate around the proven block, then ask for
    // the buddy of that aggregate.
    Ipv6Prefix aggregate = rec->prefix;
    while (aggregate.length() > root.length() && covered_by(aggregate.buddy(), req.requester))
      aggregate = aggregate.parent();
    // Tiling is capped at 2^16 records per request; larger aggregates fall
    // back to a sparse block.
    if (aggregate.length() > root.length() && req.length - aggregate.length() <= 16
        && state_.pool.is_free(aggregate.buddy())) {
      plan.block = aggregate.buddy();
      plan.aggregate = aggregate.parent();
      plan.count = std::size_t{1} << (req.length - plan.block->length());
      return plan;
    }
  }
  plan.sparse = state_.pool.find_sparse_slot(req.length);
  if (!plan.sparse)
    return reject(errc::PoolExhausted, "no free /" + std::to_string(req.length));
  return plan;
}

Rejection Registry::rejected_payment(Rejection r, const Rational& paid) {
  state_.accounting.rejected_payments += paid;
  return r;
}

void Registry::prune_rate_window(Timestamp now) {
  while (!state_.rate_window.empty()
         && state_.rate_window.front() <= now - state_.config.rate_window_seconds)
    state_.rate_window.pop_front();
}

Result<Rational> Registry::quote(unsigned length, Timestamp now, const ExchangeRate& rate) const {
  try {
    Rational fee = effective_fee(state_.fee_schedule, length);
    return required_crypto_amount(fee, rate, now, state_.config.max_rate_age_seconds);
  } catch (const Error& e) {
    return reject(e.code(), e.what());
  }
}

Result<AllocationGrant> Registry::request_allocation(const AllocationRequest& req,
                                                     Timestamp now) {
  auto rate = current_rate();
  if (!rate)
    return rejected_payment(reject(errc::InvalidRate, "no exchange rate delivered"), req.paid);
  return request_allocation(req, now, *rate);
}

Result<AllocationGrant> Registry::request_allocation(const AllocationRequest& req,
                                                     Timestamp now, const ExchangeRate& rate) {
  const auto& cfg = state_.config;
  if (state_.paused)
    return rejected_payment(reject(errc::RegistryPaused), req.paid);
  if (cfg.experiment_end && now >= *cfg.experiment_end)
    return rejected_payment(reject(errc::ExperimentEnded), req.paid);
  if (cfg.allocation_lengths.count(req.length) == 0)
    return rejected_payment(reject(errc::UnsupportedLength, "/" + std::to_string(req.length)),
                            req.paid);

  auto plan = plan_allocation(req);
  if (!plan)
    return rejected_payment(plan.error(), req.paid);

  auto unit = quote(req.length, now, rate);
  if (!unit)
    return rejected_payment(unit.error(), req.paid);
  Rational required = unit.value() * plan.value().count;
  if (req.paid < required)
    return rejected_payment(reject(errc::InsufficientFee, "paid " + to_canonical(req.paid)
                                                            + ", required "
                                                            + to_canonical(required)),
                            req.paid);

  prune_rate_window(now);
  if (state_.rate_window.size() + plan.value().count > cfg.rate_limit) {
    state_.paused = true;
    return rejected_payment(reject(errc::RegistryPaused, "allocation rate limit reached"),
                            req.paid);
  }

  const Plan& p = plan.value();
  std::vector<Ipv6Prefix> blocks;
  if (p.block)
    blocks = state_.pool.allocate_tiled(*p.block, req.length);
  else
    blocks.push_back(state_.pool.allocate_sparse(req.length));

  AllocationGrant grant;
  grant.aggregatable = p.aggregate.has_value();
  grant.required = required;
  grant.surplus = req.paid - required;
  for (const auto& prefix : blocks) {
    AllocationRecord rec;
    rec.id = state_.next_id++;
    rec.prefix = prefix;
    rec.holder = req.requester;
    rec.created = now;
    rec.expiration = now + cfg.lifetime_seconds;
    rec.aggregatable_with = p.aggregate;
    state_.by_prefix.emplace(prefix, rec.id);
    state_.allocations.emplace(rec.id, rec);
    state_.rate_window.push_back(now);
    grant.records.push_back(std::move(rec));
  }
  state_.accounting.collected += required;
  state_.accounting.surplus += grant.surplus;
  return grant;
}

Result<AllocationRecord> Registry::renew(const RenewalRequest& req, Timestamp now) {
  auto rate = current_rate();
  if (!rate)
    return rejected_payment(reject(errc::InvalidRate, "no exchange rate delivered"), req.paid);
  return renew(req, now, *rate);
}

Result<AllocationRecord> Registry::renew(const RenewalRequest& req, Timestamp now,
                                         const ExchangeRate& rate) {
  auto it = state_.allocations.find(req.allocation_id);
  if (it == state_.allocations.end())
    return rejected_payment(reject(errc::UnknownAllocation), req.paid);
  AllocationRecord& rec = it->second;
  if (rec.holder != req.requester)
    return rejected_payment(reject(errc::NotHolder), req.paid);
  if (now > rec.expiration)
    return rejected_payment(reject(errc::AlreadyExpired), req.paid);
  auto required = quote(rec.prefix.length(), now, rate);
  if (!required)
    return rejected_payment(required.error(), req.paid);
  if (req.paid < required.value())
    return rejected_payment(reject(errc::InsufficientFee), req.paid);
  rec.expiration += state_.config.lifetime_seconds;
  state_.accounting.collected += required.value();
  state_.accounting.surplus += req.paid - required.value();
  return rec;
}

std::vector<Ipv6Prefix> Registry::expire_sweep(Timestamp now) {
  auto& q = state_.quarantine;
  for (auto it = q.begin(); it != q.end();) {
    if (it->release_at <= now) {
      state_.pool.release(it->prefix);
      it = q.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<Ipv6Prefix> reclaimed;
  for (auto it = state_.allocations.begin(); it != state_.allocations.end();) {
    if (it->second.expiration >= now) {
      ++it;
      continue;
    }
    const Ipv6Prefix prefix = it->second.prefix;
    state_.by_prefix.erase(prefix);
    it = state_.allocations.erase(it);
    if (state_.config.hold_down_seconds > 0)
      q.push_back({prefix, now + state_.config.hold_down_seconds});
    else
      state_.pool.release(prefix);
    reclaimed.push_back(prefix);
  }
  return reclaimed;
}

Status Registry::update_metadata(const MetadataUpdate& update) {
  auto it = state_.allocations.find(update.allocation_id);
  if (it == state_.allocations.end())
    return reject(errc::UnknownAllocation);
  if (it->second.holder != update.requester)
    return reject(errc::NotHolder);
  if (update.pointer.empty())
    it->second.metadata_pointer.reset();
  else
    it->second.metadata_pointer = update.pointer;
  return ok_status();
}

Status Registry::register_roa(const RoaRequest& req) {
  auto it = state_.allocations.find(req.allocation_id);
  if (it == state_.allocations.end())
    return reject(errc::UnknownAllocation);
  AllocationRecord& rec = it->second;
  if (rec.holder != req.requester)
    return reject(errc::NotHolder);
  if (!rec.prefix.contains(req.roa.prefix))
    return reject(errc::RoaOutsideAllocation, format_prefix(req.roa.prefix));
  if (req.roa.max_length < req.roa.prefix.length() || req.roa.max_length > 128)
    return reject(errc::InvalidRoa, "max length " + std::to_string(req.roa.max_length));
  if (state_.config.asn_capped_lengths.count(rec.prefix.length()) != 0) {
    std::set<std::uint32_t> asns;
    for (const auto& roa : rec.roas)
      asns.insert(roa.origin_asn);
    asns.insert(req.roa.origin_asn);
    if (asns.size() > state_.config.asn_cap)
      return reject(errc::AsnCapExceeded, "AS" + std::to_string(req.roa.origin_asn));
  }
  rec.roas.insert(req.roa);
  return ok_status();
}

Status Registry::revoke_roa(const RoaRequest& req) {
  auto it = state_.allocations.find(req.allocation_id);
  if (it == state_.allocations.end())
    return reject(errc::UnknownAllocation);
  if (it->second.holder != req.requester)
    return reject(errc::NotHolder);
  if (it->second.roas.erase(req.roa) == 0)
    return reject(errc::UnknownRoa);
  return ok_status();
}

Status Registry::governance_resume(const AccountId& supervisor) {
  if (state_.config.supervisors.count(supervisor) == 0)
    return reject(errc::NotSupervisor);
  if (!state_.paused)
    return reject(errc::NotPaused);
  state_.paused = false;
  state_.rate_window.clear();
  return ok_status();
}

Status Registry::apply_oracle_update(const OracleSample& sample, const AccountId& signer) {
  if (state_.config.oracle_accounts.count(signer) == 0)
    return reject(errc::NotOracleAccount);
  if (sample.value <= 0)
    return reject(errc::InvalidRate, "oracle values must be positive");
  auto it = state_.oracle.find(sample.kind);
  if (it != state_.oracle.end() && sample.as_of <= it->second.as_of)
    return reject(errc::StaleUpdate, "as_of " + std::to_string(sample.as_of));
  state_.oracle[sample.kind] = sample;
  if (sample.kind == OracleKind::GdpIndex)
    state_.fee_schedule.current_gdp_index = sample.value;
  return ok_status();
}

void Registry::seed_genesis_rate(Timestamp genesis) {
  if (!state_.config.genesis_rate || !state_.oracle.empty())
    return;
  if (*state_.config.genesis_rate <= 0)
    throw Error(errc::BadConfig, "genesis rate must be positive");
  state_.oracle[OracleKind::ExchangeRate] =
    OracleSample{OracleKind::ExchangeRate, *state_.config.genesis_rate, genesis, "genesis"};
}

void Registry::accept_untargeted_payment(const Rational& amount) {
  state_.accounting.surplus += amount;
}

} // namespace inblock
