// inblock: scenario runner, registry queries, chain tools, and analysis.
//
// Exit codes: 0 success, 1 expectation or verification failure, 2 input error.

#include "inblock/config.hpp"
#include "inblock/rir_stats.hpp"
#include "inblock/scenario.hpp"
#include "inblock/snapshot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace inblock;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kInputError = 2;

std::vector<Setting> parse_set_flags(const std::vector<std::string>& flags) {
  std::vector<Setting> out;
  for (const auto& f : flags) {
    auto eq = f.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(errc::BadConfig, "--set expects key=value, got '" + f + "'");
    out.emplace_back(f.substr(0, eq), f.substr(eq + 1));
  }
  return out;
}

std::vector<Setting> overrides(const std::string& config_file,
                               const std::vector<std::string>& set_flags) {
  std::vector<Setting> out;
  if (!config_file.empty())
    out = read_config_file(config_file);
  for (auto& s : read_environment())
    out.push_back(std::move(s));
  for (auto& s : parse_set_flags(set_flags))
    out.push_back(std::move(s));
  return out;
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw Error(errc::UnreadableInput, "cannot write " + p.string());
  out << bytes;
}

std::string name_of(const Snapshot& s, const AccountId& id) {
  for (const auto& [name, acc] : s.names)
    if (acc == id)
      return name;
  return id.hex().substr(0, 16);
}

ordered_json record_json(const Snapshot& s, const AllocationRecord& r) {
  ordered_json roas = ordered_json::array();
  for (const auto& roa : r.roas)
    roas.push_back({{"prefix", format_prefix(roa.prefix)},
                    {"origin_asn", roa.origin_asn},
                    {"max_length", roa.max_length}});
  return {{"id", r.id},
          {"prefix", format_prefix(r.prefix)},
          {"holder", r.holder.hex()},
          {"holder_name", name_of(s, r.holder)},
          {"created", r.created},
          {"expiration", r.expiration},
          {"metadata_pointer",
           r.metadata_pointer ? ordered_json(*r.metadata_pointer) : ordered_json()},
          {"aggregatable_with", r.aggregatable_with
                                  ? ordered_json(format_prefix(*r.aggregatable_with))
                                  : ordered_json()},
          {"roas", roas}};
}

void print_allocation_table(const Snapshot& s, const std::vector<const AllocationRecord*>& recs) {
  std::cout << std::left << std::setw(6) << "ID" << std::setw(24) << "PREFIX" << std::setw(18)
            << "HOLDER" << std::setw(12) << "EXPIRES" << std::setw(6) << "ROAS"
            << "METADATA\n";
  for (const auto* r : recs)
    std::cout << std::left << std::setw(6) << r->id << std::setw(24) << format_prefix(r->prefix)
              << std::setw(18) << name_of(s, r->holder) << std::setw(12) << r->expiration
              << std::setw(6) << r->roas.size() << r->metadata_pointer.value_or("-") << "\n";
}

const AllocationRecord& find_allocation(const Snapshot& s, std::uint64_t id) {
  auto it = s.registry.allocations.find(id);
  if (it == s.registry.allocations.end())
    throw Error(errc::UnknownAllocation, "no allocation " + std::to_string(id));
  return it->second;
}

// -- subcommands --------------------------------------------------------------

int cmd_run(const std::string& path, const std::string& out_dir, const std::string& config,
            const std::vector<std::string>& sets, bool quiet) {
  Scenario sc = load_scenario_file(path);
  RunResult r = run_scenario(sc, overrides(config, sets));
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "events.jsonl", r.event_log());
    write_file(fs::path(out_dir) / "chain.jsonl", r.chain_export());
    write_file(fs::path(out_dir) / "snapshot.json", write_snapshot(r.snapshot()));
  }
  const auto& st = r.ledger->registry().state();
  if (!quiet) {
    std::cout << "scenario " << r.name << ": " << r.submitted << " submissions, "
              << r.ledger->chain().size() - 1 << " blocks, " << st.allocations.size()
              << " active allocations" << (st.paused ? ", registry paused" : "") << "\n";
  }
  for (const auto& f : r.failures)
    std::cerr << path << ":" << f.line << ": expectation failed: " << f.message << "\n";
  if (!r.passed()) {
    std::cerr << "ExpectationFailed: " << r.failures.size() << " expectation(s) failed\n";
    return kFailed;
  }
  if (!quiet)
    std::cout << "all expectations met\n";
  return kOk;
}

int cmd_query(const std::string& what, std::uint64_t id, const std::string& snapshot_path,
              bool as_json) {
  Snapshot s = load_snapshot_file(snapshot_path);
  const auto& st = s.registry;
  if (what == "allocations") {
    std::vector<const AllocationRecord*> recs;
    for (const auto& [i, r] : st.allocations)
      recs.push_back(&r);
    if (as_json) {
      ordered_json arr = ordered_json::array();
      for (const auto* r : recs)
        arr.push_back(record_json(s, *r));
      std::cout << arr.dump(2) << "\n";
    } else {
      print_allocation_table(s, recs);
    }
  } else if (what == "allocation") {
    const auto& r = find_allocation(s, id);
    if (as_json)
      std::cout << record_json(s, r).dump(2) << "\n";
    else
      print_allocation_table(s, {&r});
  } else if (what == "roas") {
    const auto& r = find_allocation(s, id);
    if (as_json) {
      std::cout << record_json(s, r)["roas"].dump(2) << "\n";
    } else {
      std::cout << std::left << std::setw(28) << "PREFIX" << std::setw(12) << "ORIGIN_ASN"
                << "MAX_LENGTH\n";
      for (const auto& roa : r.roas)
        std::cout << std::left << std::setw(28) << format_prefix(roa.prefix) << std::setw(12)
                  << roa.origin_asn << roa.max_length << "\n";
    }
  } else if (what == "utilization") {
    auto u = st.pool.utilization();
    if (as_json) {
      ordered_json by_len = ordered_json::object();
      for (const auto& [len, n] : u.allocated_by_length)
        by_len[std::to_string(len)] = n;
      std::cout << ordered_json{{"pool", format_prefix(st.pool.root())},
                                {"allocated_by_length", by_len},
                                {"free_fraction", to_canonical(u.free_fraction)},
                                {"free_fraction_decimal", format_decimal(u.free_fraction, 8)},
                                {"paused", st.paused}}
                     .dump(2)
                << "\n";
    } else {
      std::cout << "pool " << format_prefix(st.pool.root()) << "\n";
      for (const auto& [len, n] : u.allocated_by_length)
        std::cout << "  /" << len << " allocated: " << n << "\n";
      std::cout << "  free fraction: " << to_canonical(u.free_fraction) << " ("
                << format_decimal(u.free_fraction, 8) << ")\n";
      std::cout << "  paused: " << (st.paused ? "yes" : "no") << "\n";
    }
  }
  return kOk;
}

int cmd_fig2(const std::string& path, bool as_json, bool as_csv) {
  DelegationFile f = parse_delegated_extended_file(path);
  SizeHistogram h = size_distribution(f.records);
  for (const auto& d : f.diagnostics)
    std::cerr << path << ":" << d.line << ": " << d.message << "\n";
  if (as_csv) {
    std::cout << "prefix_length,count\n";
    for (const auto& [len, n] : h.counts)
      std::cout << len << "," << n << "\n";
    std::cout << "larger_than_/" << h.reference_length << "," << h.larger_than_reference << "\n";
  } else if (as_json) {
    ordered_json counts = ordered_json::object();
    for (const auto& [len, n] : h.counts)
      counts[std::to_string(len)] = n;
    std::cout << ordered_json{{"records", h.total},
                              {"counts", counts},
                              {"reference_length", h.reference_length},
                              {"larger_than_reference", h.larger_than_reference},
                              {"diagnostics", f.diagnostics.size()}}
                   .dump(2)
              << "\n";
  } else {
    std::cout << "ipv6 allocations/assignments: " << h.total << "\n";
    for (const auto& [len, n] : h.counts)
      std::cout << "  /" << std::left << std::setw(4) << len << n << "\n";
    std::cout << "  larger than /" << h.reference_length << ": " << h.larger_than_reference
              << "\n";
  }
  return kOk;
}

int cmd_economics(const EconomicsParams& p, const std::string& fee_table, bool as_json) {
  RirFeeTable table = default_rir_fee_table();
  if (!fee_table.empty()) {
    std::ifstream in(fee_table);
    if (!in)
      throw Error(errc::UnreadableInput, fee_table);
    table = load_rir_fee_table(in);
  }
  EconomicsReport r = economics_report(p, table);
  auto pos = [](const FeePosition& fp) {
    return ordered_json{{"size", fp.size},
                        {"fee", to_canonical(fp.fee)},
                        {"rir_low", to_canonical(fp.rir_range.low)},
                        {"rir_high", to_canonical(fp.rir_range.high)},
                        {"position", std::string(to_string(fp.position))},
                        {"above_rir_maximum", fp.above_rir_maximum()}};
  };
  if (as_json) {
    std::cout << ordered_json{
                   {"fees", {pos(r.position_32), pos(r.position_48)}},
                   {"pool", {{"length", r.pool_length},
                             {"blocks_32", r.pool_blocks_32},
                             {"stockpile_cost", to_canonical(r.pool_stockpile_cost)}}},
                   {"whole_space",
                    {{"computed", to_canonical(r.whole_space_cost)},
                     {"computed_scientific", format_scientific(r.whole_space_cost, 5)},
                     {"published", to_canonical(r.published_whole_space_cost)},
                     {"published_scientific", format_scientific(r.published_whole_space_cost, 3)},
                     {"discrepancy", format_decimal(r.whole_space_discrepancy, 6)}}},
                   {"throughput",
                    {{"yearly_tx", r.yearly_tx},
                     {"tx_per_second", to_canonical(r.throughput_tx_per_s)},
                     {"tx_per_second_2sf", r.throughput_2sf}}},
                   {"latency_seconds", r.latency_seconds}}
                   .dump(2)
              << "\n";
    return kOk;
  }
  auto line = [](const FeePosition& fp) {
    std::cout << "  /" << fp.size << ": $" << format_decimal(fp.fee, 2) << " vs RIR $"
              << to_canonical(fp.rir_range.low) << "-$" << to_canonical(fp.rir_range.high)
              << " -> " << to_string(fp.position) << " range\n";
  };
  std::cout << "yearly fees\n";
  line(r.position_32);
  line(r.position_48);
  std::cout << "stockpiling\n"
            << "  all " << r.pool_blocks_32 << " /32s of a /" << r.pool_length << ": $"
            << to_canonical(r.pool_stockpile_cost) << " per year\n"
            << "  whole space (2^32 /32s): $" << to_canonical(r.whole_space_cost) << " ("
            << format_scientific(r.whole_space_cost, 5) << ")\n"
            << "  published figure: $" << to_canonical(r.published_whole_space_cost) << " ("
            << format_scientific(r.published_whole_space_cost, 3) << ")\n"
            << "  discrepancy: computed / published - 1 = "
            << format_decimal(r.whole_space_discrepancy, 6) << "\n"
            << "throughput\n"
            << "  " << r.yearly_tx << " tx/year -> " << r.throughput_2sf << " tx/s\n"
            << "latency\n"
            << "  submission to confirmation: " << r.latency_seconds << " s\n";
  return kOk;
}

int cmd_chain_verify(const std::string& path, std::int64_t interval) {
  std::ifstream in(path);
  if (!in)
    throw Error(errc::UnreadableInput, path);
  std::vector<Block> chain;
  try {
    chain = import_chain(in);
  } catch (const Error& e) {
    // An undecodable line is itself a tamper; report it as that height.
    std::cout << "FirstBadHeight(" << e.what() << ")\n";
    return kFailed;
  }
  if (auto bad = verify_chain(chain, interval)) {
    std::cout << "FirstBadHeight(" << *bad << ")\n";
    return kFailed;
  }
  std::cout << "ok (" << chain.size() << " blocks)\n";
  return kOk;
}

int cmd_snapshot(const std::string& path, const std::string& scenario, const std::string& config,
                 const std::vector<std::string>& sets) {
  auto make = [&] {
    if (scenario.empty()) {
      SimulationConfig cfg;
      apply_settings(cfg, overrides(config, sets));
      return Snapshot{RegistryState(cfg.registry), std::nullopt, {}};
    }
    return run_scenario(load_scenario_file(scenario), overrides(config, sets)).snapshot();
  };
  Snapshot s = make();
  save_snapshot_file(s, path);
  std::cout << "wrote " << path << " (" << s.registry.allocations.size() << " allocations)\n";
  return kOk;
}

int cmd_restore(const std::string& path, const std::string& out) {
  Snapshot s = load_snapshot_file(path);
  Registry restored(s.registry);
  std::cout << "restored " << path << ": " << restored.state().allocations.size()
            << " allocations in " << format_prefix(restored.state().pool.root());
  if (s.ledger)
    std::cout << ", ledger height " << s.ledger->height << " tip " << s.ledger->tip_hash.hex();
  std::cout << "\n";
  if (!out.empty())
    save_snapshot_file(Snapshot{restored.state(), s.ledger, s.names}, out);
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"InBlock IPv6 registry simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute a scenario file");
  std::string scenario_path, out_dir, config_file;
  std::vector<std::string> sets;
  bool quiet = false;
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Directory for events.jsonl, chain.jsonl, snapshot.json");
  run->add_option("--config", config_file, "JSON config file");
  run->add_option("--set", sets, "Override a config key (key=value)");
  run->add_flag("--quiet", quiet);

  auto* query = app.add_subcommand("query", "Inspect a registry snapshot");
  query->require_subcommand(1);
  std::string snap_path;
  bool as_json = false;
  std::uint64_t alloc_id = 0;
  auto add_common = [&](CLI::App* c) {
    c->add_option("--snapshot", snap_path, "Snapshot file")->required();
    c->add_flag("--json", as_json, "Machine-readable output");
  };
  auto* q_allocs = query->add_subcommand("allocations", "List active allocations");
  add_common(q_allocs);
  auto* q_alloc = query->add_subcommand("allocation", "Show one allocation");
  q_alloc->add_option("id", alloc_id)->required();
  add_common(q_alloc);
  auto* q_roas = query->add_subcommand("roas", "List an allocation's ROAs");
  q_roas->add_option("id", alloc_id)->required();
  add_common(q_roas);
  auto* q_util = query->add_subcommand("utilization", "Pool utilization");
  add_common(q_util);

  auto* analyze = app.add_subcommand("analyze", "Analysis reports");
  analyze->require_subcommand(1);
  auto* fig2 = analyze->add_subcommand("fig2", "Block-size histogram of a delegated-extended file");
  std::string stats_path;
  bool as_csv = false;
  fig2->add_option("file", stats_path)->required()->check(CLI::ExistingFile);
  auto* fig2_fmt = fig2->add_option_group("format");
  fig2_fmt->add_flag("--json", as_json);
  fig2_fmt->add_flag("--csv", as_csv);
  fig2_fmt->require_option(0, 1);
  auto* econ = analyze->add_subcommand("economics", "Fee, cost, throughput, and latency report");
  EconomicsParams params;
  std::string fee32 = "3000", fee48 = "300", gdp = "1", fee_table;
  econ->add_option("--fee-32", fee32);
  econ->add_option("--fee-48", fee48);
  econ->add_option("--gdp-index", gdp);
  econ->add_option("--pool-length", params.pool_length);
  econ->add_option("--yearly-tx", params.yearly_tx);
  econ->add_option("--inclusion-delay", params.inclusion_delay);
  econ->add_option("--block-interval", params.block_interval);
  econ->add_option("--depth", params.confirmation_depth);
  econ->add_option("--fee-table", fee_table, "CSV of size,low,high");
  econ->add_flag("--json", as_json);

  auto* chain = app.add_subcommand("chain", "Ledger tools");
  chain->require_subcommand(1);
  auto* verify = chain->add_subcommand("verify", "Verify an exported chain");
  std::string export_path;
  std::int64_t interval = 0;
  verify->add_option("export", export_path)->required();
  verify->add_option("--interval", interval, "Also check block spacing (seconds)");

  auto* snapshot = app.add_subcommand("snapshot", "Write a registry snapshot");
  std::string snapshot_out, snapshot_scenario;
  snapshot->add_option("path", snapshot_out)->required();
  snapshot->add_option("--scenario", snapshot_scenario, "Run this scenario first");
  snapshot->add_option("--config", config_file);
  snapshot->add_option("--set", sets);

  auto* restore = app.add_subcommand("restore", "Validate and load a snapshot");
  std::string restore_path, restore_out;
  restore->add_option("path", restore_path)->required();
  restore->add_option("--out", restore_out, "Re-write the restored snapshot here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*run)
      return cmd_run(scenario_path, out_dir, config_file, sets, quiet);
    if (*query) {
      for (auto* sub : {q_allocs, q_alloc, q_roas, q_util})
        if (*sub)
          return cmd_query(sub->get_name(), alloc_id, snap_path, as_json);
    }
    if (*analyze) {
      if (*fig2)
        return cmd_fig2(stats_path, as_json, as_csv);
      params.fee_32 = parse_rational(fee32);
      params.fee_48 = parse_rational(fee48);
      params.gdp_index = parse_rational(gdp);
      return cmd_economics(params, fee_table, as_json);
    }
    if (*chain)
      return cmd_chain_verify(export_path, interval);
    if (*snapshot)
      return cmd_snapshot(snapshot_out, snapshot_scenario, config_file, sets);
    if (*restore)
      return cmd_restore(restore_path, restore_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
