#include "inblock/config.hpp"
#include "inblock/ledger.hpp"
#include "inblock/prefix.hpp"
#include "inblock/registry.hpp"
#include "inblock/rir_stats.hpp"
#include "inblock/scenario.hpp"
#include "inblock/snapshot.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace inblock;

namespace {

// Accounts on the Python side are plain names; the id is the name's digest.
AccountId account(const std::string& name) {
  return AccountId{sha256(std::string_view(name))};
}

py::dict record_dict(const AllocationRecord& r) {
  py::dict d;
  d["id"] = r.id;
  d["prefix"] = format_prefix(r.prefix);
  d["holder"] = r.holder.hex();
  d["created"] = r.created;
  d["expiration"] = r.expiration;
  d["metadata_pointer"] = r.metadata_pointer ? py::cast(*r.metadata_pointer) : py::none();
  d["aggregatable_with"] =
    r.aggregatable_with ? py::cast(format_prefix(*r.aggregatable_with)) : py::none();
  py::list roas;
  for (const auto& roa : r.roas)
    roas.append(py::make_tuple(format_prefix(roa.prefix), roa.origin_asn, roa.max_length));
  d["roas"] = roas;
  return d;
}

py::dict rejected(const Rejection& r) {
  py::dict d;
  d["ok"] = false;
  d["error"] = std::string(to_string(r.code));
  d["detail"] = r.detail;
  return d;
}

py::dict status_dict(const Status& s) {
  if (!s)
    return rejected(s.error());
  py::dict d;
  d["ok"] = true;
  return d;
}

ExchangeRate rate_of(const std::string& rate, Timestamp now) {
  return ExchangeRate{parse_rational(rate), now};
}

class PyRegistry {
public:
  explicit PyRegistry(const std::map<std::string, std::string>& settings,
                      const std::vector<std::string>& supervisors)
    : registry_(make_config(settings, supervisors)) {}

  explicit PyRegistry(Registry r) : registry_(std::move(r)) {}

  py::dict request_allocation(const std::string& who, unsigned length, const std::string& paid,
                              Timestamp now, const std::string& rate,
                              std::optional<AllocationId> growth_proof) {
    auto res = registry_.request_allocation(
      {account(who), length, parse_rational(paid), growth_proof}, now, rate_of(rate, now));
    if (!res)
      return rejected(res.error());
    const auto& g = res.value();
    py::dict d;
    d["ok"] = true;
    py::list recs;
    for (const auto& r : g.records)
      recs.append(record_dict(r));
    d["records"] = recs;
    d["aggregatable"] = g.aggregatable;
    d["required"] = to_canonical(g.required);
    d["surplus"] = to_canonical(g.surplus);
    return d;
  }

  py::dict renew(const std::string& who, AllocationId id, const std::string& paid, Timestamp now,
                 const std::string& rate) {
    auto res = registry_.renew({account(who), id, parse_rational(paid)}, now, rate_of(rate, now));
    if (!res)
      return rejected(res.error());
    py::dict d;
    d["ok"] = true;
    d["record"] = record_dict(res.value());
    return d;
  }

  std::vector<std::string> expire_sweep(Timestamp now) {
    std::vector<std::string> out;
    for (const auto& p : registry_.expire_sweep(now))
      out.push_back(format_prefix(p));
    return out;
  }

  py::dict register_roa(const std::string& who, AllocationId id, const std::string& prefix,
                        std::uint32_t asn, std::optional<unsigned> max_length) {
    auto p = parse_prefix(prefix);
    return status_dict(
      registry_.register_roa({account(who), id, {p, asn, max_length.value_or(p.length())}}));
  }

  py::dict update_metadata(const std::string& who, AllocationId id, const std::string& pointer) {
    return status_dict(registry_.update_metadata({account(who), id, pointer}));
  }

  py::dict governance_resume(const std::string& who) {
    return status_dict(registry_.governance_resume(account(who)));
  }

  std::vector<std::string> route_report(const std::string& who) const {
    std::vector<std::string> out;
    for (const auto& p : registry_.route_report(account(who)))
      out.push_back(format_prefix(p));
    return out;
  }

  py::list allocations() const {
    py::list out;
    for (const auto& [id, r] : registry_.state().allocations)
      out.append(record_dict(r));
    return out;
  }

  bool paused() const { return registry_.state().paused; }

  py::dict utilization() const {
    auto u = registry_.state().pool.utilization();
    py::dict d;
    d["allocated_by_length"] = u.allocated_by_length;
    d["free_fraction"] = to_canonical(u.free_fraction);
    return d;
  }

  std::string check_invariants() const { return registry_.state().check_invariants(); }

  std::string snapshot() const {
    return write_snapshot(Snapshot{registry_.state(), std::nullopt, {}});
  }

  static PyRegistry restore(const std::string& bytes) {
    return PyRegistry(Registry(read_snapshot(bytes).registry));
  }

private:
  static RegistryConfig make_config(const std::map<std::string, std::string>& settings,
                                    const std::vector<std::string>& supervisors) {
    SimulationConfig c;
    for (const auto& [k, v] : settings)
      apply_setting(c, k, v);
    for (const auto& s : supervisors)
      c.registry.supervisors.insert(account(s));
    return c.registry;
  }

  Registry registry_;
};

py::dict run(const std::string& path, const std::map<std::string, std::string>& overrides) {
  std::vector<Setting> settings(overrides.begin(), overrides.end());
  RunResult r = run_scenario(load_scenario_file(path), settings);
  py::dict d;
  d["name"] = r.name;
  d["passed"] = r.passed();
  py::list failures;
  for (const auto& f : r.failures)
    failures.append(py::make_tuple(f.line, f.message));
  d["failures"] = failures;
  d["events"] = r.events;
  d["chain"] = r.chain_export();
  d["snapshot"] = write_snapshot(r.snapshot());
  d["height"] = r.ledger->chain().back().height;
  return d;
}

std::optional<std::uint64_t> verify_chain_text(const std::string& text, Timestamp interval) {
  std::istringstream in(text);
  auto chain = import_chain(in);
  return verify_chain(chain, interval);
}

py::dict fig2(const std::string& path) {
  auto file = parse_delegated_extended_file(path);
  auto h = size_distribution(file.records);
  py::dict d;
  d["counts"] = h.counts;
  d["larger_than_reference"] = h.larger_than_reference;
  d["reference_length"] = h.reference_length;
  d["total"] = h.total;
  d["diagnostics"] = file.diagnostics.size();
  return d;
}

py::dict economics() {
  auto r = economics_report(EconomicsParams{});
  py::dict d;
  d["fee_32"] = to_canonical(r.fee_32);
  d["fee_48"] = to_canonical(r.fee_48);
  d["position_32"] = std::string(to_string(r.position_32.position));
  d["position_48"] = std::string(to_string(r.position_48.position));
  d["pool_stockpile_cost"] = to_canonical(r.pool_stockpile_cost);
  d["whole_space_cost"] = to_canonical(r.whole_space_cost);
  d["published_whole_space_cost"] = to_canonical(r.published_whole_space_cost);
  d["throughput_2sf"] = r.throughput_2sf;
  d["latency_seconds"] = r.latency_seconds;
  return d;
}

} // namespace

PYBIND11_MODULE(_inblock, m) {
  m.doc() = "InBlock IPv6 registry simulator core";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("canonical_prefix", [](const std::string& s) { return format_prefix(parse_prefix(s)); });
  m.def("contains", [](const std::string& a, const std::string& b) {
    return contains(parse_prefix(a), parse_prefix(b));
  });
  m.def("buddy", [](const std::string& s) { return format_prefix(buddy(parse_prefix(s))); });
  m.def("split", [](const std::string& s) {
    auto [lo, hi] = split(parse_prefix(s));
    return py::make_tuple(format_prefix(lo), format_prefix(hi));
  });

  m.def("effective_fee", [](unsigned length, const std::string& gdp_index) {
    FeeSchedule f;
    f.current_gdp_index = parse_rational(gdp_index);
    return to_canonical(effective_fee(f, length));
  }, py::arg("length"), py::arg("gdp_index") = "1");
  m.def("required_crypto_amount", [](const std::string& fee, const std::string& rate) {
    return to_canonical(required_crypto_amount(parse_rational(fee), parse_rational(rate)));
  });
  m.def("whole_space_cost", [](const std::string& fee, unsigned length) {
    return to_canonical(whole_space_cost(parse_rational(fee), length));
  });
  m.def("throughput_requirement", [](std::uint64_t yearly) {
    return format_significant(throughput_requirement(yearly), 2);
  });
  m.def("end_to_end_allocation_latency", &end_to_end_allocation_latency);
  m.def("fig2", &fig2);
  m.def("economics", &economics);
  m.def("run_scenario", &run, py::arg("path"),
        py::arg("overrides") = std::map<std::string, std::string>{});
  m.def("verify_chain", &verify_chain_text, py::arg("export"), py::arg("block_interval") = 0);

  py::class_<PyRegistry>(m, "Registry")
    .def(py::init<const std::map<std::string, std::string>&, const std::vector<std::string>&>(),
         py::arg("settings") = std::map<std::string, std::string>{},
         py::arg("supervisors") = std::vector<std::string>{})
    .def("request_allocation", &PyRegistry::request_allocation, py::arg("account"),
         py::arg("length"), py::arg("paid"), py::arg("now"), py::arg("rate"),
         py::arg("growth_proof") = py::none())
    .def("renew", &PyRegistry::renew, py::arg("account"), py::arg("allocation_id"),
         py::arg("paid"), py::arg("now"), py::arg("rate"))
    .def("expire_sweep", &PyRegistry::expire_sweep)
    .def("register_roa", &PyRegistry::register_roa, py::arg("account"),
         py::arg("allocation_id"), py::arg("prefix"), py::arg("origin_asn"),
         py::arg("max_length") = py::none())
    .def("update_metadata", &PyRegistry::update_metadata)
    .def("governance_resume", &PyRegistry::governance_resume)
    .def("route_report", &PyRegistry::route_report)
    .def("allocations", &PyRegistry::allocations)
    .def("utilization", &PyRegistry::utilization)
    .def("check_invariants", &PyRegistry::check_invariants)
    .def("snapshot", &PyRegistry::snapshot)
    .def_static("restore", &PyRegistry::restore)
    .def_property_readonly("paused", &PyRegistry::paused);
}
