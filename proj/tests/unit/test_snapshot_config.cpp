#include "inblock/config.hpp"
#include "inblock/scenario.hpp"
#include "inblock/snapshot.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>

using namespace inblock;

namespace {

errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return errc::BadConfig;
}

Snapshot busy_snapshot() {
  auto scn = load_scenario_file(INBLOCK_SOURCE_DIR "/scenarios/roa_cap.scn");
  auto run = run_scenario(scn);
  REQUIRE(run.passed());
  return run.snapshot();
}

std::string rehash(nlohmann::json doc) {
  std::string input = doc["format"].dump() + "|" + doc["version"].dump() + "|"
                      + doc["content"].dump();
  doc["digest"] = sha256(input).hex();
  return doc.dump() + "\n";
}

} // namespace

TEST_SUITE("snapshot_config") {

TEST_CASE("snapshot round trip is exact and byte-stable") {
  Snapshot s = busy_snapshot();
  std::string bytes = write_snapshot(s);
  Snapshot back = read_snapshot(bytes);
  CHECK(back == s);
  CHECK(write_snapshot(back) == bytes);
  Registry r{back.registry};
  CHECK(r.state().check_invariants().empty());
}

TEST_CASE("an empty registry snapshot round trips") {
  Snapshot s{RegistryState{RegistryConfig{}}, std::nullopt, {}};
  CHECK(read_snapshot(write_snapshot(s)) == s);
}

TEST_CASE("any flipped byte is detected") {
  std::string bytes = write_snapshot(busy_snapshot());
  for (std::size_t pos : {std::size_t{2}, bytes.size() / 3, bytes.size() / 2, bytes.size() - 3}) {
    std::string bad = bytes;
    bad[pos] ^= 0x01;
    CAPTURE(pos);
    CHECK(code_of([&] { read_snapshot(bad); }) == errc::CorruptSnapshot);
  }
  CHECK(code_of([&] { read_snapshot("{"); }) == errc::CorruptSnapshot);
  CHECK(code_of([&] { read_snapshot(""); }) == errc::CorruptSnapshot);
}

TEST_CASE("a rehashed but edited snapshot fails the structural checks") {
  auto doc = nlohmann::json::parse(write_snapshot(busy_snapshot()));
  doc["content"]["registry"]["next_id"] = 1;
  CHECK(code_of([&] { read_snapshot(rehash(doc)); }) == errc::CorruptSnapshot);
}

TEST_CASE("an intact snapshot of another version is a version mismatch") {
  auto doc = nlohmann::json::parse(write_snapshot(busy_snapshot()));
  doc["version"] = kSnapshotVersion + 1;
  CHECK(code_of([&] { read_snapshot(rehash(doc)); }) == errc::VersionMismatch);
}

TEST_CASE("decimal parsing keeps leading zeros decimal") {
  CHECK(parse_rational("0.012") == Rational(12, 1000));
  CHECK(parse_rational("0.00186") == Rational(186, 100000));
  CHECK(parse_rational("007") == 7);
  CHECK(parse_rational("010/08") == Rational(5, 4));
  CHECK(parse_rational("-0.5") == Rational(-1, 2));
  CHECK_THROWS_AS(parse_rational("1e3"), Error);
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
}

TEST_CASE("settings parse and validate") {
  SimulationConfig c;
  apply_settings(c, {{"block_interval", "20"},
                     {"fee_32", "4000"},
                     {"pool", "2001:2000::/24"},
                     {"genesis_rate", "180.5"},
                     {"asn_capped_lengths", "none"}});
  CHECK(c.ledger.block_interval == 20);
  CHECK(c.registry.fees.base_fee_fiat.at(32) == 4000);
  CHECK(c.registry.pool == parse_prefix("2001:2000::/24"));
  CHECK(c.registry.genesis_rate == parse_rational("180.5"));
  CHECK(c.registry.asn_capped_lengths.empty());
  CHECK(code_of([&] { apply_setting(c, "no_such_key", "1"); }) == errc::BadConfig);
  CHECK(code_of([&] { apply_setting(c, "block_interval", "0"); }) == errc::BadConfig);
  CHECK(code_of([&] { apply_setting(c, "block_interval", "ten"); }) == errc::BadConfig);
  CHECK(code_of([&] { apply_setting(c, "genesis_rate", "-1"); }) == errc::BadConfig);
  CHECK(code_of([&] { apply_setting(c, "fee_destination", "moon"); }) == errc::BadConfig);
}

TEST_CASE("precedence: defaults < scenario < overrides") {
  auto scn = parse_scenario("name p\nset block_interval 20\nset rate_limit 7\n");
  auto run = run_scenario(scn, {{"block_interval", "30"}, {"block_interval", "40"}});
  CHECK(run.config.ledger.block_interval == 40);
  CHECK(run.config.registry.rate_limit == 7);
  CHECK(run.config.ledger.confirmation_depth == 12);
}

TEST_CASE("environment settings") {
  ::setenv("INBLOCK_RATE_LIMIT", "55", 1);
  ::setenv("INBLOCK_FEE_48", "333", 1);
  auto env = read_environment();
  ::unsetenv("INBLOCK_RATE_LIMIT");
  ::unsetenv("INBLOCK_FEE_48");
  SimulationConfig c;
  apply_settings(c, env);
  CHECK(c.registry.rate_limit == 55);
  CHECK(c.registry.fees.base_fee_fiat.at(48) == 333);
}

}
