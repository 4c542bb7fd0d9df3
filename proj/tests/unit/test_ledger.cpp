#include "inblock/ledger.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace inblock;

namespace {

constexpr Timestamp kG = 1'600'000'000;

KeyPair key_for(const SignatureScheme& s, std::string_view name) {
  return s.derive_keypair(sha256(std::string("ledger-test|") + std::string(name)));
}

struct Fixture {
  std::shared_ptr<const SignatureScheme> scheme;
  KeyPair alice, bob;
  Ledger ledger;

  explicit Fixture(std::shared_ptr<const SignatureScheme> s = stub_scheme(),
                   LedgerConfig lc = {})
    : scheme(s), alice(key_for(*s, "alice")), bob(key_for(*s, "bob")),
      ledger(lc, registry_config(), s,
             {{alice.id(), Rational(100)}, {bob.id(), Rational(50)}}) {}

  static RegistryConfig registry_config() {
    RegistryConfig c;
    c.genesis_rate = Rational(200);
    return c;
  }

  Transaction tx(const KeyPair& k, Payload p, Rational value = 0, Rational tip = 0,
                 std::optional<std::uint64_t> nonce = std::nullopt) {
    AccountId to = std::holds_alternative<TransferPayload>(p) ? bob.id() : Ledger::registry_address();
    return make_signed_transaction(*scheme, k, to, value, tip,
                                   nonce.value_or(ledger.next_nonce(k.id())), std::move(p));
  }
};

} // namespace

TEST_SUITE("ledger_sim") {

TEST_CASE("closed-form latency") {
  CHECK(end_to_end_allocation_latency(120, 17, 12) == 341);
  CHECK(end_to_end_allocation_latency(0, 10, 0) == 10);
}

TEST_CASE("allocation confirms 341 s after submission") {
  Fixture f;
  f.ledger.advance_to(kG + 16);
  auto h = f.ledger.submit(f.tx(f.alice, AllocatePayload{32, {}}, 15));
  REQUIRE(h.ok());
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Pending);
  f.ledger.advance_to(kG + 16 + 340);
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Included);
  CHECK_FALSE(f.ledger.confirmation_latency(h.value()).has_value());
  f.ledger.advance_to(kG + 16 + 341);
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Confirmed);
  CHECK(f.ledger.confirmation_latency(h.value()) == 341);
  const Receipt* r = f.ledger.receipt(h.value());
  REQUIRE(r);
  CHECK(r->accepted);
  CHECK(r->details.at("prefixes") == "2001:1000::/32");
  CHECK(f.ledger.balance(f.alice.id()) == 85);
  CHECK(f.ledger.balance(Ledger::registry_address()) == 15);
}

TEST_CASE("confirmation boundary at the configured depth") {
  Fixture f;
  auto h = f.ledger.submit(f.tx(f.bob, TransferPayload{}, 1));
  REQUIRE(h.ok());
  // Eligible at G+120; the block whose mining window starts there is 8.
  f.ledger.advance_to(kG + 9 * 17);
  auto st = f.ledger.confirmation_status(h.value());
  REQUIRE(st.height.has_value());
  std::uint64_t inc = *st.height;
  CHECK(inc == 9);
  f.ledger.advance_to(kG + (inc + 11) * 17);
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Included);
  f.ledger.advance_to(kG + (inc + 12) * 17);
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Confirmed);
  CHECK(f.ledger.confirmation_status(h.value(), 20).status == TxStatus::Included);
}

TEST_CASE("inclusion at block 10 confirms at block 22, not 21") {
  LedgerConfig lc;
  lc.inclusion_delay = 0;
  Fixture f(stub_scheme(), lc);
  f.ledger.advance_to(kG + 9 * 17);
  auto h = f.ledger.submit(f.tx(f.bob, TransferPayload{}, 1));
  REQUIRE(h.ok());
  f.ledger.advance_to(kG + 21 * 17);
  CHECK(f.ledger.confirmation_status(h.value()).height == 10u);
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Included);
  f.ledger.advance_to(kG + 22 * 17);
  CHECK(f.ledger.confirmation_status(h.value()).status == TxStatus::Confirmed);
}

TEST_CASE("produce_block refuses to run ahead of the clock") {
  Fixture f;
  CHECK_THROWS_WITH_AS(f.ledger.produce_block(), doctest::Contains("ClockNotAdvanced"), Error);
  CHECK_THROWS_AS(f.ledger.advance_to(kG - 1), Error);
}

TEST_CASE("submission errors") {
  Fixture f;
  auto good = f.tx(f.alice, TransferPayload{}, 1);

  auto forged = good;
  forged.value = 2;
  CHECK(f.ledger.submit(forged).code() == errc::BadSignature);

  auto impostor = good;
  impostor.from = f.bob.id();
  CHECK(f.ledger.submit(impostor).code() == errc::BadSignature);

  CHECK(f.ledger.submit(f.tx(f.alice, TransferPayload{}, 1, 0, 7)).code() == errc::BadNonce);
  CHECK(f.ledger.submit(f.tx(f.alice, TransferPayload{}, 101)).code()
        == errc::InsufficientBalance);
  CHECK(f.ledger.submit(f.tx(f.alice, TransferPayload{}, -1)).code()
        == errc::MalformedTransaction);
  auto misdirected = make_signed_transaction(*f.scheme, f.alice, f.bob.id(), 15, 0, 1,
                                             AllocatePayload{32, {}});
  CHECK(f.ledger.submit(misdirected).code() == errc::MisdirectedPayload);

  REQUIRE(f.ledger.submit(good).ok());
  CHECK(f.ledger.submit(good).code() == errc::BadNonce); // replay
  // Pending spend counts against the balance.
  CHECK(f.ledger.submit(f.tx(f.alice, TransferPayload{}, 99, 1)).code()
        == errc::InsufficientBalance);
  CHECK(f.ledger.submit(f.tx(f.alice, TransferPayload{}, 98, 1)).ok());
}

TEST_CASE("tips order inclusion and go to the producer") {
  LedgerConfig lc;
  lc.max_txs_per_block = 1;
  lc.inclusion_delay = 0;
  Fixture f(stub_scheme(), lc);
  auto low = f.ledger.submit(f.tx(f.alice, TransferPayload{}, 1, 1));
  auto high = f.ledger.submit(f.tx(f.bob, TransferPayload{}, 1, 3));
  REQUIRE(low.ok());
  REQUIRE(high.ok());
  f.ledger.advance_to(kG + 17);
  CHECK(f.ledger.confirmation_status(high.value()).height == 1u);
  CHECK(f.ledger.confirmation_status(low.value()).status == TxStatus::Pending);
  f.ledger.advance_to(kG + 34);
  CHECK(f.ledger.confirmation_status(low.value()).height == 2u);
  CHECK(f.ledger.balance(Ledger::producer_address()) == 4);
}

TEST_CASE("a sender's transactions apply in nonce order even with rising tips") {
  LedgerConfig lc;
  lc.inclusion_delay = 0;
  Fixture f(stub_scheme(), lc);
  auto a = f.ledger.submit(f.tx(f.alice, TransferPayload{}, 1, 0));
  auto b = f.ledger.submit(f.tx(f.alice, TransferPayload{}, 1, 5));
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  f.ledger.advance_to(kG + 17);
  const auto& txs = f.ledger.chain().back().transactions;
  REQUIRE(txs.size() == 2);
  CHECK(txs[0].nonce == 1);
  CHECK(txs[1].nonce == 2);
}

TEST_CASE("block capacity spills into the next block") {
  LedgerConfig lc;
  lc.max_txs_per_block = 3;
  lc.inclusion_delay = 0;
  Fixture f(stub_scheme(), lc);
  for (int i = 0; i < 7; ++i)
    REQUIRE(f.ledger.submit(f.tx(f.alice, TransferPayload{}, 1)).ok());
  f.ledger.advance_to(kG + 3 * 17);
  CHECK(f.ledger.chain()[1].transactions.size() == 3);
  CHECK(f.ledger.chain()[2].transactions.size() == 3);
  CHECK(f.ledger.chain()[3].transactions.size() == 1);
}

TEST_CASE("rejected registry calls still pay and still consume the nonce") {
  Fixture f;
  auto h = f.ledger.submit(f.tx(f.alice, AllocatePayload{40, {}}, 5));
  REQUIRE(h.ok());
  f.ledger.advance_to(kG + 20 * 17);
  const Receipt* r = f.ledger.receipt(h.value());
  REQUIRE(r);
  CHECK_FALSE(r->accepted);
  CHECK(r->error == errc::UnsupportedLength);
  CHECK(f.ledger.balance(f.alice.id()) == 95);
  CHECK(f.ledger.next_nonce(f.alice.id()) == 2);
  CHECK(f.ledger.registry().state().accounting.rejected_payments == 5);
}

TEST_CASE("expiration sweep receipts carry no transaction hash") {
  LedgerConfig lc;
  lc.block_interval = 3600;
  lc.inclusion_delay = 0;
  Fixture f(stub_scheme(), lc);
  REQUIRE(f.ledger.submit(f.tx(f.alice, AllocatePayload{48, {}}, parse_rational("1.5"))).ok());
  f.ledger.advance_by(3600);
  REQUIRE(f.ledger.registry().state().allocations.size() == 1);
  f.ledger.advance_by(kSecondsPerYear + 3600);
  CHECK(f.ledger.registry().state().allocations.empty());
  const auto& last = f.ledger.receipts().back();
  CHECK(last.kind == "expire_sweep");
  CHECK_FALSE(last.tx_hash.has_value());
  CHECK(last.details.at("reclaimed") == "2001:1000::/48");
}

TEST_CASE("transaction encoding round trips") {
  Fixture f;
  std::vector<Payload> payloads{
    TransferPayload{},
    AllocatePayload{48, 7},
    RenewPayload{3},
    MetadataPayload{3, "ipfs://x"},
    RoaRegisterPayload{3, {parse_prefix("2001:1000::/32"), 64500, 48}},
    RoaRevokePayload{3, {parse_prefix("2001:1000::/32"), 64500, 48}},
    ResumePayload{},
    OraclePayload{{OracleKind::GdpIndex, parse_rational("1.02"), 1234, "feed"}},
  };
  for (const auto& p : payloads) {
    auto tx = f.tx(f.alice, p, parse_rational("1/3"), 2);
    auto bytes = tx.encode();
    auto back = Transaction::decode(bytes);
    CHECK(back == tx);
    CHECK(back.hash() == tx.hash());
    CHECK(back.encode() == bytes);
  }
  auto bytes = f.tx(f.alice, AllocatePayload{32, {}}).encode();
  CHECK_THROWS_AS(Transaction::decode(ByteView(bytes).first(bytes.size() - 1)), Error);
  bytes.push_back(0);
  CHECK_THROWS_AS(Transaction::decode(bytes), Error);
}

TEST_CASE("ed25519 signatures are checked") {
  Fixture f(ed25519_scheme());
  auto tx = f.tx(f.alice, TransferPayload{}, 1);
  CHECK(f.scheme->verify(tx.sender_key, tx.signing_bytes(), tx.signature));
  auto bad = tx;
  bad.signature[0] ^= 1;
  CHECK(f.ledger.submit(bad).code() == errc::BadSignature);
  CHECK(f.ledger.submit(tx).ok());
}

TEST_CASE("chain verification detects tampering at the right height") {
  LedgerConfig lc;
  lc.inclusion_delay = 0;
  Fixture f(stub_scheme(), lc);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(f.ledger.submit(f.tx(f.alice, TransferPayload{}, 1)).ok());
    f.ledger.advance_by(17);
  }
  std::vector<Block> chain = f.ledger.chain();
  CHECK_FALSE(verify_chain(chain, 17).has_value());

  SUBCASE("altered transaction") {
    chain[3].transactions[0].value = 50;
    CHECK(verify_chain(chain, 17) == 3u);
  }
  SUBCASE("rewritten block with recomputed hash breaks the next link") {
    chain[2].transactions[0].value = 50;
    chain[2].hash = chain[2].compute_hash();
    CHECK(verify_chain(chain, 17) == 3u);
  }
  SUBCASE("timestamp drift") {
    chain[4].timestamp += 1;
    chain[4].hash = chain[4].compute_hash();
    chain[5].parent_hash = chain[4].hash;
    chain[5].hash = chain[5].compute_hash();
    CHECK(verify_chain(chain, 17) == 4u);
    CHECK(verify_chain(chain, 0) == std::nullopt);
  }
  SUBCASE("export and import") {
    std::istringstream in(export_chain(chain));
    auto back = import_chain(in);
    REQUIRE(back.size() == chain.size());
    CHECK_FALSE(verify_chain(back, 17).has_value());
    for (std::size_t i = 0; i < chain.size(); ++i)
      CHECK(back[i].hash == chain[i].hash);
  }
}

TEST_CASE("property: value is conserved under random traffic") {
  auto gen = oracle::rng(99);
  Fixture f;
  Rational total = f.ledger.total_value();
  for (int step = 0; step < 400; ++step) {
    const KeyPair& k = gen() % 2 ? f.alice : f.bob;
    Rational amount(static_cast<long long>(gen() % 20), 1 + static_cast<long long>(gen() % 4));
    Payload p;
    switch (gen() % 4) {
      case 0: p = TransferPayload{}; break;
      case 1: p = AllocatePayload{gen() % 2 ? 32u : 48u, {}}; break;
      case 2: p = RenewPayload{1 + gen() % 5}; break;
      default: p = MetadataPayload{1 + gen() % 5, "m"}; break;
    }
    (void)f.ledger.submit(f.tx(k, p, amount, Rational(static_cast<long long>(gen() % 2))));
    f.ledger.advance_by(static_cast<Timestamp>(gen() % 40));
    REQUIRE(f.ledger.total_value() == total);
    for (const auto& [id, acc] : f.ledger.accounts())
      REQUIRE(acc.balance >= 0);
  }
}

TEST_CASE("replay determinism: same inputs, same chain") {
  auto run = [] {
    Fixture f;
    for (int i = 0; i < 30; ++i) {
      (void)f.ledger.submit(f.tx(i % 2 ? f.alice : f.bob, AllocatePayload{48, {}}, 2, i % 3));
      f.ledger.advance_by(11);
    }
    f.ledger.advance_by(600);
    return f.ledger.chain().back().hash;
  };
  CHECK(run() == run());
}

}
