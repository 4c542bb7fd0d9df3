import ipaddress
import json
import os
from fractions import Fraction
from pathlib import Path

import pytest

import inblock

ROOT = Path(__file__).resolve().parents[2]


def test_prefix_helpers_agree_with_ipaddress():
    assert inblock.canonical_prefix("2001:0db8:0000::/32") == "2001:db8::/32"
    assert inblock.buddy("2001:db8::/32") == "2001:db9::/32"
    lo, hi = inblock.split("2001:db8::/32")
    net = ipaddress.IPv6Network("2001:db8::/32")
    assert [lo, hi] == [str(n) for n in net.subnets()]
    assert inblock.contains("2001:db8::/32", "2001:db8:1::/48")
    with pytest.raises(ValueError, match="NonCanonicalPrefix"):
        inblock.canonical_prefix("2001:db8::1/32")


def test_fee_arithmetic_is_exact():
    assert inblock.effective_fee(32) == "3000"
    assert Fraction(inblock.effective_fee(48, "1.03")) == Fraction(309)
    assert inblock.required_crypto_amount("3000", "200") == "15"
    assert inblock.whole_space_cost("3000", 20) == str(3000 * 2**12)
    assert inblock.throughput_requirement(58700) == "0.0019"
    assert inblock.end_to_end_allocation_latency(120, 17, 12) == 341


def test_registry_allocation_growth_and_snapshot():
    reg = inblock.Registry(supervisors=["sam"])
    first = reg.request_allocation("carol", 32, "15", 1000, "200")
    assert first["ok"] and first["records"][0]["prefix"] == "2001:1000::/32"
    grown = reg.request_allocation("carol", 32, "15", 1001, "200",
                                   growth_proof=first["records"][0]["id"])
    assert grown["aggregatable"]
    assert reg.route_report("carol") == ["2001:1000::/31"]
    short = reg.request_allocation("dan", 32, "14", 1002, "200")
    assert not short["ok"] and short["error"] == "InsufficientFee"
    assert reg.check_invariants() == ""

    restored = inblock.Registry.restore(reg.snapshot())
    assert restored.snapshot() == reg.snapshot()
    assert [a["prefix"] for a in restored.allocations()] == ["2001:1000::/32", "2001:1001::/32"]


def test_basic_scenario_runs_and_chain_verifies():
    out = inblock.run_scenario(str(ROOT / "scenarios" / "basic_allocation.scn"))
    assert out["passed"], out["failures"]
    events = [json.loads(e) for e in out["events"]]
    assert events[0]["kind"] == "allocate" and events[0]["outcome"] == "accepted"
    assert inblock.verify_chain(out["chain"], 17) is None

    lines = out["chain"].splitlines()
    block = json.loads(lines[5])
    block["timestamp"] += 1
    lines[5] = json.dumps(block)
    assert inblock.verify_chain("\n".join(lines) + "\n") == 5


def test_fig2_fixture_histogram():
    h = inblock.fig2(str(ROOT / "data" / "delegated-extended-2018-05-fixture.txt"))
    assert h["counts"][32] == 17795
    assert h["counts"][48] == 6283
    assert h["counts"][29] == 7903
    assert h["larger_than_reference"] == 191
