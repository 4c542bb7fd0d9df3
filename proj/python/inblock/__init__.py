"""Python bindings for the InBlock registry simulator.

Amounts cross the boundary as exact rational strings ("15", "51/4"); use
``as_fraction`` to turn them into ``fractions.Fraction``.
"""
from fractions import Fraction

from ._inblock import (
    Registry,
    buddy,
    canonical_prefix,
    contains,
    economics,
    effective_fee,
    end_to_end_allocation_latency,
    fig2,
    required_crypto_amount,
    run_scenario,
    split,
    throughput_requirement,
    verify_chain,
    whole_space_cost,
)


def as_fraction(value: str) -> Fraction:
    return Fraction(value)


__all__ = [
    "Registry",
    "as_fraction",
    "buddy",
    "canonical_prefix",
    "contains",
    "economics",
    "effective_fee",
    "end_to_end_allocation_latency",
    "fig2",
    "required_crypto_amount",
    "run_scenario",
    "split",
    "throughput_requirement",
    "verify_chain",
    "whole_space_cost",
]
