"""Shared brute-force oracles and random generators for the test suite.

The oracles deliberately avoid the library's fast paths: dense entries are
summed term by term with the sign rule instead of the parity transform, and
total probabilities are accumulated over explicit joint assignments.
"""

from __future__ import annotations

import random
from fractions import Fraction

from acausal.diagop import DiagOperator, Wire, WireLayout


def dense_oracle(op: DiagOperator) -> list[Fraction]:
    """Diagonal entries computed entry by entry from the sign rule."""
    out = []
    for b in range(1 << op.layout.width):
        total = Fraction(0)
        for mask, c in op.terms.items():
            total += -c if (b & mask).bit_count() & 1 else c
        out.append(total)
    return out


def total_probability_oracle(op: DiagOperator, tables) -> Fraction:
    """Total outcome probability of deterministic channels fed through a
    process operator, summed over all explicit joint assignments."""
    layout = op.layout
    total = Fraction(0)
    for b, value in enumerate(dense_oracle(op)):
        if not value:
            continue
        if all(
            table[layout.extract(b, f"I{p}")] == layout.extract(b, f"O{p}")
            for p, table in enumerate(tables)
        ):
            total += value
    return total


def random_layout(rng: random.Random, max_width: int = 12) -> WireLayout:
    budget = rng.randint(1, max_width)
    wires = []
    k = 0
    while budget:
        w = min(budget, rng.randint(1, 3))
        wires.append(Wire(k, rng.choice("IO"), w))
        budget -= w
        k += 1
    return WireLayout(wires)


def random_operator(rng: random.Random, max_width: int = 12,
                    max_terms: int = 6) -> DiagOperator:
    layout = random_layout(rng, max_width)
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        mask = rng.randrange(1 << layout.width)
        terms[mask] = Fraction(rng.randint(-8, 8), 1 << rng.randint(0, 4))
    return DiagOperator(layout, terms)


def random_dyadic_distribution(rng: random.Random, k: int,
                               grain: int = 8) -> list[Fraction]:
    """A length-k probability vector with denominators dividing ``grain``."""
    bins = [0] * k
    for _ in range(grain):
        bins[rng.randrange(k)] += 1
    return [Fraction(b, grain) for b in bins]


def all_subgroups(masks) -> set[frozenset[int]]:
    """Every XOR-closed subset (containing 0) of the span of the masks."""
    seen = {frozenset({0})}
    frontier = [frozenset({0})]
    while frontier:
        sub = frontier.pop()
        for v in masks:
            if v not in sub:
                bigger = frozenset(sub | {x ^ v for x in sub})
                if bigger not in seen:
                    seen.add(bigger)
                    frontier.append(bigger)
    return seen
