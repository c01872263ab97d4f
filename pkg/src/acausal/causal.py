"""Predefined-causal-order baselines for the parity game.

In any predefined causal order one party acts first and stays first; she
may route the order of the later parties, every activated party appends
its input to the running transcript, and outcomes may depend on anything
already seen. Under that model the parity game's success probability is
capped at ``1 - 1/(2n)``: whenever the guesser is not last she must guess
a uniformly random parity. The cap is achieved by the forwarding strategy
and, at small n, confirmed tight by exhaustive enumeration.

The shared variable m is treated as pre-shared randomness available to
everyone, and the identity of the first party is fixed independently of
it; this modeling choice is recorded in every report.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

__all__ = [
    "MODEL",
    "CausalProtocol",
    "CausalValue",
    "causal_bound",
    "repeated_success",
    "forwarding_strategy_success",
    "enumerate_protocol_values",
    "brute_force_causal",
]

MODEL = "adaptive-order full-forwarding"


@dataclass(frozen=True)
class CausalProtocol:
    """A deterministic adaptive-order protocol.

    ``orders[(m, a_first)]`` is the full activation order (a permutation
    starting with ``first``) chosen once the first party knows m and her
    own input. Messages are full-forwarding: each activated party appends
    ``(party, input)`` to the transcript. ``outputs`` maps information
    sets ``(m, a_m, transcript)`` to the guesser's outcome bit and is
    filled in by evaluation with the conditional-majority rule.
    """

    n: int
    first: int
    orders: Mapping[tuple[int, int], tuple[int, ...]]
    outputs: Mapping[tuple, int] | None = None

    def order_for(self, m: int, a_first: int) -> tuple[int, ...]:
        return self.orders[(m, a_first)]

    def to_json(self) -> dict:
        entries = [
            {"m": m, "a_first": a, "order": list(order)}
            for (m, a), order in sorted(self.orders.items())
        ]
        return {"first": self.first, "orders": entries}


@dataclass(frozen=True)
class CausalValue:
    """Best causal success probability with a witnessing protocol."""

    n: int
    value: Fraction
    bound: Fraction
    protocol: CausalProtocol
    per_m: tuple[Fraction, ...]
    model: str = MODEL


def causal_bound(n: int) -> Fraction:
    """The causal-order cap 1 - 1/(2n) on the game's success probability."""
    if n < 2:
        raise ValueError(f"the bound needs n >= 2, got {n}")
    return 1 - Fraction(1, 2 * n)


def repeated_success(n: int, rounds: int) -> Fraction:
    """Probability of winning ``rounds`` independent repetitions under the
    causal bound; strictly decreasing in the round count."""
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    return causal_bound(n) ** rounds


def _evaluate(n: int, first: int, orders) -> tuple[Fraction, tuple[Fraction, ...], dict]:
    """Exact value of a protocol shell under optimal deterministic outputs.

    For each information set of the guesser the conditional-majority
    output is optimal (everything else being deterministic and the unseen
    inputs uniform); ties resolve toward 0 without affecting the value.
    """
    counts: dict[tuple, list[int]] = {}
    for m in range(n):
        for a_idx in range(1 << n):
            a = [(a_idx >> (n - 1 - i)) & 1 for i in range(n)]
            order = orders[(m, a[first])]
            pos = order.index(m)
            transcript = tuple((p, a[p]) for p in order[:pos])
            target = (sum(a) - a[m]) & 1
            key = (m, a[m], transcript)
            counts.setdefault(key, [0, 0])[target] += 1
    per_m_wins = [0] * n
    outputs = {}
    for key, (c0, c1) in counts.items():
        outputs[key] = 0 if c0 >= c1 else 1
        per_m_wins[key[0]] += max(c0, c1)
    per_m = tuple(Fraction(wins, 1 << n) for wins in per_m_wins)
    return sum(per_m) / n, per_m, outputs


def forwarding_strategy_success(n: int) -> CausalValue:
    """Value and witness of the optimal forwarding protocol.

    Party 0 goes first and routes the order so that the guesser acts last
    whenever the guesser is somebody else; every per-m term is then 1
    except m = 0, where the first party can only guess. The returned value
    is computed by honest evaluation and equals ``causal_bound(n)`` -- for
    n = 2 as well, where there is no routing freedom and the 3/4 comes out
    of the plain two-party order.
    """
    if n < 2:
        raise ValueError(f"the game needs n >= 2, got {n}")
    first = 0
    rest = list(range(1, n))
    orders = {}
    for m in range(n):
        for a_first in (0, 1):
            if m == first:
                order = (first, *rest)
            else:
                order = (first, *(p for p in rest if p != m), m)
            orders[(m, a_first)] = order
    value, per_m, outputs = _evaluate(n, first, orders)
    protocol = CausalProtocol(n=n, first=first, orders=orders, outputs=outputs)
    return CausalValue(
        n=n, value=value, bound=causal_bound(n), protocol=protocol, per_m=per_m
    )


def enumerate_protocol_values(
    n: int, fixed_order: bool = False
) -> Iterator[tuple[Fraction, int, tuple]]:
    """Exact values of every deterministic protocol shell.

    Yields ``(value, first, order_assignment)`` over all choices of first
    party and order rule; with ``fixed_order`` the rule is restricted to a
    single order used for every (m, a_first). Feasible for n <= 3 only.
    """
    if n not in (2, 3):
        raise ValueError(
            f"exhaustive enumeration is refused for n={n}: the order-rule "
            "space grows too fast; only n in (2, 3) is supported"
        )
    domain = [(m, a) for m in range(n) for a in (0, 1)]
    for first in range(n):
        rest = [p for p in range(n) if p != first]
        tails = list(itertools.permutations(rest))
        if fixed_order:
            assignments = (itertools.repeat(tail, len(domain)) for tail in tails)
        else:
            assignments = itertools.product(tails, repeat=len(domain))
        for assignment in assignments:
            orders = {
                key: (first, *tail) for key, tail in zip(domain, assignment)
            }
            value, _, _ = _evaluate(n, first, orders)
            yield value, first, tuple(orders.items())


def brute_force_causal(n: int, fixed_order: bool = False) -> CausalValue:
    """Exhaustive maximum over deterministic causal protocols (n <= 3).

    Enumerates the first party and every adaptive order rule, with outputs
    optimized by conditional majority; returns the exact maximum and an
    optimal witness. The result meets ``causal_bound(n)``, and restricting
    to fixed (non-adaptive) orders drops the value to ``1/2 + 1/(2n)``.
    """
    best = None
    for value, first, order_items in enumerate_protocol_values(n, fixed_order):
        if best is None or value > best[0]:
            best = (value, first, dict(order_items))
    value, first, orders = best
    _, per_m, outputs = _evaluate(n, first, orders)
    protocol = CausalProtocol(n=n, first=first, orders=orders, outputs=outputs)
    return CausalValue(
        n=n,
        value=value,
        bound=causal_bound(n),
        protocol=protocol,
        per_m=per_m,
    )
