"""The n-party parity game played through a process matrix.

Each of the n parties holds a uniform input bit ``a_i`` and must produce an
outcome bit ``x_i``; a shared uniform variable ``m`` names the party whose
outcome must equal the parity of everyone else's input. The exact evaluator
contracts local behaviors against a process matrix; the Monte-Carlo sampler
runs the equivalent circular-channel mixture shot by shot. Both yield
certain winning for the strategies built here, for every n >= 3.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

from .diagop import (
    DiagOperator,
    LayoutError,
    Wire,
    WireLayout,
    from_dense,
    identity,
    mask_fields,
    partial_trace,
    to_dense,
)
from .process import (
    ProcessMatrix,
    UnsupportedPartyCount,
    build_w,
    loop_decomposition,
)

__all__ = [
    "GameRound",
    "LocalBehavior",
    "GameResult",
    "SampleResult",
    "RNG_NAME",
    "wide_code",
    "winning_behavior",
    "behavior_from_table",
    "outcome_distribution",
    "success_probability_exact",
    "sample_game",
]

RNG_NAME = "mt19937"

Strategy = Callable[[int, int, int, int], "LocalBehavior"]


@dataclass(frozen=True)
class GameRound:
    """One game instance: party count, referee value m, input bits."""

    n: int
    m: int
    inputs: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.m < self.n:
            raise ValueError(f"m must lie in 0..{self.n - 1}, got {self.m}")
        if len(self.inputs) != self.n:
            raise ValueError(f"need {self.n} input bits, got {len(self.inputs)}")
        if any(a not in (0, 1) for a in self.inputs):
            raise ValueError("inputs must be bits")

    @property
    def target(self) -> int:
        """Parity of all inputs except party m's own."""
        return (sum(self.inputs) - self.inputs[self.m]) & 1


class LocalBehavior:
    """One party's conditional outcome-and-output distribution.

    ``ops[x]`` is the diagonal operator over the wires ``(O_i, I_i)`` whose
    entry at ``(o, v)`` is ``P(X_i = x, O_i = o | I_i = v)``. Summed over
    outcomes, the operators form a normalized channel.
    """

    __slots__ = ("party", "layout", "ops", "_cache")

    def __init__(self, party: int, layout: WireLayout,
                 ops: Mapping[int, DiagOperator]):
        self.party = party
        self.layout = layout
        self.ops = dict(ops)
        for op in self.ops.values():
            if op.layout != layout:
                raise LayoutError("behavior operators must share the layout")
        self._cache: dict = {}

    @property
    def widths(self) -> tuple[int, int]:
        (o_wire, i_wire) = self.layout.wires
        return o_wire.width, i_wire.width

    def marginal_terms(self) -> dict[int, Fraction]:
        """Parity terms of the outcome-summed channel."""
        total: dict[int, Fraction] = {}
        for op in self.ops.values():
            for m, c in op.terms.items():
                total[m] = total.get(m, Fraction(0)) + c
        return {m: c for m, c in total.items() if c}

    def check(self) -> bool:
        """Normalization: the outcome-summed channel traces to the identity."""
        o_name = self.layout.wires[0].name
        channel = DiagOperator(self.layout, self.marginal_terms())
        traced = partial_trace(channel, [o_name])
        return traced == identity(self.layout.restrict([self.layout.wires[1].name]))

    def scaled(self, x: int) -> tuple[dict[int, int], int]:
        key = ("x", x)
        if key not in self._cache:
            self._cache[key] = _scaled_terms(self.ops[x].terms)
        return self._cache[key]

    def scaled_marginal(self) -> tuple[dict[int, int], int]:
        if "marginal" not in self._cache:
            self._cache["marginal"] = _scaled_terms(self.marginal_terms())
        return self._cache["marginal"]

    def outcome_lookup(self) -> tuple[list[list[tuple[int, int, int]]], int]:
        """Sampling table: per input value, the (x, o, weight) choices.

        Weights are numerators over a common power-of-two denominator and
        sum to that denominator for every input value.
        """
        if "lookup" not in self._cache:
            wo, wi = self.widths
            dense = {x: to_dense(op) for x, op in self.ops.items()}
            scale = 0
            for vec in dense.values():
                for val in vec:
                    if val:
                        scale = max(scale, val.denominator.bit_length() - 1)
            lookup: list[list[tuple[int, int, int]]] = []
            for v in range(1 << wi):
                choices = []
                for x in sorted(dense):
                    for o in range(1 << wo):
                        p = dense[x][(o << wi) | v]
                        if p < 0:
                            raise ValueError(
                                f"behavior of party {self.party} has a "
                                f"negative weight at input {v}"
                            )
                        if p:
                            num = p.numerator << (scale - (p.denominator.bit_length() - 1))
                            choices.append((x, o, num))
                if sum(c[2] for c in choices) != 1 << scale:
                    raise ValueError(
                        f"behavior of party {self.party} is not normalized "
                        f"at input {v}"
                    )
                lookup.append(choices)
            self._cache["lookup"] = (lookup, scale)
        return self._cache["lookup"]


def _scaled_terms(terms: Mapping[int, Fraction]) -> tuple[dict[int, int], int]:
    """Integer numerators of dyadic coefficients at a common scale."""
    if not terms:
        return {}, 0
    scale = max(c.denominator.bit_length() - 1 for c in terms.values())
    return (
        {
            m: c.numerator << (scale - (c.denominator.bit_length() - 1))
            for m, c in terms.items()
        },
        scale,
    )


def _projector_terms(width: int, norm_log2: int, local_mask: int | None,
                     sign: int) -> dict[int, Fraction]:
    """Terms of ``(1 + (-1)^sign Z_mask) / 2**norm_log2`` on one wire,
    or of the bare scaled identity when ``local_mask`` is None."""
    c = Fraction(1, 1 << norm_log2)
    if local_mask is None:
        return {0: c}
    return {0: c, local_mask: -c if sign & 1 else c}


_CODE_MASKS = {"first": 0b10, "second": 0b01, "both": 0b11}


@lru_cache(maxsize=None)
def wide_code(n: int, m: int) -> str:
    """How the wide-register pair encodes its bit for a given m (even n).

    The second-to-last party writes onto the first, the second, or both
    bits of its doubled output; the choice must make the accumulated loop
    flips cancel on the path that ends at party m. The mapping is found by
    checking the (at most three) candidate codes against the derived loop
    set rather than assumed; when the path avoids the wide edge entirely
    the register is ignored.
    """
    if n % 2 or n < 4:
        raise ValueError(f"wide_code needs an even n >= 4, got {n}")
    if not 0 <= m < n:
        raise ValueError(f"m must lie in 0..{n - 1}, got {m}")
    if m == n - 2:
        return "ignore"
    loops = loop_decomposition(n)
    start = (m + 1) % n
    single_receivers = [j for j in range(n) if j != start and j != n - 1]
    for code in ("first", "second", "both"):
        mask = _CODE_MASKS[code]
        if all(
            (
                sum(loop.flip_into(j) for j in single_receivers)
                + (loop.flip_into(n - 1) & mask).bit_count()
            )
            % 2
            == 0
            for loop in loops
        ):
            return code
    raise AssertionError(f"no consistent wide-register code for n={n}, m={m}")


@lru_cache(maxsize=None)
def winning_behavior(n: int, m: int, i: int, a_i: int) -> LocalBehavior:
    """The local behavior with which the parity game is won with certainty.

    Every party reads its outcome bit off its input and forwards
    ``a_i XOR x_i``, except the party right after the designated guesser,
    which injects its bare input bit into the loop. For even n the two
    wide-register parties encode/decode through the bits selected by
    :func:`wide_code`.
    """
    if n == 2:
        raise UnsupportedPartyCount("the parity game has no 2-party strategy")
    if n < 2:
        raise ValueError(f"party count must be >= 2, got {n}")
    if not 0 <= m < n:
        raise ValueError(f"m must lie in 0..{n - 1}, got {m}")
    if not 0 <= i < n:
        raise ValueError(f"party index must lie in 0..{n - 1}, got {i}")
    if a_i not in (0, 1):
        raise ValueError("a_i must be a bit")

    even = n % 2 == 0
    starter = i == (m + 1) % n
    wo = 2 if even and i == n - 2 else 1
    wi = 2 if even and i == n - 1 else 1
    layout = WireLayout([Wire(i, "O", wo), Wire(i, "I", wi)])

    ops = {}
    for x in (0, 1):
        send = a_i if starter else a_i ^ x
        if wo == 2:
            code = wide_code(n, m)
            mask = _CODE_MASKS.get(code)
            o_terms = _projector_terms(2, 2, mask, send)
        else:
            o_terms = _projector_terms(1, 1, 0b1, send)
        if wi == 2:
            if starter:
                i_terms = _projector_terms(2, 1, None, 0)
            else:
                code = wide_code(n, m)
                i_terms = _projector_terms(2, 1, _CODE_MASKS[code], x)
        else:
            i_terms = _projector_terms(1, 1, 0b1, x)
        terms = {}
        for mo, co in o_terms.items():
            for mi, ci in i_terms.items():
                terms[(mo << wi) | mi] = co * ci
        ops[x] = DiagOperator(layout, terms)
    return LocalBehavior(party=i, layout=layout, ops=ops)


def behavior_from_table(party: int, o_width: int, i_width: int,
                        table: Sequence[tuple[int, int]]) -> LocalBehavior:
    """Deterministic behavior from an explicit function table ``v -> (x, o)``."""
    if len(table) != 1 << i_width:
        raise ValueError(f"table must cover all {1 << i_width} input values")
    layout = WireLayout([Wire(party, "O", o_width), Wire(party, "I", i_width)])
    dense = {x: [Fraction(0)] * (1 << layout.width) for x in (0, 1)}
    for v, (x, o) in enumerate(table):
        dense[x][(o << i_width) | v] = Fraction(1)
    ops = {x: from_dense(layout, vec) for x, vec in dense.items()}
    return LocalBehavior(party=party, layout=layout, ops=ops)


# ---------------------------------------------------------------------------
# exact evaluation
# ---------------------------------------------------------------------------

def _pairing_table(w: ProcessMatrix):
    """Per process term: integer numerator and per-party restricted keys."""
    terms = w.operator.terms
    scale = max(c.denominator.bit_length() - 1 for c in terms.values())
    rows = []
    for mask, c in terms.items():
        num = c.numerator << (scale - (c.denominator.bit_length() - 1))
        keys = tuple(
            mask_fields(w.layout, mask, (f"O{i}", f"I{i}")) for i in range(w.n)
        )
        rows.append((num, keys))
    return rows, scale


def _pair(rows, w_scale, width, party_dicts) -> Fraction:
    """Exact trace of the behavior product against the process operator."""
    acc = 0
    total_scale = w_scale
    dicts = []
    for d, s in party_dicts:
        dicts.append(d)
        total_scale += s
    for num, keys in rows:
        prod = num
        for d, key in zip(dicts, keys):
            v = d.get(key)
            if not v:
                prod = 0
                break
            prod *= v
        acc += prod
    return Fraction(acc << width, 1 << total_scale)


def outcome_distribution(
    w: ProcessMatrix,
    behaviors: Sequence[LocalBehavior],
) -> dict[tuple[int, ...], Fraction]:
    """Exact joint outcome distribution P(x_0..x_{n-1}).

    The behaviors' operators are contracted against the process matrix;
    for valid inputs the returned weights are non-negative and sum to 1.
    Zero-probability outcomes are included so the support is explicit.
    """
    n = w.n
    if len(behaviors) != n:
        raise ValueError(f"need {n} behaviors, got {len(behaviors)}")
    for i, beh in enumerate(behaviors):
        if beh.party != i:
            raise LayoutError(f"behavior {i} belongs to party {beh.party}")
    rows, w_scale = _pairing_table(w)
    width = w.layout.width
    dist = {}
    for packed in range(1 << n):
        xs = tuple((packed >> (n - 1 - i)) & 1 for i in range(n))
        party_dicts = [behaviors[i].scaled(xs[i]) for i in range(n)]
        dist[xs] = _pair(rows, w_scale, width, party_dicts)
    return dist


def success_probability_exact(n: int, strategy: Strategy | None = None) -> "GameResult":
    """Exact per-m and overall success probabilities of a strategy family.

    The default strategy wins with certainty for every n >= 3: each per-m
    probability is exactly 1.
    """
    if n == 2:
        raise UnsupportedPartyCount("the parity game has no 2-party strategy")
    if n < 2:
        raise ValueError(f"party count must be >= 2, got {n}")
    strategy = strategy or winning_behavior
    w = build_w(n)
    rows, w_scale = _pairing_table(w)
    width = w.layout.width
    per_m = []
    for m in range(n):
        win = Fraction(0)
        for a_idx in range(1 << n):
            a_bits = [(a_idx >> (n - 1 - i)) & 1 for i in range(n)]
            target = (a_idx.bit_count() - a_bits[m]) & 1
            party_dicts = []
            for i in range(n):
                beh = strategy(n, m, i, a_bits[i])
                if i == m:
                    party_dicts.append(beh.scaled(target))
                else:
                    party_dicts.append(beh.scaled_marginal())
            win += _pair(rows, w_scale, width, party_dicts)
        per_m.append(win / (1 << n))
    return GameResult(n=n, per_m=tuple(per_m), p_succ=sum(per_m) / n)


@dataclass(frozen=True)
class GameResult:
    """Exact game value: one success probability per m and their average."""

    n: int
    per_m: tuple[Fraction, ...]
    p_succ: Fraction

    def to_json(self) -> dict:
        def dyadic(v: Fraction) -> dict:
            return {"num": v.numerator, "log2den": v.denominator.bit_length() - 1}

        return {
            "n": self.n,
            "per_m": [dyadic(v) for v in self.per_m],
            "p_succ": dyadic(self.p_succ),
        }


# ---------------------------------------------------------------------------
# Monte-Carlo sampling over the loop mixture
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleResult:
    """Seeded sampling record; identical seeds give identical transcripts."""

    n: int
    shots: int
    seed: int
    rng: str
    wins: int
    losses: int
    per_m_wins: tuple[int, ...]
    per_m_shots: tuple[int, ...]

    @property
    def estimate(self) -> float:
        return self.wins / self.shots

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "shots": self.shots,
            "seed": self.seed,
            "rng": self.rng,
            "wins": self.wins,
            "estimate": self.estimate,
        }


def sample_game(n: int, shots: int, seed: int,
                strategy: Strategy | None = None) -> SampleResult:
    """Estimate the game value by simulating the circular-channel mixture.

    Each shot draws m, the inputs, one loop, and one deterministic function
    table per party, then counts the loop-consistent assignments and how
    many of them win. The count is an unbiased weight: averaged over shots
    it estimates the exact success probability, and for the default winning
    strategy every shot contributes exactly one consistent, winning
    assignment.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if n == 2:
        raise UnsupportedPartyCount("the parity game has no 2-party strategy")
    strategy = strategy or winning_behavior
    loops = loop_decomposition(n)
    nloops = len(loops)
    rng = random.Random(seed)
    wins = losses = 0
    per_m_wins = [0] * n
    per_m_shots = [0] * n
    for _ in range(shots):
        m = rng.randrange(n)
        a_idx = rng.getrandbits(n)
        a_bits = [(a_idx >> (n - 1 - i)) & 1 for i in range(n)]
        loop = loops[rng.randrange(nloops)]
        tables = []
        for i in range(n):
            lookup, scale = strategy(n, m, i, a_bits[i]).outcome_lookup()
            table = []
            for choices in lookup:
                if len(choices) == 1:
                    table.append(choices[0][:2])
                else:
                    r = rng.randrange(1 << scale)
                    acc = 0
                    for x, o, num in choices:
                        acc += num
                        if r < acc:
                            table.append((x, o))
                            break
            tables.append(table)
        target = (a_idx.bit_count() - a_bits[m]) & 1
        per_m_shots[m] += 1
        for cand in range(len(tables[0])):
            v = cand
            xm = -1
            for j in range(n):
                x, o = tables[j][v]
                if j == m:
                    xm = x
                v = o ^ loop.flip_into((j + 1) % n)
            if v == cand:
                if xm == target:
                    wins += 1
                    per_m_wins[m] += 1
                else:
                    losses += 1
    return SampleResult(
        n=n,
        shots=shots,
        seed=seed,
        rng=RNG_NAME,
        wins=wins,
        losses=losses,
        per_m_wins=tuple(per_m_wins),
        per_m_shots=tuple(per_m_shots),
    )
