"""Multi-party circular process matrices: construction, validation, loops.

A process matrix for n parties is the conditional distribution
``P(I_0..I_{n-1} | O_0..O_{n-1})`` describing everything outside the local
laboratories, constrained so that any choice of local operations yields a
normalized non-negative outcome distribution. The builder here produces,
for every party count n >= 3, a process matrix that is a uniform mixture
of deterministic circular channels and that no predefined causal order can
reproduce; for n = 2 no such construction exists and the builder refuses.

All wires are one bit, except that for even n the second-to-last party has
a two-bit output and the last party a two-bit input.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .diagop import (
    DiagOperator,
    LayoutError,
    Wire,
    WireLayout,
    channel_apply,
    from_dense,
    identity,
    is_nonnegative,
    mask_fields,
    mask_from_fields,
    partial_trace,
    point_mass,
    to_dense,
)

__all__ = [
    "UnsupportedPartyCount",
    "ProcessMatrix",
    "LoopChannel",
    "BilinearCheck",
    "ValidationReport",
    "game_layout",
    "generator_group",
    "build_w",
    "naive_even_w",
    "validate_process",
    "conditional_distribution",
    "loop_decomposition",
    "loop_operator",
]


class UnsupportedPartyCount(ValueError):
    """Raised for party counts the construction provably cannot serve."""


def game_layout(n: int) -> WireLayout:
    """Wires ``I_0..I_{n-1}, O_0..O_{n-1}`` with the even-n wide registers."""
    even = n % 2 == 0
    wires = [Wire(k, "I", 2 if even and k == n - 1 else 1) for k in range(n)]
    wires += [Wire(k, "O", 2 if even and k == n - 2 else 1) for k in range(n)]
    return WireLayout(wires)


def _bit(value: int, width: int, pos: int) -> int:
    """Bit of ``value`` at 0-based position ``pos``, first position = MSB."""
    return (value >> (width - 1 - pos)) & 1


@lru_cache(maxsize=None)
def generator_group(n: int) -> tuple[int, ...]:
    """Masks of the Abelian parity group that generates the n-party process.

    Odd n: all 2**(n-1) even-parity masks over n positions, ascending, the
    first position being the most significant bit.

    Even n: 2**(n-1) masks over n+1 bits, built from the odd (n-1)-party
    group: each element is ``(beta << 2) | prime`` where ``beta`` runs over
    the plain and the globally-flipped copy of an (n-1)-group mask and
    ``prime`` repeats that mask's first two positions on a doubled block.
    """
    if n < 3:
        raise UnsupportedPartyCount(
            "no process-matrix group exists for fewer than 3 parties"
        )
    if n % 2:
        return tuple(m for m in range(1 << n) if m.bit_count() % 2 == 0)
    base = generator_group(n - 1)
    width = n - 1
    flip_all = (1 << width) - 1

    def prime(beta: int) -> int:
        return (beta >> (width - 2)) & 0b11

    plain = [(b << 2) | prime(b) for b in base]
    barred = [((b ^ flip_all) << 2) | prime(b) for b in base]
    return tuple(plain + barred)


@dataclass(frozen=True)
class ProcessMatrix:
    """A validated-by-construction process object with its metadata."""

    n: int
    layout: WireLayout
    operator: DiagOperator
    normalization: Fraction

    @property
    def input_wires(self) -> tuple[str, ...]:
        return tuple(f"I{k}" for k in range(self.n))

    @property
    def output_wires(self) -> tuple[str, ...]:
        return tuple(f"O{k}" for k in range(self.n))


def _odd_term_fields(n: int, gamma: int) -> dict[str, int]:
    """Wire placement of one odd-n group mask.

    Position k of the mask lands on input wire ``I_k`` and on the output
    wire of the preceding party, ``O_{k-1 mod n}``.
    """
    fields = {}
    for k in range(n):
        fields[f"I{k}"] = _bit(gamma, n, k)
        fields[f"O{k}"] = _bit(gamma, n, (k + 1) % n)
    return fields


def _even_term_fields(n: int, element: int) -> dict[str, int]:
    """Wire placement of one even-n group element ``(beta << 2) | prime``."""
    beta, prime = element >> 2, element & 0b11
    width = n - 1
    fields = {}
    for k in range(n - 1):
        fields[f"I{k}"] = _bit(beta, width, k)
    fields[f"I{n - 1}"] = prime
    for j in range(n - 2):
        fields[f"O{j}"] = _bit(beta, width, j + 1)
    fields[f"O{n - 2}"] = prime
    fields[f"O{n - 1}"] = _bit(beta, width, 0)
    return fields


@lru_cache(maxsize=None)
def build_w(n: int) -> ProcessMatrix:
    """The n-party circular process matrix, for any n >= 3.

    The result is the normalized sum of the generator group, each element
    placed once on the input side and once, cyclically shifted, on the
    output side. For even n the doubled block sits on the wide wires
    ``O_{n-2}`` and ``I_{n-1}`` and is not shifted.
    """
    if n == 2:
        raise UnsupportedPartyCount(
            "two parties are unsupported: the doubled-register channel cannot "
            "signal on its own, and winning requires mutual signaling"
        )
    if n < 2:
        raise ValueError(f"party count must be >= 2, got {n}")
    layout = game_layout(n)
    group = generator_group(n)
    place = _odd_term_fields if n % 2 else _even_term_fields
    c = Fraction(1, 1 << (n if n % 2 else n + 1))
    terms = {mask_from_fields(layout, place(n, g)): c for g in group}
    op = DiagOperator(layout, terms)
    return ProcessMatrix(n=n, layout=layout, operator=op, normalization=c)


def naive_even_w(n: int) -> DiagOperator:
    """The invalid direct analogue of the odd construction at even n.

    Uses all even-parity masks on n single-bit positions; the resulting
    sum contains the all-sigma_z element, whose term leaves no party
    receiving without also sending -- exactly the closed signaling cycle
    that creates a logical paradox. Returned for negative testing only.
    """
    if n % 2 or n < 4:
        raise ValueError(f"naive_even_w needs an even n >= 4, got {n}")
    wires = [Wire(k, "I") for k in range(n)] + [Wire(k, "O") for k in range(n)]
    layout = WireLayout(wires)
    c = Fraction(1, 1 << n)
    terms = {}
    for gamma in range(1 << n):
        if gamma.bit_count() % 2:
            continue
        terms[mask_from_fields(layout, _odd_term_fields(n, gamma))] = c
    return DiagOperator(layout, terms)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BilinearCheck:
    checked: int
    failed: int


@dataclass(frozen=True)
class ValidationReport:
    """All logical-consistency checks of a candidate process object.

    Every check is reported instead of failing fast, so negative tests can
    assert which specific condition breaks.
    """

    nonneg: bool
    channel_norm: bool
    bilinear: BilinearCheck
    term_structure: bool
    signaling: tuple[tuple[bool, ...], ...]

    @property
    def passed(self) -> bool:
        return (
            self.nonneg
            and self.channel_norm
            and self.bilinear.failed == 0
            and self.term_structure
        )

    def failures(self) -> list[str]:
        out = []
        if not self.nonneg:
            out.append("nonneg")
        if not self.channel_norm:
            out.append("channel_norm")
        if self.bilinear.failed:
            out.append("bilinear_norm")
        if not self.term_structure:
            out.append("term_structure")
        return out

    def to_json(self) -> dict:
        return {
            "nonneg": self.nonneg,
            "channel_norm": self.channel_norm,
            "bilinear_norm": {
                "checked": self.bilinear.checked,
                "failed": self.bilinear.failed,
            },
            "term_structure": self.term_structure,
            "signaling": [list(row) for row in self.signaling],
        }


def _party_partition(layout: WireLayout) -> list[int]:
    """Party indices of an I/O-partitioned layout, or raise."""
    seen: dict[int, set[str]] = {}
    for w in layout.wires:
        if w.kind not in ("I", "O") or not isinstance(w.party, int):
            raise LayoutError(f"wire {w.name} is not an I/O party wire")
        seen.setdefault(w.party, set()).add(w.kind)
    parties = sorted(seen)
    if parties != list(range(len(parties))):
        raise LayoutError(f"party indices must be 0..n-1, got {parties}")
    for p, kinds in seen.items():
        if kinds != {"I", "O"}:
            raise LayoutError(f"party {p} lacks an I or O wire")
    return parties


def _det_channel_coeffs(table: Sequence[int], wo: int, wi: int) -> dict[int, int]:
    """Scaled parity coefficients of a deterministic channel ``o = f(i)``.

    Keys pack the output-wire mask above the input-wire mask; values are
    numerators at the fixed scale ``2 ** (wo + wi)``.
    """
    coeffs = {}
    for mo in range(1 << wo):
        for mi in range(1 << wi):
            s = 0
            for v in range(1 << wi):
                sign = ((mo & table[v]).bit_count() + (mi & v).bit_count()) & 1
                s += -1 if sign else 1
            if s:
                coeffs[(mo << wi) | mi] = s
    return coeffs


def validate_process(
    process: ProcessMatrix | DiagOperator,
    exhaustive_limit: int = 5,
    sample_count: int = 1000,
    seed: int = 0,
) -> ValidationReport:
    """Run all logical-consistency checks on a process object.

    * ``nonneg``: every dense entry is >= 0;
    * ``channel_norm``: tracing out all inputs leaves the identity on the
      outputs (each conditional distribution is normalized);
    * ``bilinear_norm``: for tuples of deterministic local channels
      ``f_i: I_i -> O_i``, the total outcome probability is 1; exhaustive
      up to ``exhaustive_limit`` parties, seeded sampling beyond;
    * ``term_structure``: every non-identity parity term leaves some party
      receiving without sending (sigma_z on its input, identity on its
      output), which rules out closed signaling cycles;
    * ``signaling``: matrix over ordered pairs (sender j, recipient i) of
      whether some term links ``O_j`` to ``I_i``.
    """
    op = process.operator if isinstance(process, ProcessMatrix) else process
    layout = op.layout
    parties = _party_partition(layout)
    n = len(parties)
    i_names = [f"I{p}" for p in parties]
    o_names = [f"O{p}" for p in parties]

    nonneg = is_nonnegative(op)

    traced = partial_trace(op, i_names)
    channel_norm = traced == identity(layout.restrict(o_names))

    i_fields = {p: layout.field_mask(f"I{p}") for p in parties}
    o_fields = {p: layout.field_mask(f"O{p}") for p in parties}
    term_structure = all(
        any(mask & o_fields[p] == 0 and mask & i_fields[p] for p in parties)
        for mask in op.terms
        if mask
    )
    signaling = tuple(
        tuple(
            any(mask & o_fields[j] and mask & i_fields[i] for mask in op.terms)
            for i in parties
        )
        for j in parties
    )

    bilinear = _bilinear_check(op, parties, exhaustive_limit, sample_count, seed)

    return ValidationReport(
        nonneg=nonneg,
        channel_norm=channel_norm,
        bilinear=bilinear,
        term_structure=term_structure,
        signaling=signaling,
    )


def _bilinear_check(op, parties, exhaustive_limit, sample_count, seed):
    layout = op.layout
    n = len(parties)
    widths = [
        (layout.field(f"O{p}")[1], layout.field(f"I{p}")[1]) for p in parties
    ]
    scale_w = max(
        c.denominator.bit_length() - 1 for c in op.terms.values()
    )
    w_table = [
        (
            (c * (1 << scale_w)).numerator,
            tuple(
                mask_fields(layout, mask, (f"O{p}", f"I{p}")) for p in parties
            ),
        )
        for mask, c in op.terms.items()
    ]
    scale_total = scale_w + sum(wo + wi for wo, wi in widths)
    expected = 1 << (scale_total - layout.width)

    def total_is_one(coeff_dicts) -> bool:
        acc = 0
        for num, keys in w_table:
            prod = num
            for d, key in zip(coeff_dicts, keys):
                v = d.get(key)
                if not v:
                    prod = 0
                    break
                prod *= v
            acc += prod
        return acc == expected

    checked = 0
    failed = 0
    if n <= exhaustive_limit:
        per_party = [
            [
                _det_channel_coeffs(table, wo, wi)
                for table in itertools.product(range(1 << wo), repeat=1 << wi)
            ]
            for wo, wi in widths
        ]
        for combo in itertools.product(*per_party):
            checked += 1
            if not total_is_one(combo):
                failed += 1
    else:
        rng = random.Random(seed)
        for _ in range(sample_count):
            combo = []
            for wo, wi in widths:
                table = tuple(rng.randrange(1 << wo) for _ in range(1 << wi))
                combo.append(_det_channel_coeffs(table, wo, wi))
            checked += 1
            if not total_is_one(combo):
                failed += 1
    return BilinearCheck(checked=checked, failed=failed)


def conditional_distribution(
    process: ProcessMatrix,
    outputs: Sequence[int] | Mapping[str, int],
) -> dict[tuple[int, ...], Fraction]:
    """Exact input distribution produced by a complete output assignment.

    ``outputs`` gives one value per output wire (in party order, or as a
    name-keyed mapping); the result maps input-wire value tuples to their
    probabilities, omitting zero entries.
    """
    n = process.n
    o_layout = process.layout.restrict(process.output_wires)
    if isinstance(outputs, Mapping):
        assignment = dict(outputs)
    else:
        if len(outputs) != n:
            raise ValueError(f"need {n} output values, got {len(outputs)}")
        assignment = {f"O{k}": v for k, v in enumerate(outputs)}
    state = point_mass(o_layout, o_layout.pack(assignment))
    result = channel_apply(process.operator, state)
    dense = to_dense(result)
    out_layout = result.layout
    return {
        out_layout.unpack(idx): value
        for idx, value in enumerate(dense)
        if value
    }


# ---------------------------------------------------------------------------
# loop decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoopChannel:
    """One deterministic circular channel: party k's output is carried to
    party k+1's input with the edge's flip pattern XORed on.

    ``edge_flips[k]`` is the local flip mask applied on the edge from
    party k to party ``(k+1) % n`` (all bits of the sending wire are
    carried).
    """

    n: int
    edge_flips: tuple[int, ...]
    weight: Fraction

    def flip_into(self, receiver: int) -> int:
        return self.edge_flips[(receiver - 1) % self.n]

    def apply(self, outputs: Sequence[int]) -> tuple[int, ...]:
        """Input values produced from a complete tuple of output values."""
        return tuple(
            outputs[(j - 1) % self.n] ^ self.flip_into(j) for j in range(self.n)
        )


def _gf2_kernel(vectors: Iterable[int], width: int) -> list[int]:
    """All d with even-parity overlap against every vector, as bit masks."""
    rows: dict[int, int] = {}
    for v in vectors:
        while v:
            p = v.bit_length() - 1
            if p not in rows:
                rows[p] = v
                break
            v ^= rows[p]
    for p in sorted(rows, reverse=True):
        for q in rows:
            if q != p and (rows[q] >> p) & 1:
                rows[q] ^= rows[p]
    free = [b for b in range(width) if b not in rows]
    kernel = [0]
    for f in free:
        d = 1 << f
        for p, r in rows.items():
            if (r >> f) & 1:
                d |= 1 << p
        kernel += [k ^ d for k in kernel]
    return sorted(kernel)


@lru_cache(maxsize=None)
def loop_decomposition(n: int) -> tuple[LoopChannel, ...]:
    """The circular-channel mixture whose operator equals ``build_w(n)``.

    The wiring is always the circular identity (party k's output feeds
    party k+1's input, bit for bit); the admissible flip patterns are
    derived, not assumed: they are exactly the GF(2) vectors orthogonal to
    every input-side mask of the generator group. Odd n yields two loops
    (identity and all-edges-flip), even n yields four.
    """
    w = build_w(n)
    layout = w.layout
    i_names = list(w.input_wires)
    i_width = sum(layout.field(name)[1] for name in i_names)
    i_masks = {mask_fields(layout, mask, i_names) for mask in w.operator.terms}
    flips = _gf2_kernel(i_masks, i_width)
    weight = Fraction(1, len(flips))
    sub = WireLayout([Wire(k, "I", layout.field(f"I{k}")[1]) for k in range(n)])
    loops = []
    for d in flips:
        per_edge = tuple(sub.extract(d, f"I{(k + 1) % n}") for k in range(n))
        loops.append(LoopChannel(n=n, edge_flips=per_edge, weight=weight))
    return tuple(loops)


def loop_operator(loops: Sequence[LoopChannel]) -> DiagOperator:
    """Dense operator induced by a loop mixture (support enumeration).

    This is an independent construction path from the group sum: it never
    touches parity terms, only the deterministic channels' graphs.
    """
    if not loops:
        raise ValueError("need at least one loop")
    n = loops[0].n
    layout = game_layout(n)
    o_names = [f"O{k}" for k in range(n)]
    i_names = [f"I{k}" for k in range(n)]
    o_layout = layout.restrict(o_names)
    i_layout = layout.restrict(i_names)
    o_width = o_layout.width
    dense = [Fraction(0)] * (1 << layout.width)
    for o_idx in range(1 << o_width):
        o_vals = o_layout.unpack(o_idx)
        for loop in loops:
            i_vals = loop.apply(o_vals)
            i_idx = i_layout.pack({f"I{k}": v for k, v in enumerate(i_vals)})
            dense[(i_idx << o_width) | o_idx] += loop.weight
    return from_dense(layout, dense)
