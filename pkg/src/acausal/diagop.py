"""Exact algebra of diagonal operators on labeled bit registers.

Every object in this package is diagonal in the computational basis, so an
operator is fully described by its diagonal vector. Two interchangeable
representations are used:

* parity (monomial) form: a sparse map ``mask -> coefficient``, where the
  mask stands for the +/-1 diagonal whose entry at basis string ``b`` is
  ``(-1) ** popcount(b & mask)`` -- a tensor product of identity and
  sigma_z factors, with sigma_z on exactly the masked bits;
* dense form: the full vector of ``2 ** width`` diagonal entries.

The two are related by the parity (Walsh) transform and interconvert
losslessly. All coefficients are exact dyadic rationals and every equality
test is exact; no floating point enters the core.

Bit ordering convention: the first wire declared in a layout occupies the
most significant bits of the global basis index, and within a multi-bit
wire the first bit is the most significant. Conditional distributions
``P(x|y)`` over a layout ``(X, Y)`` therefore sit at index ``x * |Y| + y``.
All case-table fixtures depend on this ordering; it is fixed.

Values are immutable after construction and all operations are pure
functions, so everything here is safe for concurrent read-only use.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "LayoutError",
    "Wire",
    "WireLayout",
    "ZMonomial",
    "DiagOperator",
    "GroupPsdReport",
    "identity",
    "monomial",
    "mask_from_fields",
    "mask_fields",
    "point_mass",
    "tensor",
    "multiply",
    "trace",
    "partial_trace",
    "reorder",
    "channel_apply",
    "to_dense",
    "from_dense",
    "is_nonnegative",
    "abelian_psd_check",
    "operator_to_json",
    "operator_from_json",
    "dense_csv_lines",
    "parse_dense_csv",
]


class LayoutError(ValueError):
    """Operands disagree about wires, or a wire is unknown/duplicated."""


@dataclass(frozen=True)
class Wire:
    """One named bit register owned by a party.

    ``party`` is a party index, or the string ``"env"`` for free-standing
    registers; ``kind`` is the register label ("I", "O", or any label for
    env wires). The wire name is ``kind + str(party)`` for party-owned
    wires and just ``kind`` for env wires.
    """

    party: int | str
    kind: str
    width: int = 1

    def __post_init__(self):
        if self.width < 1:
            raise LayoutError(f"wire width must be >= 1, got {self.width}")

    @property
    def name(self) -> str:
        if isinstance(self.party, int):
            return f"{self.kind}{self.party}"
        return self.kind


class WireLayout:
    """Ordered wires fixing the global bit order of an operator.

    The first wire occupies the most significant bits; a zero-wire layout
    is allowed and describes scalars.
    """

    __slots__ = ("wires", "width", "_pos")

    def __init__(self, wires: Iterable[Wire]):
        self.wires = tuple(wires)
        names = [w.name for w in self.wires]
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate wire names in layout: {names}")
        self.width = sum(w.width for w in self.wires)
        pos = {}
        hi = self.width
        for w in self.wires:
            pos[w.name] = (hi - w.width, w.width)
            hi -= w.width
        self._pos = pos

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(w.name for w in self.wires)

    def field(self, name: str) -> tuple[int, int]:
        """Return ``(shift, width)`` of a wire within the global index."""
        try:
            return self._pos[name]
        except KeyError:
            raise LayoutError(f"unknown wire {name!r}") from None

    def field_mask(self, name: str) -> int:
        shift, w = self.field(name)
        return ((1 << w) - 1) << shift

    def extract(self, index: int, name: str) -> int:
        """Value of one wire inside a global basis index."""
        shift, w = self.field(name)
        return (index >> shift) & ((1 << w) - 1)

    def pack(self, values: Mapping[str, int]) -> int:
        """Global basis index from a complete per-wire assignment."""
        if set(values) != set(self.names):
            raise LayoutError("assignment must cover exactly the layout wires")
        index = 0
        for w in self.wires:
            v = values[w.name]
            if not 0 <= v < (1 << w.width):
                raise ValueError(f"value {v} out of range for wire {w.name}")
            index = (index << w.width) | v
        return index

    def unpack(self, index: int) -> tuple[int, ...]:
        """Per-wire values of a global basis index, in layout order."""
        return tuple(self.extract(index, w.name) for w in self.wires)

    def concat(self, other: "WireLayout") -> "WireLayout":
        clash = set(self.names) & set(other.names)
        if clash:
            raise LayoutError(f"wire-name collision: {sorted(clash)}")
        return WireLayout(self.wires + other.wires)

    def restrict(self, names: Iterable[str]) -> "WireLayout":
        keep = set(names)
        unknown = keep - set(self.names)
        if unknown:
            raise LayoutError(f"unknown wires {sorted(unknown)}")
        return WireLayout(w for w in self.wires if w.name in keep)

    def __eq__(self, other):
        if not isinstance(other, WireLayout):
            return NotImplemented
        return self.wires == other.wires

    def __hash__(self):
        return hash(self.wires)

    def __repr__(self):
        return f"WireLayout({', '.join(f'{w.name}:{w.width}' for w in self.wires)})"


def mask_from_fields(layout: WireLayout, fields: Mapping[str, int]) -> int:
    """Assemble a global mask from per-wire local masks.

    Local masks use the in-field bit order (the wire's first bit is the
    most significant bit of its field).
    """
    mask = 0
    for name, local in fields.items():
        shift, w = layout.field(name)
        if not 0 <= local < (1 << w):
            raise ValueError(f"local mask {local} out of range for wire {name}")
        mask |= local << shift
    return mask


def mask_fields(layout: WireLayout, mask: int, wires: Sequence[str]) -> int:
    """Extract and repack the mask bits of the listed wires, first wire
    most significant."""
    packed = 0
    for name in wires:
        shift, w = layout.field(name)
        packed = (packed << w) | ((mask >> shift) & ((1 << w) - 1))
    return packed


@dataclass(frozen=True)
class ZMonomial:
    """A +/-1 diagonal: sigma_z on the masked bits, identity elsewhere."""

    layout: WireLayout
    mask: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.layout.width):
            raise LayoutError(f"mask {self.mask:#x} outside layout width")

    def entry(self, index: int) -> int:
        return -1 if (index & self.mask).bit_count() & 1 else 1

    def trace(self) -> int:
        return (1 << self.layout.width) if self.mask == 0 else 0

    def to_operator(self, coeff: Fraction | int = 1) -> "DiagOperator":
        return DiagOperator(self.layout, {self.mask: Fraction(coeff)})


def _log2den(c: Fraction) -> int:
    d = c.denominator
    if d & (d - 1):
        raise ValueError(f"coefficient {c} is not dyadic (denominator {d})")
    return d.bit_length() - 1


class DiagOperator:
    """Exact diagonal operator in sparse parity form over a layout.

    ``terms`` maps masks to nonzero dyadic coefficients; the diagonal
    entry at basis string ``b`` is ``sum(c * (-1)**popcount(b & m))``.
    Instances are immutable by convention.
    """

    __slots__ = ("layout", "terms")

    def __init__(self, layout: WireLayout, terms: Mapping[int, Fraction | int]):
        top = 1 << layout.width
        clean: dict[int, Fraction] = {}
        for mask, coeff in terms.items():
            c = Fraction(coeff)
            if not c:
                continue
            if not 0 <= mask < top:
                raise LayoutError(f"mask {mask:#x} outside layout width {layout.width}")
            _log2den(c)
            clean[mask] = c
        self.layout = layout
        self.terms = clean

    def entry(self, index: int) -> Fraction:
        """Diagonal entry at one basis string (sum over parity terms)."""
        total = Fraction(0)
        for mask, c in self.terms.items():
            total += -c if (index & mask).bit_count() & 1 else c
        return total

    def __eq__(self, other):
        if not isinstance(other, DiagOperator):
            return NotImplemented
        return self.layout == other.layout and self.terms == other.terms

    def __add__(self, other):
        if not isinstance(other, DiagOperator):
            return NotImplemented
        if other.layout != self.layout:
            raise LayoutError("layout mismatch in addition")
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return DiagOperator(self.layout, out)

    def __sub__(self, other):
        return self + (other * -1)

    def __mul__(self, scalar):
        if isinstance(scalar, DiagOperator):
            return NotImplemented
        s = Fraction(scalar)
        return DiagOperator(self.layout, {m: c * s for m, c in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self):
        return f"DiagOperator({self.layout!r}, {len(self.terms)} terms)"


def identity(layout: WireLayout) -> DiagOperator:
    return DiagOperator(layout, {0: Fraction(1)})


def monomial(layout: WireLayout, fields: Mapping[str, int],
             coeff: Fraction | int = 1) -> DiagOperator:
    """Single parity term given per-wire local masks."""
    return DiagOperator(layout, {mask_from_fields(layout, fields): Fraction(coeff)})


def point_mass(layout: WireLayout, index: int) -> DiagOperator:
    """The distribution putting probability 1 on one basis string."""
    n = 1 << layout.width
    if not 0 <= index < n:
        raise ValueError(f"index {index} out of range for width {layout.width}")
    vec = [Fraction(0)] * n
    vec[index] = Fraction(1)
    return from_dense(layout, vec)


def tensor(a: DiagOperator, b: DiagOperator) -> DiagOperator:
    """Tensor product; layouts concatenate, masks concatenate, coefficients
    multiply."""
    layout = a.layout.concat(b.layout)
    shift = b.layout.width
    terms = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            terms[(ma << shift) | mb] = ca * cb
    return DiagOperator(layout, terms)


def multiply(a: DiagOperator, b: DiagOperator) -> DiagOperator:
    """Entrywise (matrix) product of two operators on the same layout.

    In parity form the product of two monomials is the monomial with the
    XOR of their masks.
    """
    if a.layout != b.layout:
        raise LayoutError("layout mismatch in multiply")
    terms: dict[int, Fraction] = {}
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            key = ma ^ mb
            c = terms.get(key)
            terms[key] = ca * cb if c is None else c + ca * cb
    return DiagOperator(a.layout, terms)


def trace(a: DiagOperator) -> Fraction:
    """Sum of the diagonal; only the empty mask contributes."""
    return (1 << a.layout.width) * a.terms.get(0, Fraction(0))


def partial_trace(a: DiagOperator, wires: Iterable[str]) -> DiagOperator:
    """Sum the diagonal over the named wires.

    Terms whose mask touches a traced wire vanish; survivors are scaled by
    ``2 ** traced_width`` and live on the restricted layout.
    """
    traced = list(wires)
    traced_mask = 0
    traced_width = 0
    for name in traced:
        traced_mask |= a.layout.field_mask(name)
        traced_width += a.layout.field(name)[1]
    kept = [w.name for w in a.layout.wires if w.name not in set(traced)]
    out_layout = a.layout.restrict(kept)
    scale = Fraction(1 << traced_width)
    terms = {}
    for mask, c in a.terms.items():
        if mask & traced_mask:
            continue
        terms[mask_fields(a.layout, mask, kept)] = c * scale
    return DiagOperator(out_layout, terms)


def reorder(a: DiagOperator, layout: WireLayout) -> DiagOperator:
    """The same operator expressed on a permutation of its wires."""
    if set(layout.names) != set(a.layout.names):
        raise LayoutError("reorder target must carry exactly the same wires")
    for w in layout.wires:
        if a.layout.field(w.name)[1] != w.width:
            raise LayoutError(f"wire {w.name} changes width in reorder")
    names = layout.names
    terms = {mask_fields(a.layout, mask, names): c for mask, c in a.terms.items()}
    return DiagOperator(layout, terms)


def channel_apply(channel: DiagOperator, state: DiagOperator) -> DiagOperator:
    """Feed a state into the conditioning wires of a channel.

    ``channel`` is a conditional distribution whose layout contains all of
    the state's wires; the result is ``Tr_cond(channel * (1_out (x) state))``
    over the remaining (output) wires.
    """
    cond = set(state.layout.names)
    missing = cond - set(channel.layout.names)
    if missing:
        raise LayoutError(f"channel lacks state wires {sorted(missing)}")
    out_names = [w.name for w in channel.layout.wires if w.name not in cond]
    extended = tensor(identity(channel.layout.restrict(out_names)), state)
    extended = reorder(extended, channel.layout)
    return partial_trace(multiply(channel, extended), cond)


def _wht(vec: list[int]) -> None:
    """In-place unnormalized Walsh-Hadamard transform (self-inverse up to N)."""
    n = len(vec)
    h = 1
    while h < n:
        step = h << 1
        for i in range(0, n, step):
            for j in range(i, i + h):
                x = vec[j]
                y = vec[j + h]
                vec[j] = x + y
                vec[j + h] = x - y
        h = step


def to_dense(a: DiagOperator) -> list[Fraction]:
    """Full diagonal vector, indexed by the global basis string."""
    n = 1 << a.layout.width
    if not a.terms:
        return [Fraction(0)] * n
    scale = max(_log2den(c) for c in a.terms.values())
    vec = [0] * n
    for mask, c in a.terms.items():
        vec[mask] = c.numerator << (scale - _log2den(c))
    _wht(vec)
    den = 1 << scale
    return [Fraction(v, den) for v in vec]


def from_dense(layout: WireLayout, values: Sequence[Fraction | int]) -> DiagOperator:
    """Parity form of a dense diagonal; exact inverse of :func:`to_dense`."""
    n = 1 << layout.width
    if len(values) != n:
        raise ValueError(f"dense vector must have length {n}, got {len(values)}")
    fracs = [Fraction(v) for v in values]
    scale = max((_log2den(c) for c in fracs if c), default=0)
    vec = [c.numerator << (scale - _log2den(c)) if c else 0 for c in fracs]
    _wht(vec)
    den = 1 << (scale + layout.width)
    return DiagOperator(layout, {m: Fraction(v, den) for m, v in enumerate(vec) if v})


def is_nonnegative(a: DiagOperator) -> bool:
    """True iff every dense entry is >= 0 (positive semi-definiteness for
    diagonal operators)."""
    if not a.terms:
        return True
    scale = max(_log2den(c) for c in a.terms.values())
    vec = [0] * (1 << a.layout.width)
    for mask, c in a.terms.items():
        vec[mask] = c.numerator << (scale - _log2den(c))
    _wht(vec)
    return all(v >= 0 for v in vec)


@dataclass(frozen=True)
class GroupPsdReport:
    is_group: bool
    sum_nonneg: bool


def abelian_psd_check(monomials: Iterable[ZMonomial]) -> GroupPsdReport:
    """Group and positivity check for a set of parity monomials.

    ``is_group`` checks that the masks contain the identity and are closed
    under multiplication (mask XOR); ``sum_nonneg`` checks positivity of
    the unweighted sum. A group's sum is always positive semi-definite --
    every negative eigenvalue pairs off against a positive one under
    multiplication by a witness element -- so ``is_group`` implies
    ``sum_nonneg``.
    """
    mons = list(monomials)
    if not mons:
        raise ValueError("empty monomial set (a group must contain the identity)")
    layout = mons[0].layout
    for m in mons:
        if m.layout != layout:
            raise LayoutError("monomials must share a layout")
    masks = {m.mask for m in mons}
    is_group = 0 in masks and all(x ^ y in masks for x in masks for y in masks)
    total = DiagOperator(layout, {m: Fraction(1) for m in masks})
    return GroupPsdReport(is_group=is_group, sum_nonneg=is_nonnegative(total))


# ---------------------------------------------------------------------------
# serialization: JSON operator schema and dense CSV
# ---------------------------------------------------------------------------

def _wire_to_json(w: Wire) -> dict:
    return {"party": w.party, "kind": w.kind, "width": w.width}


def _wire_from_json(obj: Mapping) -> Wire:
    return Wire(party=obj["party"], kind=obj["kind"], width=obj["width"])


def operator_to_json(a: DiagOperator) -> dict:
    """JSON form: layout plus sorted terms with dyadic coefficients."""
    return {
        "layout": [_wire_to_json(w) for w in a.layout.wires],
        "terms": [
            {"mask": f"{mask:#x}", "num": c.numerator, "log2den": _log2den(c)}
            for mask, c in sorted(a.terms.items())
        ],
    }


def operator_from_json(obj: Mapping) -> DiagOperator:
    layout = WireLayout(_wire_from_json(w) for w in obj["layout"])
    terms = {
        int(t["mask"], 16): Fraction(t["num"], 1 << t["log2den"])
        for t in obj["terms"]
    }
    return DiagOperator(layout, terms)


def dense_csv_lines(a: DiagOperator) -> Iterable[str]:
    """Dense CSV rows ``index,numerator,log2_denominator`` with a header."""
    yield "index,numerator,log2_denominator"
    for i, v in enumerate(to_dense(a)):
        yield f"{i},{v.numerator},{_log2den(v)}"


def parse_dense_csv(lines: Iterable[str]) -> list[Fraction]:
    values = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("index"):
            continue
        idx, num, log2den = line.split(",")
        if int(idx) != len(values):
            raise ValueError("dense CSV rows must be consecutive from 0")
        values.append(Fraction(int(num), 1 << int(log2den)))
    return values
