import random
from fractions import Fraction

import pytest

from acausal.diagop import (
    DiagOperator,
    LayoutError,
    Wire,
    WireLayout,
    ZMonomial,
    abelian_psd_check,
    channel_apply,
    dense_csv_lines,
    from_dense,
    identity,
    is_nonnegative,
    mask_from_fields,
    monomial,
    multiply,
    operator_from_json,
    operator_to_json,
    parse_dense_csv,
    partial_trace,
    point_mass,
    reorder,
    tensor,
    to_dense,
    trace,
)
from conftest import (
    dense_oracle,
    random_dyadic_distribution,
    random_operator,
)

F = Fraction


def bit_layout(*names):
    return WireLayout([Wire("env", name) for name in names])


def test_layout_positions_and_packing():
    layout = WireLayout([Wire(0, "I"), Wire(1, "I", 2), Wire(0, "O")])
    assert layout.width == 4
    assert layout.field("I0") == (3, 1)
    assert layout.field("I1") == (1, 2)
    assert layout.field("O0") == (0, 1)
    idx = layout.pack({"I0": 1, "I1": 0b10, "O0": 0})
    assert idx == 0b1100
    assert layout.unpack(idx) == (1, 2, 0)
    with pytest.raises(LayoutError):
        WireLayout([Wire(0, "I"), Wire(0, "I")])
    with pytest.raises(LayoutError):
        Wire(0, "I", 0)
    with pytest.raises(LayoutError):
        layout.field("I9")


def test_tensor_identities():
    a = identity(bit_layout("X"))
    b = identity(bit_layout("Y"))
    both = tensor(a, b)
    assert trace(both) == 4
    assert to_dense(both) == [F(1)] * 4


def test_tensor_sign_rule():
    zz = tensor(
        monomial(bit_layout("X"), {"X": 1}),
        monomial(bit_layout("Y"), {"Y": 1}),
    )
    assert zz.terms == {0b11: F(1)}
    assert to_dense(zz) == [F(1), F(-1), F(-1), F(1)]


def test_tensor_name_collision():
    with pytest.raises(LayoutError):
        tensor(identity(bit_layout("X")), identity(bit_layout("X")))


def test_multiply_involution():
    rng = random.Random(1)
    for _ in range(40):
        layout = random_operator(rng, max_width=8).layout
        mono = ZMonomial(layout, rng.randrange(1 << layout.width)).to_operator()
        assert multiply(mono, mono) == identity(layout)


def test_multiply_xor_masks():
    layout = bit_layout("A", "B", "C")
    g1 = DiagOperator(layout, {0b011: 1})
    g2 = DiagOperator(layout, {0b101: 1})
    assert multiply(g1, g2).terms == {0b110: F(1)}


def test_multiply_identity_is_neutral():
    rng = random.Random(2)
    for _ in range(20):
        a = random_operator(rng, max_width=8)
        assert multiply(a, identity(a.layout)) == a


def test_multiply_layout_mismatch():
    with pytest.raises(LayoutError):
        multiply(identity(bit_layout("X")), identity(bit_layout("Y")))


def test_trace_values():
    six = WireLayout([Wire("env", f"B{k}") for k in range(6)])
    assert trace(identity(six)) == 64
    z_first = monomial(bit_layout("X", "Y"), {"X": 1})
    assert trace(z_first) == 0


def test_trace_multiplicative_over_tensor():
    rng = random.Random(3)
    for _ in range(30):
        a = random_operator(rng, max_width=5)
        b = random_operator(rng, max_width=5)
        names = {w.name for w in a.layout.wires}
        if names & {w.name for w in b.layout.wires}:
            b = DiagOperator(
                WireLayout([Wire(100 + i, w.kind, w.width)
                            for i, w in enumerate(b.layout.wires)]),
                b.terms,
            )
        assert trace(tensor(a, b)) == trace(a) * trace(b)


def test_partial_trace_of_conditional_is_identity():
    # random valid conditional distribution P(X|Y), trace out X
    rng = random.Random(4)
    layout = WireLayout([Wire("env", "X", 2), Wire("env", "Y", 2)])
    for _ in range(10):
        dense = [F(0)] * 16
        for y in range(4):
            for x, p in enumerate(random_dyadic_distribution(rng, 4)):
                dense[(x << 2) | y] = p
        cond = from_dense(layout, dense)
        assert partial_trace(cond, ["X"]) == identity(layout.restrict(["Y"]))


def test_partial_trace_all_wires_equals_trace():
    rng = random.Random(5)
    for _ in range(20):
        a = random_operator(rng, max_width=8)
        scalar = partial_trace(a, [w.name for w in a.layout.wires])
        assert scalar.layout.width == 0
        assert scalar.terms.get(0, F(0)) == trace(a)


def test_partial_trace_unknown_wire():
    with pytest.raises(LayoutError):
        partial_trace(identity(bit_layout("X")), ["nope"])


def test_partial_trace_matches_dense_oracle():
    rng = random.Random(6)
    for _ in range(15):
        a = random_operator(rng, max_width=8)
        if len(a.layout.wires) < 2:
            continue
        traced_wire = a.layout.wires[rng.randrange(len(a.layout.wires))].name
        result = partial_trace(a, [traced_wire])
        dense = dense_oracle(a)
        shift, w = a.layout.field(traced_wire)
        expected = []
        for idx in range(1 << result.layout.width):
            # reinsert every traced value at the removed field
            lo = idx & ((1 << shift) - 1)
            hi = idx >> shift
            total = F(0)
            for v in range(1 << w):
                total += dense[(hi << (shift + w)) | (v << shift) | lo]
            expected.append(total)
        assert to_dense(result) == expected


def test_channel_apply_point_masses():
    layout = WireLayout([Wire("env", "X"), Wire("env", "Y")])
    state0 = point_mass(WireLayout([Wire("env", "Y")]), 0)
    ident = from_dense(layout, [1, 0, 0, 1])  # P(x|y) = [x == y]
    flip = from_dense(layout, [0, 1, 1, 0])  # P(x|y) = [x == y ^ 1]
    out = channel_apply(ident, state0)
    assert to_dense(out) == [F(1), F(0)]
    out = channel_apply(flip, state0)
    assert to_dense(out) == [F(0), F(1)]


def test_channel_apply_matches_composition_oracle():
    rng = random.Random(7)
    for _ in range(20):
        wx, wy = rng.randint(1, 2), rng.randint(1, 2)
        layout = WireLayout([Wire("env", "X", wx), Wire("env", "Y", wy)])
        dense = [F(0)] * (1 << (wx + wy))
        cols = []
        for y in range(1 << wy):
            col = random_dyadic_distribution(rng, 1 << wx)
            cols.append(col)
            for x, p in enumerate(col):
                dense[(x << wy) | y] = p
        channel = from_dense(layout, dense)
        state_vec = random_dyadic_distribution(rng, 1 << wy)
        state = from_dense(WireLayout([Wire("env", "Y", wy)]), state_vec)
        out = channel_apply(channel, state)
        expected = [
            sum((cols[y][x] * state_vec[y] for y in range(1 << wy)), F(0))
            for x in range(1 << wx)
        ]
        assert to_dense(out) == expected
        assert trace(out) == 1
        assert is_nonnegative(out)


def test_channel_apply_missing_wires():
    with pytest.raises(LayoutError):
        channel_apply(
            identity(bit_layout("X")), point_mass(bit_layout("Y"), 0)
        )


def test_dense_roundtrip_500_random_operators():
    rng = random.Random(8)
    for _ in range(500):
        a = random_operator(rng, max_width=12)
        assert from_dense(a.layout, to_dense(a)) == a


def test_dense_matches_sign_rule_oracle():
    rng = random.Random(9)
    for _ in range(40):
        a = random_operator(rng, max_width=10)
        assert to_dense(a) == dense_oracle(a)


def test_monomial_entry_semantics():
    rng = random.Random(10)
    for _ in range(30):
        width = rng.randint(1, 10)
        layout = WireLayout([Wire("env", "R", width)])
        mask = rng.randrange(1 << width)
        mono = ZMonomial(layout, mask)
        dense = to_dense(mono.to_operator())
        for b in range(1 << width):
            expected = -1 if (b & mask).bit_count() & 1 else 1
            assert mono.entry(b) == expected
            assert dense[b] == expected
    assert ZMonomial(layout, 0).trace() == 1 << width
    if mask:
        assert ZMonomial(layout, mask).trace() == 0


def test_from_dense_fastest_bit_pattern():
    # sigma_z on the fastest-varying (last-declared) bit alternates entries
    layout = bit_layout("A", "B")
    op = from_dense(layout, [1, -1, 1, -1])
    assert op.terms == {mask_from_fields(layout, {"B": 1}): F(1)}


def test_zero_width_scalars():
    scalar = WireLayout([])
    op = DiagOperator(scalar, {0: F(3, 4)})
    assert to_dense(op) == [F(3, 4)]
    assert trace(op) == F(3, 4)
    assert from_dense(scalar, [F(3, 4)]) == op


def test_point_mass_entries():
    layout = bit_layout("A", "B")
    pm = point_mass(layout, 2)
    assert to_dense(pm) == [F(0), F(0), F(1), F(0)]
    assert trace(pm) == 1


def test_is_nonnegative():
    layout = bit_layout("X")
    assert is_nonnegative(identity(layout))
    assert not is_nonnegative(monomial(layout, {"X": 1}))


def test_non_dyadic_rejected():
    with pytest.raises(ValueError):
        DiagOperator(bit_layout("X"), {0: F(1, 3)})


def test_abelian_psd_trivial_groups():
    layout = bit_layout("A", "B")
    pair = [ZMonomial(layout, 0), ZMonomial(layout, 0b11)]
    report = abelian_psd_check(pair)
    assert report.is_group and report.sum_nonneg
    total = DiagOperator(layout, {0: 1, 0b11: 1})
    assert to_dense(total) == [F(2), F(0), F(0), F(2)]

    one = bit_layout("X")
    report = abelian_psd_check([ZMonomial(one, 0), ZMonomial(one, 1)])
    assert report.is_group and report.sum_nonneg

    report = abelian_psd_check([ZMonomial(one, 1)])
    assert not report.is_group

    with pytest.raises(ValueError):
        abelian_psd_check([])


def test_group_implies_nonneg_on_random_sets():
    rng = random.Random(11)
    layout = WireLayout([Wire("env", "R", 5)])
    for _ in range(60):
        masks = {0} | {rng.randrange(32) for _ in range(rng.randint(0, 4))}
        report = abelian_psd_check([ZMonomial(layout, m) for m in masks])
        if report.is_group:
            assert report.sum_nonneg


def test_reorder_permutes_wires():
    rng = random.Random(12)
    for _ in range(15):
        a = random_operator(rng, max_width=8)
        wires = list(a.layout.wires)
        rng.shuffle(wires)
        target = WireLayout(wires)
        b = reorder(a, target)
        dense_a = to_dense(a)
        dense_b = to_dense(b)
        for idx in range(1 << target.width):
            back = a.layout.pack(
                {w.name: target.extract(idx, w.name) for w in wires}
            )
            assert dense_b[idx] == dense_a[back]
        assert reorder(b, a.layout) == a


def test_json_roundtrip():
    rng = random.Random(13)
    for _ in range(25):
        a = random_operator(rng, max_width=10)
        assert operator_from_json(operator_to_json(a)) == a


def test_dense_csv_roundtrip():
    rng = random.Random(14)
    a = random_operator(rng, max_width=8)
    lines = list(dense_csv_lines(a))
    assert lines[0] == "index,numerator,log2_denominator"
    assert parse_dense_csv(lines) == to_dense(a)
