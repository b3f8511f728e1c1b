import pytest
from hypothesis import given, strategies as st

from tilesmith.construction import ExplicitNode, UnionNode, lift
from tilesmith.pointsets import ExplicitSet, full_set
from tilesmith.space import Block, Placement, SpaceSignature, parse_tile
from tilesmith.verify import (
    SplitMix64,
    check_partition,
    verify_exhaustive_construction,
    verify_sampled,
)

XX = parse_tile("XX")
S_TILE = parse_tile([[0, 0], [1, 0], [1, 1], [2, 1]])


def test_splitmix64_reference_sequence():
    # published test vectors for seed 0
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_splitmix64_seed_determinism():
    a = SplitMix64(99)
    b = SplitMix64(99)
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]


@given(st.integers(0, 2**64 - 1), st.integers(1, 1000))
def test_splitmix64_below_in_range(seed, n):
    r = SplitMix64(seed)
    v = r.below(n)
    assert 0 <= v < n


def torus_node():
    sig = SpaceSignature((4, 2), (Block(0, 2, S_TILE),))
    return ExplicitNode(sig, [Placement(0, (0, 0)), Placement(0, (2, 0))])


def domain(sig):
    pts = [()]
    for m in sig.axes:
        pts = [p + (v,) for p in pts for v in range(m)]
    return pts


def test_check_partition_accepts_tiling():
    c = torus_node()
    owner, violations = check_partition(c.sig, list(c.iter_placements()), domain(c.sig))
    assert not violations
    assert len(owner) == 8


def test_check_partition_flags_overlap():
    c = torus_node()
    pls = list(c.iter_placements())
    owner, violations = check_partition(c.sig, pls + [pls[0]], domain(c.sig))
    kinds = {v["kind"] for v in violations}
    assert "overlap" in kinds


def test_check_partition_flags_uncovered():
    c = torus_node()
    pls = list(c.iter_placements())[:1]
    owner, violations = check_partition(c.sig, pls, domain(c.sig))
    kinds = {v["kind"] for v in violations}
    assert kinds == {"uncovered"}
    assert len(violations) == 4


def test_check_partition_flags_outside():
    # free axis, no period: a copy past the window sticks out
    sig = SpaceSignature((None,), (Block(0, 1, XX),))
    pts = [(0,), (1,), (2,), (3,)]
    owner, violations = check_partition(
        sig, [Placement(0, (0,)), Placement(0, (2,)), Placement(0, (4,))], pts
    )
    assert any(v["kind"] == "outside" for v in violations)


def test_exhaustive_ok_report():
    rep = verify_exhaustive_construction(torus_node())
    assert rep.ok
    assert rep.method == "exhaustive"
    assert rep.covered_count == 8
    assert rep.placement_count == 2
    assert rep.violations == []


def test_exhaustive_periodic_window():
    lifted = lift(torus_node(), (4, 2))
    rep = verify_exhaustive_construction(
        lifted, window={0: range(0, 4), 1: range(0, 2)}, period_of_axis={0: 4, 1: 2}
    )
    assert rep.ok, rep.violations
    assert rep.covered_count == 8


def test_sampled_ok_and_seed_stable():
    c = torus_node()
    a = verify_sampled(c, 200, seed=7)
    b = verify_sampled(c, 200, seed=7)
    assert a.ok and b.ok
    assert a.samples == b.samples == 200


def test_sampled_catches_region_lie():
    # region claims the whole torus, placements cover half of it
    sig = SpaceSignature((4,), (Block(0, 1, XX),))
    broken = ExplicitNode(sig, [Placement(0, (0,))], region=full_set(sig))
    rep = verify_sampled(broken, 64, seed=1)
    assert not rep.ok
    assert any(v["kind"] == "locate-raised" for v in rep.violations)


def test_sampled_catches_disagreeing_cover():
    # region boundaries split a copy's cover between two children, so
    # locate answers differently across one cover
    sig = SpaceSignature((4,), (Block(0, 1, XX),))
    a = ExplicitNode(sig, [Placement(0, (0,))], region=ExplicitSet(sig, [(0,)]))
    b = ExplicitNode(
        sig,
        [Placement(0, (1,)), Placement(0, (3,))],
        region=ExplicitSet(sig, [(1,), (2,), (3,)]),
    )
    broken = UnionNode(sig, [a, b], region=full_set(sig))
    rep = verify_sampled(broken, 64, seed=3)
    assert not rep.ok
    assert any(v["kind"] == "cover-disagrees" for v in rep.violations)


def test_sampled_on_lifted_free_axes():
    lifted = lift(torus_node(), (4, 2))
    rep = verify_sampled(lifted, 300, seed=11)
    assert rep.ok, rep.violations


def test_exhaustive_and_sampled_agree_on_fixtures():
    for c in (torus_node(),):
        ex = verify_exhaustive_construction(c)
        sa = verify_sampled(c, 100, seed=5)
        assert ex.ok == sa.ok
