import pytest

from tilesmith.pointsets import (
    DiffSet,
    ExplicitSet,
    InfiniteSetError,
    ProductSet,
    UnionSet,
    difference,
    empty_set,
    full_set,
    pointset_from_json,
)
from tilesmith.space import Block, SpaceError, SpaceSignature, parse_tile

X = parse_tile("X")
XX = parse_tile("XX")


def sig3():
    # Z_3 x Z_3 x Z_2, three single-axis blocks
    return SpaceSignature(
        (3, 3, 2), (Block(0, 1, X), Block(1, 2, X), Block(2, 3, XX))
    )


def test_full_and_empty():
    sig = sig3()
    f = full_set(sig)
    assert f.size() == 18
    assert f.contains((2, 2, 1))
    assert len(list(f.iter_points())) == 18
    e = empty_set(sig)
    assert e.size() == 0
    assert not e.contains((0, 0, 0))


def test_product_set_masks():
    sig = sig3()
    s = ProductSet(sig, ({(0,), (2,)}, None, {(1,)}))
    assert s.size() == 2 * 3 * 1
    assert s.contains((0, 1, 1))
    assert not s.contains((1, 1, 1))
    assert not s.contains((0, 1, 0))
    pts = list(s.iter_points())
    assert len(pts) == 6 and pts == sorted(pts)


def test_product_set_arity_check():
    with pytest.raises(SpaceError):
        ProductSet(sig3(), (None, None))


def test_product_set_free_block_size_raises():
    sig = SpaceSignature((None,), (Block(0, 1, XX),))
    s = full_set(sig)
    assert s.contains((12345,))
    with pytest.raises(InfiniteSetError):
        s.size()


def test_explicit_set():
    sig = sig3()
    s = ExplicitSet(sig, [(0, 0, 0), (1, 2, 1)])
    assert s.size() == 2
    assert s.contains((1, 2, 1))
    assert list(s.iter_points()) == [(0, 0, 0), (1, 2, 1)]


def test_union_and_diff():
    sig = sig3()
    a = ExplicitSet(sig, [(0, 0, 0), (0, 0, 1)])
    b = ExplicitSet(sig, [(1, 0, 0)])
    u = UnionSet(sig, (a, b))
    assert u.size() == 3
    assert u.contains((1, 0, 0)) and u.contains((0, 0, 1))
    d = difference(full_set(sig), u)
    assert isinstance(d, DiffSet)
    assert d.size() == 15
    assert not d.contains((0, 0, 0))
    assert d.contains((2, 2, 1))
    assert sorted(d.iter_points()) == sorted(
        set(full_set(sig).iter_points()) - set(u.iter_points())
    )


def test_extended_product():
    sig = sig3()
    small = SpaceSignature((3,), (Block(0, 1, X),))
    s = ProductSet(small, ({(1,)},))
    masks = (None, frozenset({(0,)}))
    big = s.extended(sig, masks)
    assert big.size() == 1 * 3 * 1
    assert big.contains((1, 2, 0))
    assert not big.contains((1, 2, 1))


def test_extended_explicit():
    sig = sig3()
    small = SpaceSignature((3,), (Block(0, 1, X),))
    s = ExplicitSet(small, [(2,)])
    big = s.extended(sig, (frozenset({(0,), (1,)}), None))
    assert big.size() == 2 * 2
    assert big.contains((2, 1, 0))
    assert not big.contains((2, 2, 0))


def test_pointset_json_round_trip():
    sig = sig3()
    sets = [
        full_set(sig),
        ProductSet(sig, ({(0,)}, None, {(0,), (1,)})),
        ExplicitSet(sig, [(0, 1, 0), (2, 2, 1)]),
        UnionSet(sig, (ExplicitSet(sig, [(0, 0, 0)]), ExplicitSet(sig, [(1, 1, 1)]))),
        difference(full_set(sig), ExplicitSet(sig, [(0, 0, 0)])),
    ]
    for s in sets:
        back = pointset_from_json(sig, s.to_json())
        assert sorted(back.iter_points()) == sorted(s.iter_points())
        assert back.size() == s.size()


def test_pointset_json_rejects_unknown_kind():
    with pytest.raises(SpaceError):
        pointset_from_json(sig3(), {"kind": "nope"})
