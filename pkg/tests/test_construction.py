import pytest

from tilesmith.construction import (
    ComposeNode,
    EmbedNode,
    ExplicitNode,
    ExtendNode,
    FiberNode,
    LiftNode,
    PointInHole,
    PointOutsideRegion,
    RemoveNode,
    SliceStackNode,
    UnionNode,
    compose,
    construction_from_json,
    drop_block_sig,
    lift,
    materialize,
    permute_blocks,
    to_json_dag,
    translate,
)
from tilesmith.pointsets import ExplicitSet, InfiniteSetError, full_set
from tilesmith.space import (
    Block,
    Placement,
    SpaceError,
    SpaceSignature,
    cover,
    parse_tile,
)
from tilesmith.verify import verify_exhaustive_construction

X = parse_tile("X")
XX = parse_tile("XX")
XXXX = parse_tile("XXXX")
S_TILE = parse_tile([[0, 0], [1, 0], [1, 1], [2, 1]])


def assert_locate_matches_materialize(c):
    """Every region point's locate() must name the placement that owns it
    in the materialized list."""
    owner = {}
    for pl in materialize(c):
        for q in cover(pl, c.sig):
            owner[q] = pl
    for q in c.region.iter_points():
        assert c.locate(q) == owner[tuple(q)]


def json_round_trip(c):
    back = construction_from_json(c.sig, c.to_json())
    assert sorted(back.iter_placements()) == sorted(c.iter_placements())
    return back


# Explicit


def s_torus_sig():
    return SpaceSignature((4, 2), (Block(0, 2, S_TILE),))


def s_torus_node():
    sig = s_torus_sig()
    return ExplicitNode(sig, [Placement(0, (0, 0)), Placement(0, (2, 0))])


def test_explicit_locate_picks_owning_copy():
    c = s_torus_node()
    assert c.locate((3, 1)) == Placement(0, (2, 0))
    assert c.locate((1, 1)) == Placement(0, (0, 0))


def test_explicit_rejects_overlap():
    sig = s_torus_sig()
    with pytest.raises(SpaceError):
        ExplicitNode(sig, [Placement(0, (0, 0)), Placement(0, (1, 0))])


def test_explicit_outside_region():
    sig = SpaceSignature((4,), (Block(0, 1, XX),))
    c = ExplicitNode(sig, [Placement(0, (0,))])
    with pytest.raises(PointOutsideRegion):
        c.locate((2,))


def test_explicit_round_trip_and_sweep():
    c = s_torus_node()
    assert_locate_matches_materialize(c)
    json_round_trip(c)


# Fiber


def test_fiber_torus():
    # XX copies on axis 0, one per column of Z_3, shifted per entry
    sig = SpaceSignature((4, 3), (Block(0, 1, XX), Block(1, 2, X)))
    rest = drop_block_sig(sig, 0)
    c = FiberNode(
        sig,
        0,
        [
            ((0,), ExplicitSet(rest, [(0,), (2,)])),
            ((1,), ExplicitSet(rest, [(1,)])),
        ],
    )
    assert c.locate((1, 0)) == Placement(0, (0, 0))
    assert c.locate((2, 1)) == Placement(0, (1, 1))
    assert not c.region.contains((3, 1))
    assert c.region.size() == 6
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_fiber_duplicate_offset_rejected():
    sig = SpaceSignature((4,), (Block(0, 1, XX),))
    rest = drop_block_sig(sig, 0)
    empty = ExplicitSet(rest, [()])
    with pytest.raises(SpaceError):
        FiberNode(sig, 0, [((0,), empty), ((0,), empty)])


def test_fiber_periodic_needs_window():
    sig = SpaceSignature((None,), (Block(0, 1, XX),))
    rest = drop_block_sig(sig, 0)
    c = FiberNode(sig, 0, [((0,), ExplicitSet(rest, [()]))], period=2)
    assert c.locate((7,)) == Placement(0, (6,))
    assert c.locate((-3,)) == Placement(0, (-4,))
    with pytest.raises(InfiniteSetError):
        list(c.iter_placements())
    pls = list(c.iter_placements({0: range(0, 8)}))
    assert [pl.offset for pl in pls] == [(0,), (2,), (4,), (6,)]


# SliceStack


def slice_fixture():
    # Z_2 x Z_4: slice on axis 0; row 0 tiled by XX at 0 and 2, row 1 via default
    sig = SpaceSignature((2, 4), (Block(0, 1, X), Block(1, 2, XX)))
    child_sig = drop_block_sig(sig, 0)
    row0 = ExplicitNode(child_sig, [Placement(0, (0,)), Placement(0, (2,))])
    row1 = ExplicitNode(child_sig, [Placement(0, (1,)), Placement(0, (3,))])
    return SliceStackNode(sig, 0, {(0,): row0}, default=row1)


def test_slice_descends_to_child():
    c = slice_fixture()
    assert c.locate((0, 1)) == Placement(1, (0, 0))
    assert c.locate((1, 2)) == Placement(1, (1, 1))
    assert c.locate((1, 0)) == Placement(1, (1, 3))  # wrapped copy at 3
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_slice_block_index_remap():
    # sliced block in the middle: child block indices shift around it
    sig = SpaceSignature((4, 2, 4), (Block(0, 1, XX), Block(1, 2, X), Block(2, 3, XX)))
    child_sig = drop_block_sig(sig, 1)
    child = ExplicitNode(
        child_sig,
        # columns 0,1 by block-0 copies, columns 2,3 by block-1 copies
        [Placement(0, (r, c)) for r in (0, 2) for c in (0, 1)]
        + [Placement(1, (r, 2)) for r in range(4)],
    )
    c = SliceStackNode(sig, 1, {}, default=child)
    assert c.locate((1, 0, 1)) == Placement(0, (0, 0, 1))
    assert c.locate((0, 1, 3)) == Placement(2, (0, 1, 2))
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_slice_periodic_on_free_axis():
    sig = SpaceSignature((None, 2), (Block(0, 1, X), Block(1, 2, XX)))
    child_sig = drop_block_sig(sig, 0)
    tiled = ExplicitNode(child_sig, [Placement(0, (0,))])
    c = SliceStackNode(sig, 0, {(0,): tiled, (1,): tiled}, period=2)
    assert c.locate((9, 1)) == Placement(1, (9, 0))
    pls = list(c.iter_placements({0: range(-2, 2)}))
    assert len(pls) == 4
    with pytest.raises(InfiniteSetError):
        list(c.iter_placements())


def test_slice_missing_value_is_outside():
    sig = SpaceSignature((2, 4), (Block(0, 1, X), Block(1, 2, XX)))
    child_sig = drop_block_sig(sig, 0)
    row0 = ExplicitNode(child_sig, [Placement(0, (0,)), Placement(0, (2,))])
    c = SliceStackNode(sig, 0, {(0,): row0})
    with pytest.raises(PointOutsideRegion):
        c.locate((1, 0))
    assert not c.region.contains((1, 3))


def test_slice_value_set_limits_default():
    # default covers rows 0 and 2 only; row 1 stays outside the region
    sig = SpaceSignature((3, 4), (Block(0, 1, X), Block(1, 2, XX)))
    child_sig = drop_block_sig(sig, 0)
    row = ExplicitNode(child_sig, [Placement(0, (0,)), Placement(0, (2,))])
    c = SliceStackNode(sig, 0, {}, default=row, values={(0,), (2,)})
    assert c.region.contains((0, 1))
    assert not c.region.contains((1, 1))
    assert c.region.size() == 8
    assert len(materialize(c)) == 4
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_slice_case_outside_value_set_rejected():
    sig = SpaceSignature((3, 4), (Block(0, 1, X), Block(1, 2, XX)))
    child_sig = drop_block_sig(sig, 0)
    row = ExplicitNode(child_sig, [Placement(0, (0,)), Placement(0, (2,))])
    with pytest.raises(SpaceError):
        SliceStackNode(sig, 0, {(1,): row}, values={(0,), (2,)})


# Union / Remove


def test_union_probes_then_catch_all():
    sig = SpaceSignature((4,), (Block(0, 1, XX),))
    a = ExplicitNode(sig, [Placement(0, (0,))])
    b = ExplicitNode(sig, [Placement(0, (2,))])
    c = UnionNode(sig, [a, b])
    assert c.locate((1,)) == Placement(0, (0,))
    assert c.locate((2,)) == Placement(0, (2,))
    assert c.region.size() == 4
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_remove_carves_hole():
    c = s_torus_node()
    r = RemoveNode(c.sig, c, [Placement(0, (2, 0))])
    assert r.locate((1, 1)) == Placement(0, (0, 0))
    with pytest.raises(PointInHole):
        r.locate((3, 1))
    assert r.region.size() == 4
    assert sorted(r.iter_placements()) == [Placement(0, (0, 0))]
    assert_locate_matches_materialize(r)
    json_round_trip(r)


# Extend / Embed


def test_extend_appends_masked_blocks():
    base_sig = SpaceSignature((4,), (Block(0, 1, XX),))
    base = ExplicitNode(base_sig, [Placement(0, (0,)), Placement(0, (2,))])
    sig = SpaceSignature((4, 3), (Block(0, 1, XX), Block(1, 2, X)))
    c = ExtendNode(sig, base, [frozenset({(0,), (2,)})])
    assert c.locate((1, 2)) == Placement(0, (0, 2))
    with pytest.raises(PointOutsideRegion):
        c.locate((1, 1))
    assert c.region.size() == 8
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_embed_permutes_blocks_and_translates():
    base_sig = SpaceSignature((4, 3), (Block(0, 1, XX), Block(1, 2, X)))
    base = ExplicitNode(
        base_sig,
        [Placement(0, (0, v)) for v in range(3)] + [Placement(0, (2, v)) for v in range(3)],
    )
    c = permute_blocks(base, (1, 0), offset=(1, 1))
    assert c.sig.axes == (3, 4)
    # child block 0 (the XX axis) landed at parent position 1
    assert c.sig.blocks[1].tile == XX
    pl = c.locate((0, 3))
    assert pl.block == 1
    assert (0, 3) in cover(pl, c.sig)
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_translate_wraps_offsets():
    c = translate(s_torus_node(), (1, 1))
    assert c.locate((0, 1)) == Placement(0, (3, 1))
    assert_locate_matches_materialize(c)
    json_round_trip(c)


# Compose


def toy_outer_inner():
    """Smallest genuine substitution: hosts shaped Z_2 ({0,1}) carrying
    singleton tiles, inner carriers producing host copies."""
    sig_out = SpaceSignature((2, 2, 2), (Block(0, 1, X), Block(1, 2, X), Block(2, 3, X)))
    outer = ExplicitNode(
        sig_out,
        [Placement(0, (a, b, c)) for a in range(2) for b in range(2) for c in range(2)],
        region=full_set(sig_out),
    )
    sig_in = SpaceSignature((2, 2), (Block(0, 1, X), Block(1, 2, XX)))
    inner = ExplicitNode(
        sig_in,
        [Placement(1, (0, 0)), Placement(0, (1, 0)), Placement(0, (1, 1))],
        region=full_set(sig_in),
    )
    return outer, inner


def test_compose_toy_all_singletons():
    outer, inner = toy_outer_inner()
    c = compose(outer, inner, d=2, v=1)
    assert c.sig.axes == (2,) * 5
    rep = verify_exhaustive_construction(c)
    assert rep.ok, rep.violations
    assert rep.covered_count == 32
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_compose_nontrivial_tiles():
    sig_out = SpaceSignature((2, 4), (Block(0, 1, X), Block(1, 2, XX)))
    outer = ExplicitNode(
        sig_out,
        [Placement(1, (0, 0)), Placement(1, (0, 2))]
        + [Placement(0, (1, v)) for v in range(4)],
        region=full_set(sig_out),
    )
    sig_in = SpaceSignature((4, 4), (Block(0, 1, XX), Block(1, 2, XXXX)))
    inner = ExplicitNode(
        sig_in,
        [Placement(1, (0, 0)), Placement(1, (1, 0))]
        + [Placement(0, (2, v)) for v in range(4)],
        region=full_set(sig_in),
    )
    c = compose(outer, inner, d=1, v=1)
    assert c.sig.axes == (2, 4, 4)
    rep = verify_exhaustive_construction(c)
    assert rep.ok, rep.violations
    assert rep.covered_count == 32 and rep.placement_count == 20
    assert_locate_matches_materialize(c)
    json_round_trip(c)


def test_compose_d_zero_returns_inner():
    outer, inner = toy_outer_inner()
    assert compose(outer, inner, d=0, v=1) is inner


def test_compose_shape_mismatch():
    outer, _ = toy_outer_inner()
    # carrier tile X.X does not match the Z_2 host shape XX
    sig_in = SpaceSignature((2, 4), (Block(0, 1, X), Block(1, 2, parse_tile("X.X"))))
    bad = ExplicitNode(
        sig_in,
        [Placement(1, (0, 0)), Placement(1, (0, 1))]
        + [Placement(0, (1, v)) for v in range(4)],
        region=full_set(sig_in),
    )
    with pytest.raises(SpaceError):
        compose(outer, bad, d=2, v=1)


# Lift


def test_lift_identity_is_noop():
    c = s_torus_node()
    assert lift(c, (None, None)) is c


def test_lift_torus_tiling_to_plane():
    c = s_torus_node()
    lifted = lift(c, (4, 2))
    assert lifted.sig.axes == (None, None)
    assert lifted.sig.blocks[0].tile == S_TILE
    assert lifted.locate((3, 1)) == Placement(0, (2, 0))
    assert lifted.locate((103, -7)) == Placement(0, (102, -8))
    pls = list(lifted.iter_placements({0: range(0, 4), 1: range(0, 2)}))
    assert sorted(pl.offset for pl in pls) == [(0, 0), (2, 0)]


def test_lift_rejects_noninjective_reduction():
    # {0,3} collapses mod 3: the fiber translates would not be disjoint
    c = ExplicitNode(
        SpaceSignature((3,), (Block(0, 1, X),)),
        [Placement(0, (v,)) for v in range(3)],
    )
    with pytest.raises(SpaceError):
        lift(c, (3,), tiles={0: parse_tile("X..X")})


def test_lift_needs_window_to_enumerate():
    lifted = lift(s_torus_node(), (4, 2))
    with pytest.raises(InfiniteSetError):
        list(lifted.iter_placements())
    with pytest.raises(InfiniteSetError):
        list(lifted.iter_placements({0: range(0, 4)}))  # axis 1 missing


def test_lift_json_round_trip():
    lifted = lift(s_torus_node(), (4, 2))
    back = construction_from_json(lifted.sig, lifted.to_json())
    w = {0: range(0, 8), 1: range(0, 4)}
    assert sorted(back.iter_placements(w)) == sorted(lifted.iter_placements(w))
    assert back.locate((103, -7)) == Placement(0, (102, -8))


# materialize


def test_materialize_sorted_and_limited():
    c = s_torus_node()
    pls = materialize(c)
    assert pls == sorted(pls)
    with pytest.raises(InfiniteSetError):
        materialize(c, limit=3)


def test_materialize_window_on_free_axes():
    lifted = lift(s_torus_node(), (4, 2))
    pls = materialize(lifted, window={0: range(0, 4), 1: range(0, 2)})
    assert len(pls) == 2


# dag serialization


def test_dag_round_trip_writes_shared_child_once():
    sig = SpaceSignature((3, 4), (Block(0, 1, X), Block(1, 2, XXXX)))
    child_sig = drop_block_sig(sig, 0)
    row = ExplicitNode(child_sig, [Placement(0, (0,))])
    c = SliceStackNode(sig, 0, {(0,): row, (1,): row, (2,): row})
    data = to_json_dag(c)
    assert data["kind"] == "dag"
    assert sum(1 for n in data["nodes"] if n["kind"] == "explicit") == 1
    back = construction_from_json(sig, data)
    assert sorted(back.iter_placements()) == sorted(c.iter_placements())
    kids = back.children
    assert kids[(0,)] is kids[(1,)] is kids[(2,)]


def test_dag_ref_outside_envelope_rejected():
    sig = SpaceSignature((3, 4), (Block(0, 1, X), Block(1, 2, XXXX)))
    with pytest.raises(SpaceError):
        construction_from_json(sig, {"kind": "ref", "id": 0})
